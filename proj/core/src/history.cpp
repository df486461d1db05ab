#include "saptune/history.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json_codec.hpp"

namespace saptune {
namespace {

// Holds an exclusive flock for the lifetime of one append.
class LockedAppender {
 public:
  explicit LockedAppender(const std::filesystem::path& path)
      : fd_(::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644)) {
    if (fd_ < 0) throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw std::runtime_error("cannot lock " + path.string());
    }
  }
  ~LockedAppender() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  LockedAppender(const LockedAppender&) = delete;
  LockedAppender& operator=(const LockedAppender&) = delete;

  void write_all(const std::string& data) {
    std::size_t done = 0;
    while (done < data.size()) {
      const auto n = ::write(fd_, data.data() + done, data.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw std::runtime_error(std::string("history append failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

 private:
  int fd_;
};

}  // namespace

HistoryStore::HistoryStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void HistoryStore::append(const EvaluationRecord& record) const {
  LockedAppender out(path_);
  out.write_all(serialize_record(record) + "\n");
}

std::vector<EvaluationRecord> HistoryStore::load() const {
  if (!std::filesystem::exists(path_)) return {};
  return read(path_);
}

std::vector<EvaluationRecord> HistoryStore::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open history " + path.string());
  std::vector<EvaluationRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(parse_record(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

std::string serialize_record(const EvaluationRecord& record) { return detail::to_json(record).dump(); }

EvaluationRecord parse_record(const std::string& line) { return detail::record_from_json(nlohmann::json::parse(line)); }

std::string record_key(const TaskDescriptor& task, const Configuration& config) {
  std::ostringstream key;
  key.precision(17);
  key << task.label << '|' << task.m << '|' << task.n << '|' << task.seed << '|' << to_string(config.sap_algorithm)
      << '|' << to_string(config.sketching_operator) << '|' << config.sampling_factor << '|' << config.vec_nnz << '|'
      << config.safety_factor;
  return key.str();
}

}  // namespace saptune
