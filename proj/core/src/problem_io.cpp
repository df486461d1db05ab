#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "saptune/problems.hpp"

namespace saptune {
namespace {

constexpr std::array<char, 8> kMagic = {'S', 'A', 'P', 'L', 'S', 'Q', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<unsigned char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes.data()), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), 8);
  if (!in) throw std::runtime_error("truncated problem file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    for (char& c : line) {
      if (c == ',' || c == ';') c = ' ';
    }
    std::istringstream fields(line);
    std::vector<double> row;
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      if (used != token.size()) throw std::runtime_error("bad number '" + token + "' in " + path.string());
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("ragged rows in " + path.string());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("no data in " + path.string());
  return rows;
}

}  // namespace

void save_problem(const LsProblem& problem, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, problem.rows());
  put_u64(out, problem.cols());
  put_u64(out, problem.label.size());
  out.write(problem.label.data(), static_cast<std::streamsize>(problem.label.size()));
  put_u64(out, problem.seed);
  for (Eigen::Index i = 0; i < problem.A.rows(); ++i) {
    for (Eigen::Index j = 0; j < problem.A.cols(); ++j) put_f64(out, problem.A(i, j));
  }
  for (Eigen::Index i = 0; i < problem.b.size(); ++i) put_f64(out, problem.b(i));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

LsProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error(path.string() + " is not a saptune problem file");
  const auto m = get_u64(in);
  const auto n = get_u64(in);
  const auto label_len = get_u64(in);
  if (label_len > 4096) throw std::runtime_error("corrupt label length in " + path.string());
  std::string label(label_len, '\0');
  in.read(label.data(), static_cast<std::streamsize>(label_len));
  const auto seed = get_u64(in);
  DenseMatrix A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = get_f64(in);
  }
  Vector b(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = get_f64(in);
  LsProblem problem = make_problem(std::move(A), std::move(b), std::move(label));
  problem.seed = seed;
  return problem;
}

DenseMatrix read_dense_text(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  DenseMatrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return M;
}

LsProblem import_problem_text(const std::filesystem::path& matrix_path,
                              const std::optional<std::filesystem::path>& rhs_path) {
  DenseMatrix data = read_dense_text(matrix_path);
  if (rhs_path) {
    const DenseMatrix rhs = read_dense_text(*rhs_path);
    if (rhs.cols() != 1 && rhs.rows() != 1) throw std::runtime_error("rhs file must hold a single vector");
    Vector b = Eigen::Map<const Vector>(rhs.data(), rhs.size());
    return make_problem(std::move(data), std::move(b), matrix_path.stem().string());
  }
  if (data.cols() < 2) throw std::runtime_error("matrix file needs at least two columns when b is taken from it");
  Vector b = data.col(data.cols() - 1);
  DenseMatrix A = data.leftCols(data.cols() - 1);
  return make_problem(std::move(A), std::move(b), matrix_path.stem().string());
}

}  // namespace saptune
