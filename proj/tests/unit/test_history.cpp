#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include "saptune/history.hpp"

using namespace saptune;

namespace {

EvaluationRecord sample_record(std::size_t i) {
  EvaluationRecord r;
  r.iteration = i;
  r.role = i == 1 ? "reference" : "search";
  r.task = {1000, 20, "GA", 9, std::nullopt};
  r.config = {SapAlgorithm::SVD_LSQR, SketchKind::LessUniform, 3.0 + 0.1 * static_cast<double>(i), 7, 2};
  r.seeds = {10, 11};
  r.wall_clocks = {0.125, 0.1 / 3.0};
  r.arfes = {1e-7, std::numeric_limits<double>::quiet_NaN()};
  r.mean_wall_clock = (0.125 + 0.1 / 3.0) / 2.0;
  r.mean_arfe = 1e-7;
  r.failed = i % 2 == 0;
  r.objective_value = r.failed ? 2.0 * r.mean_wall_clock : r.mean_wall_clock;
  r.timestamp_ms = 1700000000000 + static_cast<std::int64_t>(i);
  if (r.failed) r.error = "stub";
  return r;
}

std::filesystem::path temp_file(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST(History, SerializeRoundTripIsLossless) {
  for (std::size_t i = 1; i <= 4; ++i) {
    const EvaluationRecord r = sample_record(i);
    EXPECT_EQ(parse_record(serialize_record(r)), r);
  }
}

TEST(History, FieldOrderIsFixed) {
  const std::string line = serialize_record(sample_record(2));
  const char* keys[] = {"\"iteration\"", "\"role\"", "\"task\"", "\"config\"", "\"seeds\"",
                        "\"wall_clocks\"", "\"arfes\"", "\"mean_wall_clock\"", "\"mean_arfe\"", "\"failed\"",
                        "\"objective_value\"", "\"timestamp_ms\"", "\"error\""};
  std::size_t pos = 0;
  for (const char* k : keys) {
    const std::size_t at = line.find(k);
    ASSERT_NE(at, std::string::npos) << k;
    EXPECT_GE(at, pos) << k;
    pos = at;
  }
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_NE(line.find("null"), std::string::npos);
}

TEST(History, StoreAppendAndLoad) {
  const auto path = temp_file("saptune_history_test.jsonl");
  HistoryStore store(path);
  std::vector<EvaluationRecord> written;
  for (std::size_t i = 1; i <= 5; ++i) {
    written.push_back(sample_record(i));
    store.append(written.back());
  }
  EXPECT_EQ(store.load(), written);
  EXPECT_EQ(HistoryStore::read(path), written);
  std::filesystem::remove(path);
}

TEST(History, MalformedLineThrows) {
  const auto path = temp_file("saptune_history_bad.jsonl");
  {
    std::ofstream out(path);
    out << serialize_record(sample_record(1)) << "\n{not json\n";
  }
  EXPECT_ANY_THROW(HistoryStore::read(path));
  std::filesystem::remove(path);
}

TEST(History, RecordKeySeparatesTasksAndConfigs) {
  const EvaluationRecord a = sample_record(1);
  EvaluationRecord b = a;
  EXPECT_EQ(record_key(a.task, a.config), record_key(b.task, b.config));
  b.config.vec_nnz += 1;
  EXPECT_NE(record_key(a.task, a.config), record_key(b.task, b.config));
  b = a;
  b.task.seed += 1;
  EXPECT_NE(record_key(a.task, a.config), record_key(b.task, b.config));
}
