#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "saptune/tuner.hpp"

namespace saptune {

/// Bandit arm for one (sap_algorithm, sketching_operator) pair.
struct CategoryCell {
  std::size_t index = 0;  // see cell_index
  std::size_t pulls = 0;  // samples in the cell, source and target
  std::optional<double> reward;
  bool allowed = true;
};

/// Index of the selected entry of cells. Unpulled allowed cells win in
/// order; otherwise argmax of reward + c * sqrt(log t / pulls). A missing
/// reward counts as 0. Throws if no cell is allowed.
std::size_t ucb_select(const std::vector<CategoryCell>& cells, std::size_t t, double c);

/// reward + c * sqrt(log t / pulls); infinite when pulls == 0.
double ucb_score(double reward, std::size_t pulls, std::size_t t, double c);

/// Per-cell reward: negative mean of the per-task-centred log objective,
/// min-max normalized over the cells that have data. Records are grouped by
/// task before centring.
std::array<std::optional<double>, kNumCells> cell_rewards(const std::vector<const EvaluationRecord*>& records);

struct TlaOptions {
  TunerOptions tuner;
  double exploration = 4.0;
};

/// Transfer-learning tuning over a target problem warm-started by source
/// history: reference, source best, then UCB cell choice with an LCM over the
/// ordinal parameters of that cell.
TuningResult tla_tune(LsProblem& target, const std::vector<EvaluationRecord>& source, const TuningSpace& space,
                      const ConstantParams& constants, std::size_t budget, std::uint64_t seed,
                      const TlaOptions& options = {});

/// Lowest objective in the history, preferring records that did not fail; ties
/// go to the earliest timestamp, then to file order.
const EvaluationRecord& source_best(const std::vector<EvaluationRecord>& source);

}  // namespace saptune
