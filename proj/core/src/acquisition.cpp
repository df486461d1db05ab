#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "saptune/paramspace.hpp"
#include "saptune/surrogate.hpp"

namespace saptune {

double expected_improvement(double mean, double variance, double incumbent) {
  const double gain = incumbent - mean;
  if (!(variance > 0.0)) return std::max(gain, 0.0);
  const double sd = std::sqrt(variance);
  const double z = gain / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, gain * cdf + sd * pdf);
}

namespace {

struct Scored {
  std::vector<double> point;
  double ei = 0.0;
  double mean = 0.0;
  bool excluded = false;
};

bool better(const Scored& a, const Scored& b) {
  if (a.ei != b.ei) return a.ei > b.ei;
  return a.mean < b.mean;
}

}  // namespace

AcquisitionResult maximize_expected_improvement(const PredictFunction& predict, const SnapFunction& snap,
                                                std::size_t dim, double incumbent, Rng& rng,
                                                const ExcludeFunction& exclude, const AcquisitionOptions& options) {
  auto project = [&](std::vector<double> p) {
    for (double& v : p) v = std::clamp(v, 0.0, 1.0);
    return snap ? snap(p) : p;
  };
  auto is_excluded = [&](const std::vector<double>& p) { return exclude ? exclude(p) : false; };

  std::vector<Scored> pool;
  for (auto& raw : latin_hypercube(std::max<std::size_t>(options.candidates, 1), dim, rng)) {
    Scored s;
    s.point = project(std::move(raw));
    const GpPrediction pr = predict(s.point);
    s.mean = pr.mean;
    s.ei = pr.variance;  // rescored below once the incumbent is known
    s.excluded = is_excluded(s.point);
    pool.push_back(std::move(s));
  }
  if (std::isnan(incumbent)) {
    incumbent = std::numeric_limits<double>::infinity();
    for (const auto& s : pool) incumbent = std::min(incumbent, s.mean);
  }
  for (auto& s : pool) s.ei = expected_improvement(s.mean, s.ei, incumbent);

  auto score = [&](std::vector<double> p) {
    Scored s;
    s.point = std::move(p);
    const GpPrediction pr = predict(s.point);
    s.mean = pr.mean;
    s.ei = expected_improvement(pr.mean, pr.variance, incumbent);
    s.excluded = is_excluded(s.point);
    return s;
  };

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return better(pool[a], pool[b]); });

  std::optional<Scored> best;
  std::vector<std::vector<double>> started;
  for (std::size_t idx : order) {
    if (started.size() >= options.local_starts) break;
    const Scored& seed = pool[idx];
    if (seed.excluded) continue;
    if (std::find(started.begin(), started.end(), seed.point) != started.end()) continue;
    started.push_back(seed.point);

    Scored current = seed;
    double step = options.initial_step;
    int budget = 400;
    while (step >= options.min_step && budget > 0) {
      bool moved = false;
      for (std::size_t d = 0; d < dim && !moved; ++d) {
        for (double sign : {1.0, -1.0}) {
          std::vector<double> trial = current.point;
          trial[d] += sign * step;
          trial = project(std::move(trial));
          if (trial == current.point) continue;
          --budget;
          Scored cand = score(std::move(trial));
          if (!cand.excluded && better(cand, current)) {
            current = std::move(cand);
            moved = true;
            break;
          }
        }
      }
      if (!moved) step *= 0.5;
    }
    if (!best || better(current, *best)) best = std::move(current);
  }

  if (!best) {
    // Every candidate is excluded; fall back to the best of them.
    best = pool[order.front()];
  }
  return {best->point, best->ei, best->mean, incumbent};
}

}  // namespace saptune
