#include "optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace saptune::detail {

BoxResult minimize_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                       const Eigen::VectorXd& upper, int max_iterations, double tolerance) {
  auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v.cwiseMax(lower).cwiseMin(upper); };
  constexpr double kLambdaMin = 1e-10;
  constexpr double kLambdaMax = 1e10;
  constexpr double kArmijo = 1e-4;
  constexpr std::size_t kMemory = 10;

  Eigen::VectorXd x = project(x0);
  Eigen::VectorXd g(x.size());
  double fx = f(x, g);
  if (!std::isfinite(fx)) return {x, fx, 0};

  std::deque<double> recent{fx};
  double step_scale = project(x - g).cwiseAbs().maxCoeff() > 0.0
                          ? 1.0 / std::max((project(x - g) - x).cwiseAbs().maxCoeff(), 1e-12)
                          : 1.0;
  step_scale = std::clamp(step_scale, kLambdaMin, kLambdaMax);

  int it = 0;
  Eigen::VectorXd g_new(x.size());
  for (; it < max_iterations; ++it) {
    if ((project(x - g) - x).cwiseAbs().maxCoeff() < tolerance) break;
    const Eigen::VectorXd d = project(x - step_scale * g) - x;
    const double slope = g.dot(d);
    const double reference = *std::max_element(recent.begin(), recent.end());

    double a = 1.0;
    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + a * d;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= reference + kArmijo * a * slope) {
        accepted = true;
        break;
      }
      a *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sty = s.dot(y);
    step_scale = sty > 0.0 ? std::clamp(s.squaredNorm() / sty, kLambdaMin, kLambdaMax) : kLambdaMax;

    const double improvement = fx - f_new;
    x = x_new;
    g = g_new;
    fx = f_new;
    recent.push_back(fx);
    if (recent.size() > kMemory) recent.pop_front();
    if (std::abs(improvement) < 1e-10 * (1.0 + std::abs(fx)) && s.cwiseAbs().maxCoeff() < tolerance) break;
  }
  return {x, fx, it};
}

}  // namespace saptune::detail
