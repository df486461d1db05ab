#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "optimize.hpp"
#include "saptune/surrogate.hpp"

namespace saptune {

namespace {

constexpr double kJitterRatio = 1e-8;
constexpr double kMixingBound = 3.0;
constexpr double kNoiseMax = 2.0;

struct Layout {
  std::size_t tasks;
  std::size_t latents;
  std::size_t dim;

  Eigen::Index size() const { return static_cast<Eigen::Index>(tasks * latents + latents * dim + tasks); }
  Eigen::Index mixing(std::size_t task, std::size_t q) const { return static_cast<Eigen::Index>(task * latents + q); }
  Eigen::Index lengthscale(std::size_t q, std::size_t d) const {
    return static_cast<Eigen::Index>(tasks * latents + q * dim + d);
  }
  Eigen::Index noise(std::size_t task) const {
    return static_cast<Eigen::Index>(tasks * latents + latents * dim + task);
  }
};

LcmHyperparameters unpack(const Layout& lay, const Vector& theta) {
  LcmHyperparameters hp;
  hp.mixing.resize(static_cast<Eigen::Index>(lay.tasks), static_cast<Eigen::Index>(lay.latents));
  for (std::size_t i = 0; i < lay.tasks; ++i) {
    for (std::size_t q = 0; q < lay.latents; ++q) {
      hp.mixing(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) = theta(lay.mixing(i, q));
    }
  }
  hp.lengthscales.assign(lay.latents, std::vector<double>(lay.dim));
  for (std::size_t q = 0; q < lay.latents; ++q) {
    for (std::size_t d = 0; d < lay.dim; ++d) hp.lengthscales[q][d] = std::exp(theta(lay.lengthscale(q, d)));
  }
  hp.noise_variances.resize(lay.tasks);
  for (std::size_t i = 0; i < lay.tasks; ++i) hp.noise_variances[i] = std::exp(theta(lay.noise(i)));
  return hp;
}

// Unit-variance squared-exponential latent kernel.
Eigen::MatrixXd latent_kernel(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2, const std::vector<double>& ell) {
  Eigen::MatrixXd K(X1.rows(), X2.rows());
  for (Eigen::Index i = 0; i < X1.rows(); ++i) {
    for (Eigen::Index j = 0; j < X2.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index d = 0; d < X1.cols(); ++d) {
        const double diff = X1(i, d) - X2(j, d);
        s += diff * diff / ell[static_cast<std::size_t>(d)];
      }
      K(i, j) = std::exp(-s);
    }
  }
  return K;
}

struct Assembled {
  std::vector<Eigen::MatrixXd> latent;  // K_q
  Eigen::MatrixXd K;                    // with noise and jitter
};

Assembled assemble(const Eigen::MatrixXd& X, const std::vector<std::size_t>& task_of, const LcmHyperparameters& hp) {
  const Eigen::Index N = X.rows();
  Assembled out;
  out.K = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t q = 0; q < hp.lengthscales.size(); ++q) {
    out.latent.push_back(latent_kernel(X, X, hp.lengthscales[q]));
    const auto qi = static_cast<Eigen::Index>(q);
    for (Eigen::Index i = 0; i < N; ++i) {
      for (Eigen::Index j = 0; j < N; ++j) {
        out.K(i, j) += hp.mixing(static_cast<Eigen::Index>(task_of[static_cast<std::size_t>(i)]), qi) *
                       hp.mixing(static_cast<Eigen::Index>(task_of[static_cast<std::size_t>(j)]), qi) *
                       out.latent.back()(i, j);
      }
    }
  }
  const double jitter = kJitterRatio * std::max(out.K.diagonal().mean(), 1e-12);
  for (Eigen::Index i = 0; i < N; ++i) {
    out.K(i, i) += hp.noise_variances[task_of[static_cast<std::size_t>(i)]] + jitter;
  }
  return out;
}

double negative_log_likelihood(const Layout& lay, const Eigen::MatrixXd& X, const std::vector<std::size_t>& task_of,
                               const Vector& y, const Vector& theta, Vector* gradient) {
  const LcmHyperparameters hp = unpack(lay, theta);
  const Assembled a = assemble(X, task_of, hp);
  const Eigen::Index N = X.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(a.K);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Vector alpha = llt.solve(y);
  const Eigen::MatrixXd L = llt.matrixL();
  const double nll = 0.5 * y.dot(alpha) + L.diagonal().array().log().sum() +
                     0.5 * static_cast<double>(N) * std::log(2.0 * std::numbers::pi);
  if (!std::isfinite(nll)) return std::numeric_limits<double>::infinity();
  if (gradient == nullptr) return nll;

  const Eigen::MatrixXd W = llt.solve(Eigen::MatrixXd::Identity(N, N)) - alpha * alpha.transpose();
  gradient->setZero(lay.size());
  auto task = [&](Eigen::Index n) { return static_cast<Eigen::Index>(task_of[static_cast<std::size_t>(n)]); };
  for (std::size_t q = 0; q < lay.latents; ++q) {
    const auto qi = static_cast<Eigen::Index>(q);
    const Eigen::MatrixXd M = W.cwiseProduct(a.latent[q]);
    Vector coef(N);
    for (Eigen::Index n = 0; n < N; ++n) coef(n) = hp.mixing(task(n), qi);
    const Vector v = M * coef;
    for (Eigen::Index n = 0; n < N; ++n) (*gradient)(lay.mixing(task_of[static_cast<std::size_t>(n)], q)) += v(n);

    for (std::size_t d = 0; d < lay.dim; ++d) {
      const auto di = static_cast<Eigen::Index>(d);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < N; ++j) {
          const double diff = X(i, di) - X(j, di);
          acc += M(i, j) * coef(i) * coef(j) * diff * diff;
        }
      }
      (*gradient)(lay.lengthscale(q, d)) = 0.5 * acc / hp.lengthscales[q][d];
    }
  }
  for (Eigen::Index n = 0; n < N; ++n) {
    const std::size_t t = task_of[static_cast<std::size_t>(n)];
    (*gradient)(lay.noise(t)) += 0.5 * hp.noise_variances[t] * W(n, n);
  }
  return nll;
}

}  // namespace

LcmModel lcm_fit(const std::vector<LcmTaskData>& data, const GpFitOptions& options) {
  if (data.empty()) throw std::invalid_argument("lcm: no tasks");
  std::size_t dim = 0;
  std::size_t total = 0;
  for (const auto& task : data) {
    if (task.X.rows() != task.y.size()) throw std::invalid_argument("lcm: point and value counts differ");
    if (task.X.rows() == 0) continue;
    if (dim == 0) dim = static_cast<std::size_t>(task.X.cols());
    if (static_cast<std::size_t>(task.X.cols()) != dim) throw std::invalid_argument("lcm: dimension mismatch");
    if (!task.X.allFinite() || !task.y.allFinite()) throw std::invalid_argument("lcm: non-finite training data");
    total += static_cast<std::size_t>(task.X.rows());
  }
  if (total == 0) throw std::invalid_argument("lcm: no training points");

  const std::size_t T = data.size();
  LcmModel model;
  model.dim_ = dim;
  model.X_.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dim));
  Vector y(static_cast<Eigen::Index>(total));

  // Pooled statistics stand in for tasks that have no data.
  Vector all(static_cast<Eigen::Index>(total));
  {
    Eigen::Index row = 0;
    for (const auto& task : data) {
      for (Eigen::Index i = 0; i < task.X.rows(); ++i) all(row++) = task.y(i);
    }
  }
  auto stats = [](const Vector& v, double fallback_scale) {
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().mean());
    return std::pair{mean, sd > 1e-12 * (1.0 + std::abs(mean)) ? sd : fallback_scale};
  };
  const auto [pooled_mean, pooled_scale] = stats(all, 1.0);

  Eigen::Index row = 0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& task = data[t];
    double mean = pooled_mean;
    double scale = pooled_scale;
    if (task.X.rows() > 0) std::tie(mean, scale) = stats(task.y, pooled_scale);
    model.task_mean_.push_back(mean);
    model.task_scale_.push_back(scale);
    for (Eigen::Index i = 0; i < task.X.rows(); ++i) {
      model.X_.row(row) = task.X.row(i);
      y(row) = (task.y(i) - mean) / scale;
      model.task_of_.push_back(t);
      ++row;
    }
  }

  const Layout lay{T, T, dim};
  const double noise_min = std::max(options.noise_floor, 1e-12);
  Vector lower(lay.size());
  Vector upper(lay.size());
  Vector start0(lay.size());
  for (std::size_t i = 0; i < T; ++i) {
    for (std::size_t q = 0; q < T; ++q) {
      lower(lay.mixing(i, q)) = -kMixingBound;
      upper(lay.mixing(i, q)) = kMixingBound;
      start0(lay.mixing(i, q)) = (i == q ? 0.7 : 0.0) + 0.3;
    }
    lower(lay.noise(i)) = std::log(noise_min);
    upper(lay.noise(i)) = std::log(std::max(kNoiseMax, noise_min));
    start0(lay.noise(i)) = std::clamp(std::log(1e-2), lower(lay.noise(i)), upper(lay.noise(i)));
  }
  for (std::size_t q = 0; q < T; ++q) {
    for (std::size_t d = 0; d < dim; ++d) {
      lower(lay.lengthscale(q, d)) = std::log(options.lengthscale_min);
      upper(lay.lengthscale(q, d)) = std::log(options.lengthscale_max);
      start0(lay.lengthscale(q, d)) = std::clamp(std::log(0.5), lower(lay.lengthscale(q, d)), upper(lay.lengthscale(q, d)));
    }
  }

  const detail::Objective objective = [&](const Vector& theta, Vector& grad) {
    return negative_log_likelihood(lay, model.X_, model.task_of_, y, theta, &grad);
  };
  Rng rng(derive_seed(options.seed, Stream::Hyperparameters));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector best = start0;
  double best_value = std::numeric_limits<double>::infinity();
  for (int start = 0; start < std::max(1, options.restarts); ++start) {
    Vector theta0 = start0;
    if (start > 0) {
      for (Eigen::Index i = 0; i < theta0.size(); ++i) {
        // Random mixing draws stay moderate so every start is well conditioned.
        const bool mixing = i < static_cast<Eigen::Index>(T * T);
        const double lo = mixing ? -1.5 : lower(i);
        const double hi = mixing ? 1.5 : upper(i);
        theta0(i) = lo + unit(rng) * (hi - lo);
      }
    }
    const detail::BoxResult result = detail::minimize_box(objective, theta0, lower, upper, options.max_iterations);
    if (result.value < best_value) {
      best_value = result.value;
      best = result.x;
    }
  }

  model.hp_ = unpack(lay, best);
  const Assembled a = assemble(model.X_, model.task_of_, model.hp_);
  Eigen::LLT<Eigen::MatrixXd> llt(a.K);
  if (llt.info() != Eigen::Success) throw std::runtime_error("lcm: kernel matrix is not positive definite");
  model.L_ = llt.matrixL();
  model.alpha_ = llt.solve(y);
  model.log_likelihood_ = -best_value;
  return model;
}

GpPrediction LcmModel::predict(std::size_t task, std::span<const double> x) const {
  if (task >= tasks()) throw std::out_of_range("lcm: task index out of range");
  if (x.size() != dim_) throw std::invalid_argument("lcm: query dimension mismatch");
  const Eigen::Index N = X_.rows();
  const auto ti = static_cast<Eigen::Index>(task);
  Vector k = Vector::Zero(N);
  double prior = 0.0;
  for (std::size_t q = 0; q < hp_.lengthscales.size(); ++q) {
    const auto qi = static_cast<Eigen::Index>(q);
    const double aq = hp_.mixing(ti, qi);
    prior += aq * aq;
    for (Eigen::Index n = 0; n < N; ++n) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        const double diff = x[d] - X_(n, static_cast<Eigen::Index>(d));
        s += diff * diff / hp_.lengthscales[q][d];
      }
      k(n) += aq * hp_.mixing(static_cast<Eigen::Index>(task_of_[static_cast<std::size_t>(n)]), qi) * std::exp(-s);
    }
  }
  const double mean_std = k.dot(alpha_);
  const Vector v = L_.triangularView<Eigen::Lower>().solve(k);
  const double var_std = std::max(0.0, prior - v.squaredNorm());
  const double scale = task_scale_[task];
  return {task_mean_[task] + scale * mean_std, scale * scale * var_std};
}

}  // namespace saptune
