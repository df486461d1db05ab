#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "optimize.hpp"
#include "saptune/surrogate.hpp"

namespace saptune {

namespace {

constexpr double kJitterRatio = 1e-8;
constexpr double kVarianceMin = 1e-3;
constexpr double kVarianceMax = 1e2;
constexpr double kNoiseMax = 2.0;

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2, double variance,
                              const std::vector<double>& lengthscales) {
  Eigen::MatrixXd K(X1.rows(), X2.rows());
  for (Eigen::Index i = 0; i < X1.rows(); ++i) {
    for (Eigen::Index j = 0; j < X2.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index d = 0; d < X1.cols(); ++d) {
        const double diff = X1(i, d) - X2(j, d);
        s += diff * diff / lengthscales[static_cast<std::size_t>(d)];
      }
      K(i, j) = variance * std::exp(-s);
    }
  }
  return K;
}

struct Standardized {
  Vector y;
  double mean = 0.0;
  double scale = 1.0;
  bool constant = false;
};

Standardized standardize(const Vector& y) {
  Standardized out;
  out.mean = y.mean();
  const double var = (y.array() - out.mean).square().mean();
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12 * (1.0 + std::abs(out.mean)))) {
    out.constant = true;
    out.scale = 1.0;
  } else {
    out.scale = sd;
  }
  out.y = (y.array() - out.mean) / out.scale;
  return out;
}

bool identical_rows(const Eigen::MatrixXd& X) {
  for (Eigen::Index i = 1; i < X.rows(); ++i) {
    if (X.row(i) != X.row(0)) return false;
  }
  return true;
}

Vector pack(const GpHyperparameters& hp) {
  const auto D = static_cast<Eigen::Index>(hp.lengthscales.size());
  Vector theta(D + 2);
  theta(0) = std::log(hp.signal_variance);
  for (Eigen::Index d = 0; d < D; ++d) theta(d + 1) = std::log(hp.lengthscales[static_cast<std::size_t>(d)]);
  theta(D + 1) = std::log(hp.noise_variance);
  return theta;
}

GpHyperparameters unpack(const Vector& theta) {
  GpHyperparameters hp;
  const Eigen::Index D = theta.size() - 2;
  hp.signal_variance = std::exp(theta(0));
  hp.lengthscales.resize(static_cast<std::size_t>(D));
  for (Eigen::Index d = 0; d < D; ++d) hp.lengthscales[static_cast<std::size_t>(d)] = std::exp(theta(d + 1));
  hp.noise_variance = std::exp(theta(D + 1));
  return hp;
}

void check_shapes(const Eigen::MatrixXd& X, const Vector& y) {
  if (X.rows() == 0 || X.cols() == 0) throw std::invalid_argument("gp: empty training set");
  if (X.rows() != y.size()) throw std::invalid_argument("gp: point and value counts differ");
  if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("gp: non-finite training data");
}

}  // namespace

double gp_negative_log_likelihood(const Eigen::MatrixXd& X, const Vector& y_std, const GpHyperparameters& hp,
                                  Vector* gradient) {
  const Eigen::Index N = X.rows();
  const Eigen::Index D = X.cols();
  const Eigen::MatrixXd Kf = kernel_matrix(X, X, hp.signal_variance, hp.lengthscales);
  const double jitter = kJitterRatio * hp.signal_variance;
  Eigen::MatrixXd Ky = Kf;
  Ky.diagonal().array() += hp.noise_variance + jitter;

  Eigen::LLT<Eigen::MatrixXd> llt(Ky);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Vector alpha = llt.solve(y_std);
  const Eigen::MatrixXd L = llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  const double nll = 0.5 * y_std.dot(alpha) + 0.5 * logdet + 0.5 * static_cast<double>(N) * std::log(2.0 * std::numbers::pi);
  if (!std::isfinite(nll)) return std::numeric_limits<double>::infinity();

  if (gradient != nullptr) {
    const Eigen::MatrixXd W = llt.solve(Eigen::MatrixXd::Identity(N, N)) - alpha * alpha.transpose();
    gradient->resize(D + 2);
    (*gradient)(0) = 0.5 * ((W.array() * Kf.array()).sum() + jitter * W.trace());
    for (Eigen::Index d = 0; d < D; ++d) {
      const double ell = hp.lengthscales[static_cast<std::size_t>(d)];
      double acc = 0.0;
      for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < N; ++j) {
          const double diff = X(i, d) - X(j, d);
          acc += W(i, j) * Kf(i, j) * diff * diff;
        }
      }
      (*gradient)(d + 1) = 0.5 * acc / ell;
    }
    (*gradient)(D + 1) = 0.5 * hp.noise_variance * W.trace();
  }
  return nll;
}

GpModel gp_condition(const Eigen::MatrixXd& X, const Vector& y, const GpHyperparameters& hp) {
  check_shapes(X, y);
  if (hp.lengthscales.size() != static_cast<std::size_t>(X.cols())) {
    throw std::invalid_argument("gp: lengthscale count does not match dimension");
  }
  GpModel model;
  const Standardized s = standardize(y);
  model.X_ = X;
  model.y_mean_ = s.mean;
  model.y_scale_ = s.scale;
  model.hp_ = hp;
  model.jitter_ = kJitterRatio * hp.signal_variance;
  model.degenerate_ = s.constant || (X.rows() > 1 && identical_rows(X));

  Eigen::MatrixXd Ky = kernel_matrix(X, X, hp.signal_variance, hp.lengthscales);
  Ky.diagonal().array() += hp.noise_variance + model.jitter_;
  Eigen::LLT<Eigen::MatrixXd> llt(Ky);
  if (llt.info() != Eigen::Success) throw std::runtime_error("gp: kernel matrix is not positive definite");
  model.L_ = llt.matrixL();
  model.alpha_ = llt.solve(s.y);
  model.log_likelihood_ = -gp_negative_log_likelihood(X, s.y, hp);
  return model;
}

GpModel gp_fit(const Eigen::MatrixXd& X, const Vector& y, const GpFitOptions& options) {
  check_shapes(X, y);
  const auto D = static_cast<std::size_t>(X.cols());
  const double noise_min = std::max(options.noise_floor, 1e-12);
  const Standardized s = standardize(y);

  GpHyperparameters initial;
  initial.signal_variance = 1.0;
  initial.lengthscales.assign(D, std::clamp(0.5, options.lengthscale_min, options.lengthscale_max));
  initial.noise_variance = std::clamp(1e-2, noise_min, kNoiseMax);

  // Nothing to learn from constant outputs or a single point.
  if (s.constant || X.rows() < 2) {
    initial.noise_variance = noise_min;
    return gp_condition(X, y, initial);
  }

  Vector lower(static_cast<Eigen::Index>(D) + 2);
  Vector upper(static_cast<Eigen::Index>(D) + 2);
  lower(0) = std::log(kVarianceMin);
  upper(0) = std::log(kVarianceMax);
  for (std::size_t d = 0; d < D; ++d) {
    lower(static_cast<Eigen::Index>(d) + 1) = std::log(options.lengthscale_min);
    upper(static_cast<Eigen::Index>(d) + 1) = std::log(options.lengthscale_max);
  }
  lower(static_cast<Eigen::Index>(D) + 1) = std::log(noise_min);
  upper(static_cast<Eigen::Index>(D) + 1) = std::log(std::max(kNoiseMax, noise_min));

  const detail::Objective objective = [&](const Vector& theta, Vector& grad) {
    return gp_negative_log_likelihood(X, s.y, unpack(theta), &grad);
  };

  Rng rng(derive_seed(options.seed, Stream::Hyperparameters));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector best_theta = pack(initial).cwiseMax(lower).cwiseMin(upper);
  double best_value = std::numeric_limits<double>::infinity();
  const int starts = std::max(1, options.restarts);
  for (int start = 0; start < starts; ++start) {
    Vector theta0 = pack(initial).cwiseMax(lower).cwiseMin(upper);
    if (start > 0) {
      for (Eigen::Index i = 0; i < theta0.size(); ++i) theta0(i) = lower(i) + unit(rng) * (upper(i) - lower(i));
    }
    const detail::BoxResult result = detail::minimize_box(objective, theta0, lower, upper, options.max_iterations);
    if (result.value < best_value) {
      best_value = result.value;
      best_theta = result.x;
    }
  }

  return gp_condition(X, y, unpack(best_theta));
}

GpPrediction GpModel::predict(std::span<const double> x) const {
  if (x.size() != dim()) throw std::invalid_argument("gp: query dimension mismatch");
  const Eigen::Index N = X_.rows();
  Vector k(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double diff = x[d] - X_(i, static_cast<Eigen::Index>(d));
      s += diff * diff / hp_.lengthscales[d];
    }
    k(i) = hp_.signal_variance * std::exp(-s);
  }
  const double mean_std = k.dot(alpha_);
  const Vector v = L_.triangularView<Eigen::Lower>().solve(k);
  const double var_std = std::max(0.0, hp_.signal_variance - v.squaredNorm());
  return {y_mean_ + y_scale_ * mean_std, y_scale_ * y_scale_ * var_std};
}

Vector GpModel::predict_mean(const Eigen::MatrixXd& Xq) const {
  if (static_cast<std::size_t>(Xq.cols()) != dim()) throw std::invalid_argument("gp: query dimension mismatch");
  const Eigen::MatrixXd Kq = kernel_matrix(Xq, X_, hp_.signal_variance, hp_.lengthscales);
  return (y_mean_ + y_scale_ * (Kq * alpha_).array()).matrix();
}

}  // namespace saptune
