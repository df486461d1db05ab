#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "saptune/common.hpp"
#include "saptune/rng.hpp"

namespace saptune {

/// Kernel k(x, x') = variance * exp(-sum_j (x_j - x'_j)^2 / lengthscale_j).
struct GpHyperparameters {
  double signal_variance = 1.0;
  std::vector<double> lengthscales;
  double noise_variance = 1e-2;
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct GpFitOptions {
  double noise_floor = 1e-6;  // lower bound on the standardized noise variance
  int restarts = 8;
  double lengthscale_min = 1e-2;
  double lengthscale_max = 10.0;
  int max_iterations = 200;
  std::uint64_t seed = 0;
};

/// Gaussian-process regressor with standardized outputs. Hyperparameters are
/// stored in standardized units; predictions are returned in data units.
class GpModel {
 public:
  GpModel() = default;

  std::size_t dim() const { return static_cast<std::size_t>(X_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  const Eigen::MatrixXd& inputs() const { return X_; }
  const GpHyperparameters& hyperparameters() const { return hp_; }

  /// True when the data could not identify a model (identical inputs or outputs).
  bool degenerate() const { return degenerate_; }
  double log_marginal_likelihood() const { return log_likelihood_; }

  double output_mean() const { return y_mean_; }
  double output_scale() const { return y_scale_; }
  /// Prior variance and noise variance in data units.
  double prior_variance() const { return y_scale_ * y_scale_ * hp_.signal_variance; }
  double noise_variance() const { return y_scale_ * y_scale_ * hp_.noise_variance; }
  double jitter() const { return y_scale_ * y_scale_ * jitter_; }

  GpPrediction predict(std::span<const double> x) const;
  /// Posterior means for the rows of Xq.
  Vector predict_mean(const Eigen::MatrixXd& Xq) const;

 private:
  friend GpModel gp_condition(const Eigen::MatrixXd&, const Vector&, const GpHyperparameters&);
  friend GpModel gp_fit(const Eigen::MatrixXd&, const Vector&, const GpFitOptions&);

  Eigen::MatrixXd X_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  GpHyperparameters hp_;
  double jitter_ = 0.0;
  Eigen::MatrixXd L_;  // lower Cholesky factor of K + (noise + jitter) I
  Vector alpha_;
  double log_likelihood_ = 0.0;
  bool degenerate_ = false;
};

/// Trains hyperparameters by maximizing the marginal likelihood from several
/// starts. Rows of X are points. Throws std::invalid_argument on bad shapes.
GpModel gp_fit(const Eigen::MatrixXd& X, const Vector& y, const GpFitOptions& options = {});

/// Posterior under fixed hyperparameters (standardized units).
GpModel gp_condition(const Eigen::MatrixXd& X, const Vector& y, const GpHyperparameters& hp);

inline GpPrediction gp_predict(const GpModel& model, std::span<const double> x) { return model.predict(x); }

/// Negative log marginal likelihood of standardized data and its gradient
/// with respect to (log variance, log lengthscales..., log noise).
double gp_negative_log_likelihood(const Eigen::MatrixXd& X, const Vector& y_std, const GpHyperparameters& hp,
                                  Vector* gradient = nullptr);

/// Linear coregionalization model: f_i(x) = sum_q a_{iq} u_q(x) with one
/// unit-variance latent GP per task.
struct LcmHyperparameters {
  Eigen::MatrixXd mixing;                         // tasks x latents
  std::vector<std::vector<double>> lengthscales;  // per latent, per dimension
  std::vector<double> noise_variances;            // per task
};

struct LcmTaskData {
  Eigen::MatrixXd X;  // rows are points, may be empty
  Vector y;
};

class LcmModel {
 public:
  LcmModel() = default;

  std::size_t tasks() const { return task_mean_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  const LcmHyperparameters& hyperparameters() const { return hp_; }
  double log_marginal_likelihood() const { return log_likelihood_; }

  /// Prediction for one task in that task's data units. Tasks without data
  /// use the pooled output statistics.
  GpPrediction predict(std::size_t task, std::span<const double> x) const;

 private:
  friend LcmModel lcm_fit(const std::vector<LcmTaskData>&, const GpFitOptions&);

  std::size_t dim_ = 0;
  Eigen::MatrixXd X_;
  std::vector<std::size_t> task_of_;
  std::vector<double> task_mean_;
  std::vector<double> task_scale_;
  LcmHyperparameters hp_;
  Eigen::MatrixXd L_;
  Vector alpha_;
  double log_likelihood_ = 0.0;
};

/// Joint fit over all tasks. Requires at least one point overall and equal
/// dimensions; a task with no points contributes only its prior.
LcmModel lcm_fit(const std::vector<LcmTaskData>& data, const GpFitOptions& options = {});

/// Expected improvement below incumbent for a Gaussian prediction.
double expected_improvement(double mean, double variance, double incumbent);

struct AcquisitionOptions {
  std::size_t candidates = 256;
  std::size_t local_starts = 8;
  double initial_step = 0.25;
  double min_step = 1e-3;
};

using PredictFunction = std::function<GpPrediction(std::span<const double>)>;
/// Maps a raw point to the nearest admissible point.
using SnapFunction = std::function<std::vector<double>(std::span<const double>)>;
using ExcludeFunction = std::function<bool(std::span<const double>)>;

struct AcquisitionResult {
  std::vector<double> point;
  double expected_improvement = 0.0;
  double mean = 0.0;
  double incumbent = 0.0;
};

/// Maximizes EI by pattern search started from the best LHS candidates. A NaN
/// incumbent means "best predicted mean among the candidates". Ties in EI go to
/// the lower mean. Excluded points are avoided unless nothing else is found.
AcquisitionResult maximize_expected_improvement(const PredictFunction& predict, const SnapFunction& snap,
                                                std::size_t dim, double incumbent, Rng& rng,
                                                const ExcludeFunction& exclude = {},
                                                const AcquisitionOptions& options = {});

}  // namespace saptune
