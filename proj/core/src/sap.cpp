#include "saptune/sap.hpp"

#include <chrono>
#include <cmath>

#include "saptune/sketch.hpp"

namespace saptune {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Operator B = A M and its transpose.
struct PreconditionedOperator {
  const DenseMatrix& A;
  const Preconditioner& M;

  Vector apply(const Vector& z) const { return A * M.apply(z); }
  Vector apply_transpose(const Vector& u) const {
    const Vector y = A.transpose() * u;
    return M.apply_transpose(y);
  }
  double flops_per_pair() const {
    return 4.0 * static_cast<double>(A.rows()) * static_cast<double>(A.cols()) + 2.0 * M.apply_flops();
  }
};

std::size_t resolve_max_iterations(const SolverSettings& s, const DenseMatrix& A) {
  return s.max_iterations > 0 ? s.max_iterations : 4 * static_cast<std::size_t>(A.cols());
}

void check_shapes(const DenseMatrix& A, const Vector& b, const Preconditioner& P, const Vector& z0) {
  if (b.size() != A.rows()) throw std::invalid_argument("solver: b length does not match A rows");
  if (P.cols() != static_cast<std::size_t>(A.cols())) throw std::invalid_argument("solver: preconditioner rows != A cols");
  if (static_cast<std::size_t>(z0.size()) != P.rank()) throw std::invalid_argument("solver: z0 length != preconditioner rank");
}

}  // namespace

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::ToleranceMet: return "ToleranceMet";
    case Termination::IterationLimit: return "IterationLimit";
    case Termination::PresolveExact: return "PresolveExact";
    case Termination::Failed: return "Failed";
  }
  return "?";
}

Vector Preconditioner::apply(const Vector& z) const {
  if (kind_ == PreconditionerKind::QR) return factor_.triangularView<Eigen::Upper>().solve(z);
  return factor_ * z;
}

Vector Preconditioner::apply_transpose(const Vector& x) const {
  if (kind_ == PreconditionerKind::QR) return factor_.triangularView<Eigen::Upper>().transpose().solve(x);
  return factor_.transpose() * x;
}

Eigen::MatrixXd Preconditioner::dense() const {
  if (kind_ == PreconditionerKind::QR) {
    return factor_.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(cols_, cols_));
  }
  return factor_;
}

Vector Preconditioner::presolve(const Vector& Sb) const {
  if (Sb.size() != basis_.rows()) throw std::invalid_argument("presolve: Sb length does not match sketch rows");
  return basis_.transpose() * Sb;
}

double Preconditioner::apply_flops() const {
  const double n = static_cast<double>(cols_);
  return kind_ == PreconditionerKind::QR ? n * n : 2.0 * n * static_cast<double>(rank_);
}

Preconditioner build_preconditioner(const DenseMatrix& A_hat, PreconditionerKind kind) {
  const Eigen::Index d = A_hat.rows();
  const Eigen::Index n = A_hat.cols();
  if (n < 1 || d < n) throw std::invalid_argument("build_preconditioner: sketch must have at least as many rows as columns");
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);

  Preconditioner P;
  P.kind_ = kind;
  P.cols_ = static_cast<std::size_t>(n);
  if (kind == PreconditionerKind::QR) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A_hat);
    P.factor_ = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    const auto diag = P.factor_.diagonal().cwiseAbs();
    const double largest = diag.maxCoeff();
    if (!(largest > 0.0) || diag.minCoeff() < 1e-12 * largest) {
      throw SingularPreconditionerError("QR preconditioner: R is numerically singular");
    }
    P.basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(d, n);
    P.rank_ = static_cast<std::size_t>(n);
    P.build_flops_ = 2.0 * dd * nn * nn - 2.0 * nn * nn * nn / 3.0 + 2.0 * dd * nn * nn;
    return P;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(A_hat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double threshold = sigma(0) * nn * std::numeric_limits<double>::epsilon();
  Eigen::Index k = 0;
  while (k < n && sigma(k) > threshold) ++k;
  if (k == 0) throw SingularPreconditionerError("SVD preconditioner: sketch is numerically zero");
  P.factor_ = svd.matrixV().leftCols(k) * sigma.head(k).cwiseInverse().asDiagonal();
  P.basis_ = svd.matrixU().leftCols(k);
  P.rank_ = static_cast<std::size_t>(k);
  P.build_flops_ = 4.0 * dd * nn * nn + 22.0 * nn * nn * nn;
  return P;
}

Vector presolve(const Preconditioner& precond, const DenseMatrix& A_hat, const Vector& Sb) {
  if (Sb.size() != A_hat.rows() || static_cast<std::size_t>(A_hat.cols()) != precond.cols()) {
    throw std::invalid_argument("presolve: shape mismatch");
  }
  return precond.presolve(Sb);
}

Vector choose_initial_point(const DenseMatrix& A, const Vector& b, const Preconditioner& precond, const Vector& z_sk) {
  const Vector r = A * precond.apply(z_sk) - b;
  if (r.squaredNorm() < b.squaredNorm()) return z_sk;
  return Vector::Zero(z_sk.size());
}

SolverSettings SolverSettings::from_configuration(const Configuration& config, std::size_t max_iterations) {
  SolverSettings s;
  s.tolerance_rho = config.tolerance();
  s.max_iterations = max_iterations;
  s.solver = config.sap_algorithm == SapAlgorithm::SVD_PGD ? SolverKind::PGD : SolverKind::LSQR;
  return s;
}

SolveReport lsqr(const DenseMatrix& A, const Vector& b, const Preconditioner& precond, const Vector& z0,
                 const SolverSettings& settings) {
  check_shapes(A, b, precond, z0);
  const auto start = Clock::now();
  const PreconditionedOperator B{A, precond};
  const std::size_t max_iter = resolve_max_iterations(settings, A);
  const double rho = settings.tolerance_rho;
  const bool warm = z0.squaredNorm() > 0.0;

  SolveReport report;
  report.z = z0;
  if (settings.observer) settings.observer(0, report.z);

  Vector r = b - B.apply(z0);
  double beta = r.norm();
  report.modeled_flops += 0.5 * B.flops_per_pair();
  auto finish = [&](Termination t, double ef, double ratio) {
    report.termination = t;
    report.frobenius_estimate_final = ef;
    report.final_test_ratio = ratio;
    report.x = precond.apply(report.z);
    report.wall_clock_seconds = seconds_since(start);
    return report;
  };
  if (beta == 0.0) return finish(warm ? Termination::PresolveExact : Termination::ToleranceMet, 0.0, 0.0);

  Vector u = r / beta;
  Vector v = B.apply_transpose(u);
  double alpha = v.norm();
  report.modeled_flops += 0.5 * B.flops_per_pair();
  if (alpha == 0.0) return finish(warm ? Termination::PresolveExact : Termination::ToleranceMet, 0.0, 0.0);
  v /= alpha;

  Vector w = v;
  Vector dz = Vector::Zero(z0.size());
  double phibar = beta;
  double rhobar = alpha;
  double anorm = 0.0;

  for (std::size_t itn = 1; itn <= max_iter; ++itn) {
    // Golub-Kahan step.
    u = B.apply(v) - alpha * u;
    beta = u.norm();
    if (beta > 0.0) u /= beta;
    anorm = std::sqrt(anorm * anorm + alpha * alpha + beta * beta);
    v = B.apply_transpose(u) - beta * v;
    alpha = v.norm();
    if (alpha > 0.0) v /= alpha;
    report.modeled_flops += B.flops_per_pair() + 10.0 * static_cast<double>(A.rows() + z0.size());

    // Plane rotation eliminating the subdiagonal beta.
    const double rho_k = std::hypot(rhobar, beta);
    const double c = rhobar / rho_k;
    const double s = beta / rho_k;
    const double theta = s * alpha;
    rhobar = -c * alpha;
    const double phi = c * phibar;
    phibar = s * phibar;

    dz += (phi / rho_k) * w;
    w = v - (theta / rho_k) * w;

    report.iterations = itn;
    report.frobenius_estimates.push_back(anorm);
    report.z = z0 + dz;
    if (settings.observer) settings.observer(itn, report.z);

    const double rnorm = phibar;
    const double arnorm = alpha * std::abs(c) * phibar;
    if (rnorm == 0.0 || arnorm <= rho * anorm * rnorm) {
      // The recurrences can drift from the true residual; confirm before exiting.
      r = b - B.apply(report.z);
      const Vector g = B.apply_transpose(r);
      report.modeled_flops += B.flops_per_pair();
      const double true_r = r.norm();
      const double ratio = true_r > 0.0 ? g.norm() / (anorm * true_r) : 0.0;
      if (ratio <= rho) return finish(Termination::ToleranceMet, anorm, ratio);
    }
  }
  r = b - B.apply(report.z);
  const Vector g = B.apply_transpose(r);
  report.modeled_flops += B.flops_per_pair();
  const double true_r = r.norm();
  return finish(Termination::IterationLimit, anorm, true_r > 0.0 ? g.norm() / (anorm * true_r) : 0.0);
}

SolveReport pgd(const DenseMatrix& A, const Vector& b, const Preconditioner& precond, const Vector& z0,
                const SolverSettings& settings) {
  check_shapes(A, b, precond, z0);
  const auto start = Clock::now();
  const PreconditionedOperator B{A, precond};
  const std::size_t max_iter = resolve_max_iterations(settings, A);
  const double rho = settings.tolerance_rho;
  const double ef = std::sqrt(static_cast<double>(A.cols()));
  const bool warm = z0.squaredNorm() > 0.0;

  SolveReport report;
  report.z = z0;
  report.frobenius_estimate_final = ef;
  if (settings.observer) settings.observer(0, report.z);

  Vector r = b - B.apply(z0);  // b - AMz
  report.modeled_flops += 0.5 * B.flops_per_pair();
  bool residual_is_fresh = true;

  auto finish = [&](Termination t, double ratio) {
    report.termination = t;
    report.final_test_ratio = ratio;
    report.x = precond.apply(report.z);
    report.wall_clock_seconds = seconds_since(start);
    return report;
  };

  for (std::size_t itn = 1;; ++itn) {
    // Step 1: steepest-descent direction M^T A^T (b - A x).
    Vector dz = B.apply_transpose(r);
    report.modeled_flops += 0.5 * B.flops_per_pair();
    double rnorm = r.norm();
    double ratio = rnorm > 0.0 ? dz.norm() / (ef * rnorm) : 0.0;

    // Step 2: stopping check, confirmed against a recomputed residual.
    if (ratio <= rho && !residual_is_fresh) {
      r = b - B.apply(report.z);
      dz = B.apply_transpose(r);
      report.modeled_flops += B.flops_per_pair();
      residual_is_fresh = true;
      rnorm = r.norm();
      ratio = rnorm > 0.0 ? dz.norm() / (ef * rnorm) : 0.0;
    }
    if (ratio <= rho) {
      const auto t = (report.iterations == 0 && warm) ? Termination::PresolveExact : Termination::ToleranceMet;
      return finish(t, ratio);
    }
    if (report.iterations >= max_iter) return finish(Termination::IterationLimit, ratio);

    const Vector w = B.apply(dz);
    report.modeled_flops += 0.5 * B.flops_per_pair() + 8.0 * static_cast<double>(A.rows() + z0.size());
    const double wnorm2 = w.squaredNorm();
    if (wnorm2 == 0.0) return finish(Termination::IterationLimit, ratio);
    // Exact minimiser of ||AM(z + alpha dz) - b||^2 along dz.
    const double step = w.dot(r) / wnorm2;

    // Step 3.
    report.z += step * dz;
    r -= step * w;
    residual_is_fresh = false;
    report.iterations = itn;
    if (settings.observer) settings.observer(itn, report.z);
  }
}

std::size_t sketch_rows(const Configuration& config, std::size_t n) {
  const double d = std::round(config.sampling_factor * static_cast<double>(n));
  return d < 1.0 ? 1 : static_cast<std::size_t>(d);
}

SolveReport solve_sap(const LsProblem& problem, const Configuration& config, std::uint64_t seed,
                      const SapOptions& options) {
  const auto start = Clock::now();
  const std::size_t m = problem.rows();
  const std::size_t n = problem.cols();
  const std::size_t d = sketch_rows(config, n);
  const auto kind =
      config.sap_algorithm == SapAlgorithm::QR_LSQR ? PreconditionerKind::QR : PreconditionerKind::SVD;

  double flops = 0.0;
  try {
    const SketchOperator S = sample_operator(config.sketching_operator, d, m, static_cast<std::size_t>(config.vec_nnz), seed);
    const DenseMatrix A_hat = apply(S, problem.A);
    const Vector Sb = apply_vector(S, problem.b);
    flops += 2.0 * static_cast<double>(S.nnz()) * static_cast<double>(n + 1);

    const Preconditioner P = build_preconditioner(A_hat, kind);
    flops += P.build_flops();
    const Vector z_sk = P.presolve(Sb);
    const Vector z0 = choose_initial_point(problem.A, problem.b, P, z_sk);
    flops += 2.0 * static_cast<double>(d) * static_cast<double>(P.rank()) +
             2.0 * static_cast<double>(m) * static_cast<double>(n) + P.apply_flops();

    SolverSettings settings = SolverSettings::from_configuration(config, options.max_iterations);
    settings.observer = options.observer;
    SolveReport report = settings.solver == SolverKind::PGD ? pgd(problem.A, problem.b, P, z0, settings)
                                                            : lsqr(problem.A, problem.b, P, z0, settings);
    report.modeled_flops += flops + P.apply_flops();
    report.sketch_rows = d;
    report.preconditioner_rank = P.rank();
    report.wall_clock_seconds = seconds_since(start);
    return report;
  } catch (const SingularPreconditionerError& e) {
    SolveReport report;
    report.termination = Termination::Failed;
    report.error = e.what();
    report.x = Vector::Zero(static_cast<Eigen::Index>(n));
    report.sketch_rows = d;
    report.modeled_flops = flops;
    report.wall_clock_seconds = seconds_since(start);
    return report;
  }
}

}  // namespace saptune
