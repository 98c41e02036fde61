#include "cgibbs/bounds.hpp"

#include <cmath>
#include <stdexcept>

#include "cgibbs/special.hpp"

namespace cgibbs {

namespace {
Eigen::MatrixXd whitened_map(const AutoRegression& ar) {
  // N = L^{-1} B L
  return ar.sigma_chol.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd(ar.B * ar.sigma_chol));
}

double check_rho(const AutoRegression& ar) {
  if (ar.rho >= 1.0 - 1e-12)
    throw std::runtime_error("bound: spectral radius at or above one");
  return ar.rho;
}
} // namespace

double c_epsilon(double eps) {
  if (!(eps > 0.0 && eps < 0.5))
    throw std::invalid_argument("c_epsilon: eps must lie in (0, 1/2)");
  const double t = erf_inv(eps);
  return -std::log(t * 2.0 * std::sqrt(2.0)) +
         2.0 * std::log(12.0 + 8.0 * std::sqrt(2.0 / M_PI)) * t +
         std::sqrt(2.0) / (std::sqrt(M_PI) * M_E);
}

double c_epsilon_majorant(double eps) {
  if (!(eps > 0.0 && eps < 0.5))
    throw std::invalid_argument("c_epsilon_majorant: eps must lie in (0, 1/2)");
  const double t = erf_inv(eps);
  return 6.0 * t - std::log(t);
}

double c0_initial(const AutoRegression& ar, const Eigen::VectorXd& x0,
                  const Eigen::VectorXd& y0) {
  if (x0 == y0) return -std::numeric_limits<double>::infinity();
  Eigen::VectorXd z =
      ar.sigma_chol.triangularView<Eigen::Lower>().solve(Eigen::VectorXd(x0 - y0));
  return std::log(z.norm());
}

BoundResult bound_reversible(const AutoRegression& ar, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& y0, double eps) {
  const double rho = check_rho(ar);
  // reversibility: Sigma B^T = B Sigma
  Eigen::MatrixXd lhs = ar.sigma * ar.B.transpose();
  Eigen::MatrixXd rhs = ar.B * ar.sigma;
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::runtime_error("bound_reversible: kernel not reversible "
                             "(use the general-schedule bound)");
  BoundResult r;
  r.name = "reversible";
  r.rho = rho;
  r.t_rel = relaxation_time(ar);
  r.eps = eps;
  r.c_eps = c_epsilon(eps);
  r.c0 = c0_initial(ar, x0, y0);
  if (std::isinf(r.c0) && r.c0 < 0) { r.value = 4.0; return r; }
  // reversible => L^{-1} B L symmetric with real spectrum in (-1, 1)
  Eigen::MatrixXd N = whitened_map(ar);
  N = 0.5 * (N + N.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(N, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (!(std::fabs(lmin) < 1.0))
    throw std::runtime_error("bound_reversible: |lambda_min| >= 1");
  r.lambda_term = -0.5 * std::log1p(-lmin * lmin);
  const double inner = r.lambda_term + r.c0 + r.c_eps;
  r.value = 4.0 + std::max(0.0, inner / (-std::log(rho)));
  return r;
}

BoundResult bound_relaxation_form(const AutoRegression& ar, const Eigen::VectorXd& x0,
                                  const Eigen::VectorXd& y0, double eps) {
  BoundResult r = bound_reversible(ar, x0, y0, eps); // shares preconditions
  r.name = "relaxation";
  if (std::isinf(r.c0) && r.c0 < 0) { r.value = 4.0; return r; }
  const double inner = 0.5 * std::log(r.t_rel) + r.c0 + r.c_eps;
  r.value = 4.0 + std::max(0.0, r.t_rel * inner);
  return r;
}

BoundResult bound_two_block(const AutoRegression& ar, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& y0, double eps) {
  check_rho(ar);
  BoundResult r;
  r.name = "two_block";
  r.rho = ar.rho;
  r.t_rel = relaxation_time(ar);
  r.eps = eps;
  r.c_eps = c_epsilon(eps);
  r.c0 = c0_initial(ar, x0, y0);
  if (std::isinf(r.c0) && r.c0 < 0) { r.value = 5.0; return r; }
  r.value = 5.0 + std::max(0.0, r.t_rel * (r.c0 + r.c_eps));
  return r;
}

long n_star(const Eigen::MatrixXd& N, double delta, long n_cap) {
  if (!(delta > 0.0)) throw std::invalid_argument("n_star: delta must be positive");
  if (N.rows() != N.cols()) throw std::invalid_argument("n_star: matrix not square");
  Eigen::EigenSolver<Eigen::MatrixXd> es(N, false);
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  if (rho >= 1.0 - 1e-12) throw std::runtime_error("n_star: spectral radius at or above one");
  const double log_gstar = std::log((rho + delta) / (1.0 + delta)); // s_n <= g* target

  // scan ||N^n||_2^{1/n}; a rescaled power accumulates the log norm
  Eigen::MatrixXd P = N;
  double log_scale = 0.0;
  double log_prefix_max = 0.0; // max over r < n of log ||N^r||, ||N^0|| = 1
  long last_bad = 0;
  double best_horizon = std::numeric_limits<double>::infinity();
  for (long n = 1; n <= n_cap; ++n) {
    if (n > 1) {
      P = P * N;
      const double nn = P.norm(); // cheap rescale guard (Frobenius)
      if (nn > 1e100 || (nn < 1e-100 && nn > 0)) {
        P /= nn;
        log_scale += std::log(nn);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sv(Eigen::MatrixXd(P.transpose() * P),
                                                      Eigen::EigenvaluesOnly);
    const double log_norm = 0.5 * std::log(sv.eigenvalues().maxCoeff()) + log_scale;
    const double log_sn = log_norm / (double)n;
    if (log_sn > log_gstar) {
      last_bad = n;
    } else {
      // submultiplicative tail certificate based at n:
      // for m = q n + r (0 <= r < n), ||N^m|| <= ||N^n||^q max_{r<n}||N^r||,
      // so s_m <= g* holds once q >= q_min; all m >= q_min * n are certified.
      const double denom = (double)n * (log_sn - log_gstar); // < 0 unless equal
      if (denom < 0) {
        const double numer = (double)(n - 1) * log_gstar - log_prefix_max;
        double q = std::ceil(numer / denom);
        if (!(q >= 1.0)) q = 1.0;
        best_horizon = std::min(best_horizon, q * (double)n);
      }
    }
    if ((double)n >= best_horizon) return last_bad + 1;
    log_prefix_max = std::max(log_prefix_max, log_norm);
  }
  throw std::runtime_error("n_star: scan cap reached without a certified tail (partial n* = " +
                           std::to_string(last_bad + 1) + ")");
}

BoundResult bound_general(const AutoRegression& ar, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& y0, double eps, double delta, long n_cap) {
  check_rho(ar);
  BoundResult r;
  r.name = "general";
  r.rho = ar.rho;
  r.t_rel = relaxation_time(ar);
  r.eps = eps;
  r.delta = delta;
  r.c_eps = c_epsilon(eps);
  r.c0 = c0_initial(ar, x0, y0);
  Eigen::MatrixXd N = whitened_map(ar);
  r.n_star = n_star(N, delta, n_cap);
  if (std::isinf(r.c0) && r.c0 < 0) { r.value = 4.0 + 3.0 * (double)r.n_star; return r; }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sv(Eigen::MatrixXd(N.transpose() * N),
                                                    Eigen::EigenvaluesOnly);
  const double smin = std::sqrt(std::max(0.0, sv.eigenvalues().minCoeff()));
  if (!(smin < 1.0))
    throw std::runtime_error("bound_general: smallest singular value of the whitened map >= 1");
  r.lambda_term = -0.5 * std::log1p(-smin * smin);
  const double inner = (1.0 + delta) * r.t_rel * (r.lambda_term + r.c0 + r.c_eps);
  r.value = 4.0 + 3.0 * std::max((double)r.n_star, std::max(0.0, inner));
  return r;
}

BoundResult bound_crem_random_design(double tau0, double tau1, double tau2,
                                     long d1, long d2, double gamma,
                                     double c0, double eps) {
  if (std::min(d1, d2) <= 4)
    throw std::invalid_argument("bound_crem_random_design: needs min(d1, d2) > 4");
  if (!(tau0 > 0 && tau1 > 0 && tau2 > 0))
    throw std::invalid_argument("bound_crem_random_design: precisions must be positive");
  if (!(gamma > 0)) throw std::invalid_argument("bound_crem_random_design: gamma must be positive");
  BoundResult r;
  r.name = "crem_random_design";
  r.eps = eps;
  r.c_eps = c_epsilon(eps);
  r.c0 = c0;
  const double cost = 1.0 + tau0 / std::min(tau1, tau2);
  const double aux = 1.0 + 2.0 / std::sqrt((double)std::min(d1, d2) - 2.0) + gamma;
  if (std::isinf(c0) && c0 < 0) { r.value = 5.0; return r; }
  r.t_rel = cost * aux;
  r.value = 5.0 + std::max(0.0, cost * aux * (c0 + r.c_eps));
  return r;
}

} // namespace cgibbs
