#pragma once
// Closed-form upper bounds on the expected meeting time of the two-step
// coupling for Gaussian blocked-Gibbs autoregressions, plus the random-design
// crossed-effects bound.

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "cgibbs/gaussian_target.hpp"

namespace cgibbs {

// C_eps = -ln(erfinv(eps) 2 sqrt(2)) + 2 ln(12 + 8 sqrt(2/pi)) erfinv(eps)
//         + sqrt(2)/(sqrt(pi) e), valid for 0 < eps < 1/2
double c_epsilon(double eps);
// simple majorant 6 erfinv(eps) - ln erfinv(eps)
double c_epsilon_majorant(double eps);

// ln ||L^{-1}(x0 - y0)|| with L the target covariance Cholesky; -inf at x0 == y0
double c0_initial(const AutoRegression& ar, const Eigen::VectorXd& x0,
                  const Eigen::VectorXd& y0);

struct BoundResult {
  std::string name;
  double value = 0;
  double rho = 0;
  double t_rel = 0;
  double c0 = 0;
  double c_eps = 0;
  double lambda_term = 0; // -0.5 ln(1 - lambda) contribution, already included
  long n_star = -1;       // only set by the general bound
  double eps = 0;
  double delta = 0;
};

// reversible schedules: 4 + (-ln rho)^{-1} [ -0.5 ln(1 - lmin(B)^2) + C0 + Ceps ]
BoundResult bound_reversible(const AutoRegression& ar, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& y0, double eps);
// relaxation-time form: 4 + T_rel [ 0.5 ln T_rel + C0 + Ceps ]
BoundResult bound_relaxation_form(const AutoRegression& ar, const Eigen::VectorXd& x0,
                                  const Eigen::VectorXd& y0, double eps);
// two-block forward sweeps: 5 + T_rel [ C0 + Ceps ]
BoundResult bound_two_block(const AutoRegression& ar, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& y0, double eps);
// general schedules: 4 + 3 max(n*_delta, (1+delta) T_rel [ -0.5 ln(1-lmin(NN^T)) + C0 + Ceps ])
BoundResult bound_general(const AutoRegression& ar, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& y0, double eps, double delta,
                          long n_cap = 10000);

// n*_delta = smallest n0 >= 1 with 1 - ||N^n||_2^{1/n} >= (1 - rho(N))/(1+delta)
// for all n >= n0; the tail beyond the scan is certified by submultiplicativity.
long n_star(const Eigen::MatrixXd& N, double delta, long n_cap = 10000);

// balanced binary two-factor random-design bound:
// 5 + (1 + tau0/min(tau1,tau2)) (1 + 2/sqrt(min(d1,d2)-2) + gamma) [ C0 + Ceps ]
BoundResult bound_crem_random_design(double tau0, double tau1, double tau2,
                                     long d1, long d2, double gamma,
                                     double c0, double eps);

} // namespace cgibbs
