#include "cgibbs/couplings.hpp"

namespace cgibbs {

namespace {
constexpr double kInvSqrt8 = 0.35355339059327376220; // 1/sqrt(8)

void check_chol(const Eigen::MatrixXd& L) {
  if (L.rows() != L.cols()) throw std::invalid_argument("degenerate covariance: factor not square");
  for (int i = 0; i < L.rows(); ++i)
    if (!(L(i, i) > 0.0)) throw std::runtime_error("degenerate covariance");
}

double gauss_diag_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& m,
                         const Eigen::VectorXd& sd) {
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double z = (x[i] - m[i]) / sd[i];
    acc += -0.5 * z * z - std::log(sd[i]);
  }
  return acc; // common -d/2 log(2 pi) omitted: only differences matter
}
} // namespace

double tv_gaussian_same_cov(const Eigen::MatrixXd& chol_lower,
                            const Eigen::VectorXd& xi, const Eigen::VectorXd& nu) {
  check_chol(chol_lower);
  Eigen::VectorXd z =
      chol_lower.triangularView<Eigen::Lower>().solve(Eigen::VectorXd(xi - nu));
  return std::erf(z.norm() * kInvSqrt8);
}

double tv_gaussian_same_sd(double xi, double nu, double sd) {
  if (!(sd > 0.0)) throw std::runtime_error("degenerate covariance");
  return std::erf(std::fabs(xi - nu) / sd * kInvSqrt8);
}

CoupleDraw1 max_rejection_gaussians_1d(double mx, double sx, double my, double sy, Rng& rng) {
  auto rp = [&](Rng& r) { return mx + sx * r.rnorm(); };
  auto lp = [&](double v) { double z = (v - mx) / sx; return -0.5 * z * z - std::log(sx); };
  auto rq = [&](Rng& r) { return my + sy * r.rnorm(); };
  auto lq = [&](double v) { double z = (v - my) / sy; return -0.5 * z * z - std::log(sy); };
  return max_rejection_coupling_1d(rp, lp, rq, lq, rng);
}

CoupleDraw max_rejection_gaussians_diag(const Eigen::VectorXd& mx, const Eigen::VectorXd& sx,
                                        const Eigen::VectorXd& my, const Eigen::VectorXd& sy,
                                        Rng& rng) {
  auto rp = [&](Rng& r) {
    Eigen::VectorXd v(mx.size());
    for (int i = 0; i < v.size(); ++i) v[i] = mx[i] + sx[i] * r.rnorm();
    return v;
  };
  auto lp = [&](const Eigen::VectorXd& v) { return gauss_diag_logpdf(v, mx, sx); };
  auto rq = [&](Rng& r) {
    Eigen::VectorXd v(my.size());
    for (int i = 0; i < v.size(); ++i) v[i] = my[i] + sy[i] * r.rnorm();
    return v;
  };
  auto lq = [&](const Eigen::VectorXd& v) { return gauss_diag_logpdf(v, my, sy); };
  return max_rejection_coupling(rp, lp, rq, lq, rng);
}

CoupleDraw1 max_rejection_gammas(double shape_x, double scale_x,
                                 double shape_y, double scale_y, Rng& rng) {
  auto rp = [&](Rng& r) { return r.rgamma(shape_x, scale_x); };
  auto lp = [&](double v) { return gamma_logpdf(v, shape_x, scale_x); };
  auto rq = [&](Rng& r) { return r.rgamma(shape_y, scale_y); };
  auto lq = [&](double v) { return gamma_logpdf(v, shape_y, scale_y); };
  return max_rejection_coupling_1d(rp, lp, rq, lq, rng);
}

CoupleDraw max_reflection_coupling(const Eigen::VectorXd& xi, const Eigen::VectorXd& nu,
                                   const Eigen::MatrixXd& factor, Rng& rng) {
  const int d = (int)xi.size();
  if (factor.rows() != d || factor.cols() != d)
    throw std::invalid_argument("max_reflection_coupling: factor shape mismatch");
  Eigen::VectorXd xdot(d);
  for (int i = 0; i < d; ++i) xdot[i] = rng.rnorm();
  const double u = rng.runif(); // always consumed: fixed per-call stream cost
  CoupleDraw out;
  if (xi == nu) {
    out.x = xi + factor * xdot;
    out.y = out.x;
    out.met = true;
    return out;
  }
  Eigen::VectorXd diff = xi - nu;
  Eigen::VectorXd z;
  if (factor.isLowerTriangular())
    z = factor.triangularView<Eigen::Lower>().solve(diff);
  else
    z = Eigen::PartialPivLU<Eigen::MatrixXd>(factor).solve(diff);
  if (!z.allFinite()) throw std::runtime_error("degenerate covariance");
  const double znorm = z.norm();
  out.x = xi + factor * xdot;
  if (std::log(u) <= -0.5 * z.dot(2.0 * xdot + z)) {
    out.y = out.x; // meet: ydot = xdot + z maps to the same point
    out.met = true;
  } else {
    Eigen::VectorXd e = z / znorm;
    Eigen::VectorXd ydot = xdot - 2.0 * e.dot(xdot) * e;
    out.y = nu + factor * ydot;
    out.met = false;
  }
  return out;
}

CoupleDraw max_reflection_coupling_diag(const Eigen::VectorXd& xi, const Eigen::VectorXd& nu,
                                        const Eigen::VectorXd& sd, Rng& rng) {
  const int d = (int)xi.size();
  Eigen::VectorXd xdot(d);
  for (int i = 0; i < d; ++i) xdot[i] = rng.rnorm();
  const double u = rng.runif();
  CoupleDraw out;
  if (xi == nu) {
    out.x = xi + sd.cwiseProduct(xdot);
    out.y = out.x;
    out.met = true;
    return out;
  }
  for (int i = 0; i < d; ++i)
    if (!(sd[i] > 0.0)) throw std::runtime_error("degenerate covariance");
  Eigen::VectorXd z = (xi - nu).cwiseQuotient(sd);
  const double znorm = z.norm();
  out.x = xi + sd.cwiseProduct(xdot);
  if (std::log(u) <= -0.5 * z.dot(2.0 * xdot + z)) {
    out.y = out.x;
    out.met = true;
  } else {
    Eigen::VectorXd e = z / znorm;
    Eigen::VectorXd ydot = xdot - 2.0 * e.dot(xdot) * e;
    out.y = nu + sd.cwiseProduct(ydot);
    out.met = false;
  }
  return out;
}

CoupleDraw1 max_reflection_coupling_1d(double xi, double nu, double sd, Rng& rng) {
  const double xdot = rng.rnorm();
  const double u = rng.runif();
  CoupleDraw1 out;
  if (xi == nu) {
    out.x = out.y = xi + sd * xdot;
    out.met = true;
    return out;
  }
  if (!(sd > 0.0)) throw std::runtime_error("degenerate covariance");
  const double z = (xi - nu) / sd;
  out.x = xi + sd * xdot;
  if (std::log(u) <= -0.5 * z * (2.0 * xdot + z)) {
    out.y = out.x;
    out.met = true;
  } else {
    out.y = nu - sd * xdot; // reflection in 1d flips the sign
    out.met = false;
  }
  return out;
}

CoupleDraw crn_coupling(const Eigen::VectorXd& xi, const Eigen::MatrixXd& F,
                        const Eigen::VectorXd& nu, const Eigen::MatrixXd& G, Rng& rng) {
  if (F.cols() != G.cols() || F.rows() != xi.size() || G.rows() != nu.size())
    throw std::invalid_argument("crn_coupling: shape mismatch");
  Eigen::VectorXd z(F.cols());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.rnorm();
  CoupleDraw out;
  out.x = xi + F * z;
  out.y = nu + G * z;
  out.met = (out.x == out.y);
  return out;
}

CoupleDraw1 monotone_coupling(double u, const std::function<double(double)>& quantile_p,
                              const std::function<double(double)>& quantile_q) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("monotone_coupling: u out of (0,1)");
  CoupleDraw1 out;
  out.x = quantile_p(u);
  out.y = quantile_q(u);
  if (!std::isfinite(out.x) || !std::isfinite(out.y))
    throw std::runtime_error("monotone_coupling: quantile function returned non-finite value");
  out.met = (out.x == out.y);
  return out;
}

MeetingProb meeting_prob_product(const Eigen::VectorXd& z) {
  MeetingProb out;
  out.joint = 1.0 - std::erf(z.norm() * kInvSqrt8);
  double prod = 1.0;
  for (int i = 0; i < z.size(); ++i) prod *= 1.0 - std::erf(std::fabs(z[i]) * kInvSqrt8);
  out.product = prod;
  return out;
}

} // namespace cgibbs
