#include "cgibbs/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cgibbs {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kLogSqrt2Pi = 0.91893853320467274178; // log(sqrt(2*pi))

// Wichura's PPND16 rational approximations
double ppnd16(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                             6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                           1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                         1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                             3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                           5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                         4.2313330701600911252e1) * r + 1.0);
    return q * num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  if (r <= 0.0) throw std::invalid_argument("norm_quantile: p out of (0,1)");
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    const double num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                             2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                           3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                         4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                             1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                           6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                         2.05319162663775882187e0) * r + 1.0);
    x = num / den;
  } else {
    r -= 5.0;
    const double num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                             1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                           2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                         5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                             1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                           1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                         5.99832206555887937690e-1) * r + 1.0);
    x = num / den;
  }
  return (q < 0.0) ? -x : x;
}
} // namespace

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("norm_quantile: p out of (0,1)");
  return ppnd16(p);
}

double erf_inv(double p) {
  if (!(p > -1.0 && p < 1.0)) throw std::invalid_argument("erf_inv: p out of (-1,1)");
  if (p == 0.0) return 0.0;
  const double ap = std::fabs(p);
  // Phi^{-1}((ap+1)/2)/sqrt(2), then Newton polish. For ap near 1 the residual
  // erf(x)-ap cancels, so polish against erfc with the exact complement 1-ap.
  double x = ppnd16(0.5 * (ap + 1.0)) / kSqrt2;
  const double q = 1.0 - ap; // exact for ap in [0.5, 1]
  for (int it = 0; it < 3; ++it) {
    const double deriv = 2.0 / std::sqrt(M_PI) * std::exp(-x * x);
    if (deriv == 0.0) break;
    const double err = (ap > 0.5) ? (q - std::erfc(x)) : (std::erf(x) - ap);
    const double step = err / deriv;
    x -= step;
    if (std::fabs(step) <= 1e-17 * std::fabs(x)) break;
  }
  return p < 0.0 ? -x : x;
}

double norm_logpdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

double log_erfc(double x) {
  if (x < 25.0) return std::log(std::erfc(x));
  // asymptotic: erfc(x) = exp(-x^2)/(x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - 15/(8x^6) + ...)
  const double x2 = x * x;
  double s = 1.0, term = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2.0 * k - 1.0) / (2.0 * x2);
    s += term;
  }
  return -x2 - std::log(x) - 0.5 * std::log(M_PI) + std::log(s);
}

double norm_logcdf_c(double z) {
  if (z < -1.0) return std::log1p(-0.5 * std::erfc(-z / kSqrt2)); // 1 - Phi(z) = 1 - Phibar(-z)
  return std::log(0.5) + log_erfc(z / kSqrt2);
}

double mills_hazard(double z) {
  if (z < 8.0) return std::exp(norm_logpdf(z) - norm_logcdf_c(z));
  // Mills ratio continued fraction: R = 1/(z + 1/(z + 2/(z + 3/(z + ...))))
  double cf = 0.0;
  for (int k = 40; k >= 1; --k) cf = (double)k / (z + cf);
  return z + cf;
}

double norm_upper_quantile_from_log(double lp) {
  if (!(lp <= 0.0)) throw std::invalid_argument("norm_upper_quantile_from_log: lp > 0");
  if (lp == 0.0) return -std::numeric_limits<double>::infinity();
  double z;
  if (lp > std::log(1e-280)) {
    const double p = std::exp(lp); // upper-tail probability
    z = -ppnd16(p);                // Phibar(z) = p
  } else {
    // asymptotic start: lp ~ -z^2/2 - log z - log sqrt(2 pi)
    double t = -2.0 * (lp + kLogSqrt2Pi);
    z = std::sqrt(t);
    for (int it = 0; it < 4; ++it) z = std::sqrt(t - 2.0 * std::log(z));
  }
  // Newton on f(z) = log Phibar(z) - lp ; f' = -hazard(z)
  for (int it = 0; it < 4; ++it) {
    const double f = norm_logcdf_c(z) - lp;
    const double h = mills_hazard(z);
    if (!(h > 0.0) || !std::isfinite(f)) break;
    const double step = f / h;
    z += step;
    if (std::fabs(step) <= 1e-15 * (1.0 + std::fabs(z))) break;
  }
  return z;
}

TruncNormMoments truncated_normal_moments(double mu, double sigma, double alpha) {
  if (!(sigma > 0.0)) throw std::invalid_argument("truncated_normal_moments: sigma <= 0");
  const double at = (alpha - mu) / sigma;
  const double h = mills_hazard(at);
  TruncNormMoments m;
  m.mean = mu + sigma * h;
  m.second_moment = sigma * sigma * (1.0 + at * h) + mu * mu + 2.0 * mu * sigma * h;
  return m;
}

double trunc_norm_inverse_cdf(double mu, double sigma, double alpha, double u) {
  if (!(sigma > 0.0)) throw std::invalid_argument("trunc_norm_inverse_cdf: sigma <= 0");
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("trunc_norm_inverse_cdf: u out of (0,1)");
  const double at = (alpha - mu) / sigma;
  // Phibar(z) = (1-u) * Phibar(at), solved in log space
  const double lp = std::log1p(-u) + norm_logcdf_c(at);
  double z = norm_upper_quantile_from_log(lp);
  if (z < at) z = at; // guard against roundoff at u -> 0
  return mu + sigma * z;
}

double trunc_norm_logpdf(double mu, double sigma, double alpha, double x) {
  if (!(sigma > 0.0)) throw std::invalid_argument("trunc_norm_logpdf: sigma <= 0");
  if (x < alpha) return -std::numeric_limits<double>::infinity();
  const double at = (alpha - mu) / sigma;
  const double z = (x - mu) / sigma;
  return norm_logpdf(z) - std::log(sigma) - norm_logcdf_c(at);
}

double gamma_logpdf(double x, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw std::invalid_argument("gamma_logpdf: bad parameters");
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return (shape - 1.0) * std::log(x) - x / scale - shape * std::log(scale) - std::lgamma(shape);
}

} // namespace cgibbs
