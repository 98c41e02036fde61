#pragma once
// Scalar special functions used throughout: high-accuracy normal quantile /
// inverse error function, tail-stable complementary normal cdf in log space,
// Mills-ratio hazard, truncated-normal moments and inverse-CDF sampling.

#include <utility>

namespace cgibbs {

// Phi^{-1}(p), p in (0,1); ~1e-16 relative accuracy (rational approx + polish)
double norm_quantile(double p);

// erf^{-1}(p), p in (-1,1); relative accuracy better than 1e-15 on (0, 0.999999)
double erf_inv(double p);

double norm_logpdf(double z);

// log(1 - Phi(z)), stable for large positive z
double norm_logcdf_c(double z);

// log erfc(x), stable for large positive x
double log_erfc(double x);

// phi(z) / (1 - Phi(z)); continued fraction for large z
double mills_hazard(double z);

// z such that log(1 - Phi(z)) = lp  (lp <= 0)
double norm_upper_quantile_from_log(double lp);

// Moments of N(mu, sigma^2) truncated to [alpha, +inf):
// mean = mu + sigma*h, second moment = sigma^2 (1 + at*h) + mu^2 + 2 mu sigma h,
// with at = (alpha-mu)/sigma and h the Mills hazard at at.
struct TruncNormMoments { double mean; double second_moment; };
TruncNormMoments truncated_normal_moments(double mu, double sigma, double alpha);

// Inverse-CDF draw from N(mu, sigma^2) truncated to [alpha, +inf), u in (0,1).
// Works at any truncation level (complementary log-space formulation).
double trunc_norm_inverse_cdf(double mu, double sigma, double alpha, double u);

// log density of the truncated normal at x (−inf below alpha)
double trunc_norm_logpdf(double mu, double sigma, double alpha, double x);

double gamma_logpdf(double x, double shape, double scale);

} // namespace cgibbs
