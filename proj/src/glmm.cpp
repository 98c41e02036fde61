#include "cgibbs/glmm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cgibbs/couplings.hpp"

namespace cgibbs {

GlmmDesign GlmmDesign::from(CrossedDesign d) {
  d.build_caches();
  d.validate();
  GlmmDesign g;
  g.base = std::move(d);
  const CrossedDesign& b = g.base;
  g.index.resize(b.K);
  for (int k = 0; k < b.K; ++k) {
    auto& ix = g.index[k];
    ix.offset.assign(b.sizes[k] + 1, 0);
    for (long n = 0; n < b.N; ++n) ix.offset[b.levels[k][n] + 1] += 1;
    for (long i = 0; i < b.sizes[k]; ++i) ix.offset[i + 1] += ix.offset[i];
    ix.obs.resize(b.N);
    std::vector<long> cursor(ix.offset.begin(), ix.offset.end() - 1);
    for (long n = 0; n < b.N; ++n) ix.obs[cursor[b.levels[k][n]]++] = n;
  }
  return g;
}

namespace {

// log f(y | eta) at residual r = y - eta, additive constants dropped
struct RespLik {
  Family fam;
  double tau0;  // gaussian response precision
  double inv_b; // laplace 1 / scale
  double operator()(double r) const {
    return fam == Family::gaussian ? -0.5 * tau0 * r * r : -inv_b * std::fabs(r);
  }
};

void check_glmm_opts(const GlmmOpts& o) {
  if (o.S < 1) throw std::invalid_argument("glmm: need at least one Metropolis step");
  if (!(o.proposal_sd > 0)) throw std::invalid_argument("glmm: proposal sd must be positive");
  if (o.adapt_prop && !(o.prop_mult > 0))
    throw std::invalid_argument("glmm: proposal multiplier must be positive");
  if (o.family == Family::laplace && !(o.laplace_b > 0))
    throw std::invalid_argument("glmm: Laplace scale must be positive");
}

// per-observation Fisher information of the response density
double resp_info(const GlmmOpts& o, double tau0) {
  return o.family == Family::gaussian ? tau0 : 1.0 / (o.laplace_b * o.laplace_b);
}

// step size for level i: match the conditional width when adapting
double level_step(const GlmmOpts& o, double tauk, double info, long n_i) {
  return o.adapt_prop ? o.prop_mult / std::sqrt(tauk + double(n_i) * info) : o.proposal_sd;
}

void check_state(const GlmmState& s, const CrossedDesign& d) {
  if (s.tau.size() != d.K + 1) throw std::invalid_argument("glmm: tau must have K + 1 entries");
  for (long j = 0; j < s.tau.size(); ++j)
    if (!(s.tau[j] > 0)) throw std::invalid_argument("glmm: precisions must be strictly positive");
}

// residual with factor k's effect removed: res_n = y_n - mu's share is kept
// out too, i.e. res_n = y_n - sum_{l != k} a^{(l)}, so eta_n = xi_i - res gap
void strip_factor(const GlmmState& s, const CrossedDesign& d, int k, Eigen::VectorXd& res) {
  res.resize(d.N);
  for (long n = 0; n < d.N; ++n) {
    double other = 0;
    for (int l = 0; l < d.K; ++l)
      if (l != k) other += s.a[l][d.levels[l][n]];
    res[n] = d.y[n] - other;
  }
}

double tshape(long count, TauShape c) {
  return c == TauShape::paper ? (double(count) - 1.0) / 2.0 : (double(count) + 1.0) / 2.0;
}

// switch points between crn and maximal pairs for the exact mu/tau draws,
// in units of the draw's own scale; at the mu boundary a maximal attempt
// succeeds with probability 1 - TV ~ 0.6
constexpr double lock_band = 1.0;
constexpr double tau_band = 0.1;

double bad_ratio(double t) { return std::isnan(t); }

} // namespace

GlmmState glmm_init(const CrossedDesign& d, const Eigen::VectorXd& tau, TauMode mode, Rng& rng) {
  GlmmState s = crem_init(d, tau, TauMode::fixed, rng);
  if (mode == TauMode::sample)
    for (int k = 1; k <= d.K; ++k) s.tau[k] = rng.rgamma(2.0, 0.5);
  return s;
}

void glmm_sweep(GlmmState& s, const GlmmDesign& g, const GlmmOpts& o, Rng& rng) {
  const CrossedDesign& d = g.base;
  check_glmm_opts(o);
  check_state(s, d);
  const RespLik lik{o.family, s.tau[0], 1.0 / o.laplace_b};
  Eigen::VectorXd res, xi;
  for (int k = 0; k < d.K; ++k) {
    const double tauk = s.tau[k + 1];
    const long Ik = d.sizes[k];
    strip_factor(s, d, k, res);
    const double mu_old = s.mu;
    xi = s.a[k].array() + mu_old;
    // mu | xi: flat prior and xi_i iid N(mu, 1/tau_k) give
    // N(mean(xi), 1/(I_k tau_k))
    const double mu_new = xi.mean() + rng.rnorm() / std::sqrt(double(Ik) * tauk);
    const double info = resp_info(o, s.tau[0]);
    const auto& ix = g.index[k];
    for (long i = 0; i < Ik; ++i) {
      auto logp = [&](double v) {
        double acc = -0.5 * tauk * (v - mu_new) * (v - mu_new);
        for (long t = ix.offset[i]; t < ix.offset[i + 1]; ++t) acc += lik(res[ix.obs[t]] - v);
        return acc;
      };
      const double psd = level_step(o, tauk, info, ix.offset[i + 1] - ix.offset[i]);
      double cur = xi[i];
      double curlp = logp(cur);
      if (!std::isfinite(curlp)) throw std::runtime_error("glmm: non-finite log-likelihood");
      for (int st = 0; st < o.S; ++st) {
        const double prop = cur + psd * rng.rnorm();
        const double proplp = logp(prop);
        const double dlt = proplp - curlp; // -inf proposals reject naturally
        if (bad_ratio(dlt) || proplp == std::numeric_limits<double>::infinity())
          throw std::runtime_error("glmm: non-finite log-likelihood");
        if (std::log(rng.runif()) <= dlt) {
          cur = prop;
          curlp = proplp;
        }
      }
      s.a[k][i] = (cur != xi[i]) ? cur - mu_new : s.a[k][i] + (mu_old - mu_new);
    }
    s.mu = mu_new;
    if (o.tau_mode == TauMode::sample) {
      const double ss = s.a[k].squaredNorm();
      if (ss == 0) throw std::runtime_error("glmm: degenerate scale draw (sum of squares is zero)");
      s.tau[k + 1] = rng.rgamma(tshape(Ik, o.tau_shape), 2.0 / ss);
    }
  }
}

std::vector<char> coupled_mh_block(Eigen::VectorXd& x, Eigen::VectorXd& y, MhVariant v,
                                   double proposal_sd,
                                   const std::function<double(long, double)>& logdens_x,
                                   const std::function<double(long, double)>& logdens_y,
                                   Rng& rng) {
  if (!(proposal_sd > 0)) throw std::invalid_argument("coupled_mh_block: proposal sd must be positive");
  const Eigen::VectorXd sdv = Eigen::VectorXd::Constant(x.size(), proposal_sd);
  return coupled_mh_block(x, y, v, sdv, sdv, logdens_x, logdens_y, rng);
}

std::vector<char> coupled_mh_block(Eigen::VectorXd& x, Eigen::VectorXd& y, MhVariant v,
                                   const Eigen::VectorXd& sd_x, const Eigen::VectorXd& sd_y,
                                   const std::function<double(long, double)>& logdens_x,
                                   const std::function<double(long, double)>& logdens_y,
                                   Rng& rng) {
  const long d = x.size();
  if (y.size() != d || sd_x.size() != d || sd_y.size() != d)
    throw std::invalid_argument("coupled_mh_block: state length mismatch");
  if (!(sd_x.minCoeff() > 0) || !(sd_y.minCoeff() > 0))
    throw std::invalid_argument("coupled_mh_block: proposal sd must be positive");
  const bool joint_prop = v == MhVariant::blocked_reflection || v == MhVariant::blocked_maximal ||
                          v == MhVariant::blocked_factorized_reflection ||
                          v == MhVariant::blocked_factorized_maximal;
  const bool reflect = v == MhVariant::blocked_reflection ||
                       v == MhVariant::blocked_factorized_reflection ||
                       v == MhVariant::fully_factorized_reflection;
  if (reflect && sd_x != sd_y)
    throw std::invalid_argument("coupled_mh_block: reflection needs equal step sizes");
  Eigen::VectorXd px(d), py(d);
  if (joint_prop) {
    CoupleDraw dr = reflect ? max_reflection_coupling_diag(x, y, sd_x, rng)
                            : max_rejection_gaussians_diag(x, sd_x, y, sd_y, rng);
    px = std::move(dr.x);
    py = std::move(dr.y);
  } else {
    for (long i = 0; i < d; ++i) {
      CoupleDraw1 dr = reflect ? max_reflection_coupling_1d(x[i], y[i], sd_x[i], rng)
                               : max_rejection_gaussians_1d(x[i], sd_x[i], y[i], sd_y[i], rng);
      px[i] = dr.x;
      py[i] = dr.y;
    }
  }
  // random-walk proposals are symmetric: the ratio is target-only. One shared
  // uniform per acceptance decision pairs the chains.
  if (v == MhVariant::blocked_reflection || v == MhVariant::blocked_maximal) {
    double ax = 0, ay = 0;
    for (long i = 0; i < d; ++i) {
      ax += logdens_x(i, px[i]) - logdens_x(i, x[i]);
      ay += logdens_y(i, py[i]) - logdens_y(i, y[i]);
    }
    if (bad_ratio(ax) || bad_ratio(ay))
      throw std::runtime_error("coupled_mh_block: non-finite log density");
    const double lu = std::log(rng.runif());
    if (lu <= ax) x = px;
    if (lu <= ay) y = py;
  } else {
    for (long i = 0; i < d; ++i) {
      const double ax = logdens_x(i, px[i]) - logdens_x(i, x[i]);
      const double ay = logdens_y(i, py[i]) - logdens_y(i, y[i]);
      if (bad_ratio(ax) || bad_ratio(ay))
        throw std::runtime_error("coupled_mh_block: non-finite log density");
      const double lu = std::log(rng.runif());
      if (lu <= ax) x[i] = px[i];
      if (lu <= ay) y[i] = py[i];
    }
  }
  std::vector<char> met(d);
  for (long i = 0; i < d; ++i) met[i] = x[i] == y[i];
  return met;
}

bool glmm_coupled_sweep(GlmmState& x, GlmmState& yst, const GlmmDesign& g, const GlmmOpts& o,
                        Rng& rng) {
  const CrossedDesign& d = g.base;
  check_glmm_opts(o);
  check_state(x, d);
  check_state(yst, d);
  const RespLik likx{o.family, x.tau[0], 1.0 / o.laplace_b};
  const RespLik liky{o.family, yst.tau[0], 1.0 / o.laplace_b};
  Eigen::VectorXd res_x, res_y, xi_x, xi_y, xi0_x, xi0_y;
  for (int k = 0; k < d.K; ++k) {
    const long Ik = d.sizes[k];
    const double tkx = x.tau[k + 1], tky = yst.tau[k + 1];
    strip_factor(x, d, k, res_x);
    strip_factor(yst, d, k, res_y);
    const double mu_old_x = x.mu, mu_old_y = yst.mu;
    xi_x = x.a[k].array() + mu_old_x;
    xi_y = yst.a[k].array() + mu_old_y;
    xi0_x = xi_x;
    xi0_y = xi_y;
    // mu | xi pair. The exact low-dimensional draws follow the two-step
    // logic: common random numbers while the conditionals are far apart
    // (a maximal miss here re-draws the pair nearly independently and
    // unmeets every coordinate accepted this visit), maximal once the
    // means are within lock_band proposal sds so the pair can lock.
    const double sdx = 1.0 / std::sqrt(double(Ik) * tkx);
    const double sdy = 1.0 / std::sqrt(double(Ik) * tky);
    const double mx = xi_x.mean(), my = xi_y.mean();
    double mu_x, mu_y;
    if (std::fabs(mx - my) <= lock_band * std::min(sdx, sdy)) {
      if (sdx == sdy) {
        auto dr = max_reflection_coupling_1d(mx, my, sdx, rng);
        mu_x = dr.x;
        mu_y = dr.y;
      } else {
        auto dr = max_rejection_gaussians_1d(mx, sdx, my, sdy, rng);
        mu_x = dr.x;
        mu_y = dr.y;
      }
    } else {
      const double z = rng.rnorm();
      mu_x = mx + sdx * z;
      mu_y = my + sdy * z;
    }
    const auto& ix = g.index[k];
    std::function<double(long, double)> ldx = [&](long i, double v) {
      double acc = -0.5 * tkx * (v - mu_x) * (v - mu_x);
      for (long t = ix.offset[i]; t < ix.offset[i + 1]; ++t) acc += likx(res_x[ix.obs[t]] - v);
      return acc;
    };
    std::function<double(long, double)> ldy = [&](long i, double v) {
      double acc = -0.5 * tky * (v - mu_y) * (v - mu_y);
      for (long t = ix.offset[i]; t < ix.offset[i + 1]; ++t) acc += liky(res_y[ix.obs[t]] - v);
      return acc;
    };
    Eigen::VectorXd sdvx(Ik), sdvy(Ik);
    for (long i = 0; i < Ik; ++i) {
      const long cnt = ix.offset[i + 1] - ix.offset[i];
      sdvx[i] = level_step(o, tkx, resp_info(o, x.tau[0]), cnt);
      sdvy[i] = level_step(o, tky, resp_info(o, yst.tau[0]), cnt);
    }
    for (int st = 0; st < o.S; ++st)
      coupled_mh_block(xi_x, xi_y, MhVariant::fully_factorized_maximal, sdvx, sdvy, ldx, ldy, rng);
    for (long i = 0; i < Ik; ++i) {
      x.a[k][i] = (xi_x[i] != xi0_x[i]) ? xi_x[i] - mu_x : x.a[k][i] + (mu_old_x - mu_x);
      yst.a[k][i] = (xi_y[i] != xi0_y[i]) ? xi_y[i] - mu_y : yst.a[k][i] + (mu_old_y - mu_y);
    }
    x.mu = mu_x;
    yst.mu = mu_y;
    if (o.tau_mode == TauMode::sample) {
      const double ssx = x.a[k].squaredNorm(), ssy = yst.a[k].squaredNorm();
      if (ssx == 0 || ssy == 0)
        throw std::runtime_error("glmm: degenerate scale draw (sum of squares is zero)");
      // same two-step logic; the total-variation gap of equal-shape gammas
      // scales like |log scale ratio| * sqrt(shape), and a miss here is
      // cheap (no recentring shift), so the band locks the pair early
      const double shp = tshape(Ik, o.tau_shape);
      if (std::fabs(std::log(ssy / ssx)) * std::sqrt(shp) <= tau_band) {
        auto dr = max_rejection_gammas(shp, 2.0 / ssx, shp, 2.0 / ssy, rng);
        x.tau[k + 1] = dr.x;
        yst.tau[k + 1] = dr.y;
      } else {
        const double gz = rng.rgamma(shp, 1.0);
        x.tau[k + 1] = gz * 2.0 / ssx;
        yst.tau[k + 1] = gz * 2.0 / ssy;
      }
    }
  }
  return x == yst;
}

long product_laplace_meeting(long dim, MhVariant v, double proposal_sd, double b, long max_iter,
                             Rng& rng, std::vector<double>* frac_unmet) {
  if (dim < 1) throw std::invalid_argument("product_laplace_meeting: dimension must be positive");
  if (!(b > 0)) throw std::invalid_argument("product_laplace_meeting: scale must be positive");
  auto qlap = [&](double u) {
    return u < 0.5 ? b * std::log(2.0 * u) : -b * std::log(2.0 * (1.0 - u));
  };
  Eigen::VectorXd x(dim), y(dim);
  for (long i = 0; i < dim; ++i) x[i] = qlap(rng.runif());
  for (long i = 0; i < dim; ++i) y[i] = qlap(rng.runif());
  const double inv_b = 1.0 / b;
  const std::function<double(long, double)> ld = [inv_b](long, double vv) {
    return -inv_b * std::fabs(vv);
  };
  if (frac_unmet) frac_unmet->clear();
  for (long t = 1; t <= max_iter; ++t) {
    const auto flags = coupled_mh_block(x, y, v, proposal_sd, ld, ld, rng);
    long unmet = 0;
    for (char c : flags) unmet += c ? 0 : 1;
    if (frac_unmet) frac_unmet->push_back(double(unmet) / double(dim));
    if (unmet == 0) return t;
  }
  return -1;
}

} // namespace cgibbs
