#pragma once
// Crossed random effects with a general response family:
//   y_n ~ F(eta_n),  eta_n = mu + sum_k a^{(k)}_{i_k[n]},
//   a^{(k)}_i ~ N(0, 1/tau_k), flat prior on mu.
// F is Gaussian with precision tau[0] or Laplace with fixed scale b.
//
// The sweep is Metropolis-within-Gibbs with local centering: for each factor
// k the pair (mu, xi^{(k)}), xi := mu + a^{(k)}, is updated -- mu | xi is an
// exact Gaussian draw (flat-prior conjugacy: N(mean(xi), 1/(I_k tau_k))),
// each xi_i then takes S random-walk Metropolis steps on its univariate
// conditional, and tau_k follows. Coupled Metropolis kernels for blocks of
// independent coordinates come in six variants (proposal drawn jointly or
// per coordinate, reflection- or rejection-maximal, acceptance joint or per
// coordinate, always with a shared uniform); the coupled model sweep is
// one-step maximal throughout (no contractive phase).

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "cgibbs/crem.hpp"
#include "cgibbs/rng.hpp"

namespace cgibbs {

enum class Family { gaussian, laplace };

struct GlmmOpts {
  Family family = Family::laplace;
  double laplace_b = 0.70710678118654752440; // model default Lapl(eta, 1/sqrt(2))
  int S = 1;                                 // Metropolis steps per coordinate
  double proposal_sd = 1.41421356237309504880; // univariate step size sqrt(2)
  // scale each level's step to its conditional width,
  // prop_mult / sqrt(tau_k + n_i * info), with info the per-observation
  // Fisher information of the response (tau_0 gaussian, 1/b^2 laplace);
  // proposal_sd is the step size when off
  bool adapt_prop = true;
  double prop_mult = 2.4;
  TauMode tau_mode = TauMode::fixed; // tau_k draws; tau[0] never drawn
  TauShape tau_shape = TauShape::paper;
};

// observation ids grouped by level: level i of the factor owns
// obs[offset[i] .. offset[i+1])
struct LevelIndex {
  std::vector<long> offset;
  std::vector<long> obs;
};

struct GlmmDesign {
  CrossedDesign base;
  std::vector<LevelIndex> index; // one per factor
  static GlmmDesign from(CrossedDesign d); // builds caches and the indexes
};

using GlmmState = CremState; // same parametrization (mu, a, tau)

// overdispersed start (iid standard normal mu and effects). The response
// precision tau[0] is part of the model, not the sampled state, so it is
// always pinned to tau[0]; sample mode draws only the effect precisions
// tau[1..K] from the diffuse init law.
GlmmState glmm_init(const CrossedDesign& d, const Eigen::VectorXd& tau, TauMode mode, Rng& rng);

// one Metropolis-within-Gibbs iteration with local centering. Unmoved
// coordinates are recentred in increment form a += (mu_old - mu_new), so an
// identity mu-update leaves them bitwise unchanged.
void glmm_sweep(GlmmState& s, const GlmmDesign& d, const GlmmOpts& o, Rng& rng);

enum class MhVariant {
  blocked_reflection,            // joint proposal, reflection; joint acceptance
  blocked_maximal,               // joint proposal, rejection; joint acceptance
  blocked_factorized_reflection, // joint proposal, reflection; per-coordinate acceptance
  blocked_factorized_maximal,    // joint proposal, rejection; per-coordinate acceptance
  fully_factorized_reflection,   // per-coordinate proposal and acceptance
  fully_factorized_maximal       // per-coordinate proposal and acceptance
};

// one coupled Metropolis step on a block of independent coordinates with
// random-walk Gaussian proposals. logdens_{x,y}(i, v) is the log target of
// coordinate i for the respective chain, up to a constant. Proposals are
// coupled per the variant, acceptance always shares one uniform between the
// chains (per block for blocked_{reflection,maximal}, per coordinate
// otherwise). Updates x, y in place; returns coordinatewise equality flags.
std::vector<char> coupled_mh_block(Eigen::VectorXd& x, Eigen::VectorXd& y, MhVariant v,
                                   double proposal_sd,
                                   const std::function<double(long, double)>& logdens_x,
                                   const std::function<double(long, double)>& logdens_y, Rng& rng);
// per-coordinate, per-chain step sizes (reflection variants need sd_x == sd_y)
std::vector<char> coupled_mh_block(Eigen::VectorXd& x, Eigen::VectorXd& y, MhVariant v,
                                   const Eigen::VectorXd& sd_x, const Eigen::VectorXd& sd_y,
                                   const std::function<double(long, double)>& logdens_x,
                                   const std::function<double(long, double)>& logdens_y, Rng& rng);
// common-target convenience (product benchmark)
inline std::vector<char> coupled_mh_block(Eigen::VectorXd& x, Eigen::VectorXd& y, MhVariant v,
                                          double proposal_sd,
                                          const std::function<double(long, double)>& logdens,
                                          Rng& rng) {
  return coupled_mh_block(x, y, v, proposal_sd, logdens, logdens, rng);
}

// one-step maximal coupled model sweep: mu pairs via maximal Gaussian
// coupling (reflection when the conditional sds agree bitwise, rejection
// otherwise), xi blocks via S fully-factorized maximal Metropolis steps with
// shared acceptance, tau_k via maximal rejection gammas. Returns true when
// the states are identical afterwards.
bool glmm_coupled_sweep(GlmmState& x, GlmmState& y, const GlmmDesign& d, const GlmmOpts& o,
                        Rng& rng);

// benchmark: nu = prod_{i<dim} Lapl(0, b but for the model default 1/sqrt(2)),
// both chains start from independent nu-draws and run the coupled kernel
// until every coordinate is equal. Returns the meeting sweep, or -1 if
// max_iter sweeps pass first; frac_unmet (optional) records the fraction of
// unequal coordinates after each sweep.
long product_laplace_meeting(long dim, MhVariant v, double proposal_sd, double b, long max_iter,
                             Rng& rng, std::vector<double>* frac_unmet = nullptr);

// runner-compatible kernel; the scheme is one-step, so the contractive role
// is served by the same maximal sweep
struct GlmmKernel {
  const GlmmDesign* design = nullptr;
  GlmmOpts opts;

  using State = GlmmState;
  State single_step(const State& x, Rng& rng) const {
    State s = x;
    glmm_sweep(s, *design, opts, rng);
    return s;
  }
  std::pair<State, State> contractive_step(const State& x, const State& y, Rng& rng) const {
    State sx = x, sy = y;
    glmm_coupled_sweep(sx, sy, *design, opts, rng);
    return {std::move(sx), std::move(sy)};
  }
  struct MaxOut {
    State x, y;
    bool met;
  };
  MaxOut maximal_step(const State& x, const State& y, Rng& rng) const {
    State sx = x, sy = y;
    bool met = glmm_coupled_sweep(sx, sy, *design, opts, rng);
    return {std::move(sx), std::move(sy), met};
  }
  double distance(const State& x, const State& y) const {
    const bool with_tau = opts.tau_mode == TauMode::sample;
    return (x.to_vector(with_tau) - y.to_vector(with_tau)).norm();
  }
  static bool equal(const State& x, const State& y) { return x == y; }
};

} // namespace cgibbs
