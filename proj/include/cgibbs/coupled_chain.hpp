#pragma once
// Coupled-pair runner and unbiased estimators. The pair starts with X one
// kernel application ahead of Y (X^{-1} ~ pi0, X^0 ~ P(X^{-1}, .), Y^0 ~ pi0
// independent); each sweep applies the two-step coupling (common-random-number
// contraction above the distance threshold, maximal coupling at or below it)
// until the chains are identical, after which X continues alone as far as the
// time-averaged estimator needs. The coupling is faithful: chains that meet
// stay bitwise equal, and Y consumes no randomness after the meeting sweep.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cgibbs/rng.hpp"

namespace cgibbs {

struct RunResult {
  bool truncated = false;
  long T = -1; // meeting sweep: smallest t >= 0 with X^t == Y^t (valid when !truncated)
  std::vector<Eigen::VectorXd> hx; // h(X^t), t = 0..(end of run or extension)
  std::vector<Eigen::VectorXd> hy; // h(Y^t), t = 0..min(T, truncation point)
  std::vector<double> dist_trace;  // d(X^t, Y^t) ahead of sweep t -> t+1
  std::vector<char> mode_trace;    // 'c' contractive / 'm' maximal for that sweep
};

// Kernel: needs State, single_step(x, rng), contractive_step(x, y, rng),
// maximal_step(x, y, rng) -> {x, y, met}, distance(x, y), equal(x, y).
// Pi0: Rng& -> State. H: const State& -> Eigen::VectorXd.
template <class Kernel, class Pi0, class H>
RunResult run_coupled(const Kernel& kern, Pi0&& pi0, H&& h, double eps, long max_iter,
                      long extend_to, Rng& rng) {
  if (max_iter < 1) throw std::invalid_argument("run_coupled: max_iter must be >= 1");
  if (eps < 0) throw std::invalid_argument("run_coupled: eps must be >= 0");

  using State = typename Kernel::State;
  State xprev = pi0(rng);
  State x = kern.single_step(xprev, rng);
  State y = pi0(rng);

  RunResult r;
  r.hx.push_back(h(x));
  r.hy.push_back(h(y));

  bool met = Kernel::equal(x, y);
  long t = 0;
  if (met) r.T = 0;
  while (!met && t < max_iter) {
    const double d = kern.distance(x, y);
    r.dist_trace.push_back(d);
    if (d > eps) {
      r.mode_trace.push_back('c');
      auto pair = kern.contractive_step(x, y, rng);
      x = std::move(pair.first);
      y = std::move(pair.second);
      met = Kernel::equal(x, y);
    } else {
      r.mode_trace.push_back('m');
      auto out = kern.maximal_step(x, y, rng);
      x = std::move(out.x);
      y = std::move(out.y);
      met = out.met || Kernel::equal(x, y);
    }
    ++t;
    r.hx.push_back(h(x));
    r.hy.push_back(h(y));
    if (met) r.T = t;
  }

  if (!met) {
    r.truncated = true;
    r.T = -1;
    return r;
  }
  while ((long)r.hx.size() - 1 < extend_to) {
    x = kern.single_step(x, rng);
    r.hx.push_back(h(x));
  }
  return r;
}

// single-start estimator: h(X^k) + sum_{t=k+1}^{T-1} (h(X^t) - h(Y^t))
inline Eigen::VectorXd h_k(const RunResult& r, long k) {
  if (r.truncated) throw std::invalid_argument("h_k: run was truncated");
  if (k < 0 || k >= (long)r.hx.size())
    throw std::invalid_argument("h_k: k outside the recorded trace");
  Eigen::VectorXd v = r.hx[k];
  for (long t = k + 1; t <= r.T - 1; ++t) v += r.hx[t] - r.hy[t];
  return v;
}

// time-averaged estimator over starts k..m:
//   (m-k+1)^{-1} sum_{l=k}^m h(X^l)
//   + sum_{l=k+1}^{T-1} min(1, (l-k)/(m-k+1)) (h(X^l) - h(Y^l))
inline Eigen::VectorXd h_k_m(const RunResult& r, long k, long m) {
  if (r.truncated) throw std::invalid_argument("h_k_m: run was truncated");
  if (k < 0 || m < k) throw std::invalid_argument("h_k_m: need 0 <= k <= m");
  if (m >= (long)r.hx.size())
    throw std::invalid_argument("h_k_m: m outside the recorded trace");
  const double span = double(m - k + 1);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(r.hx[0].size());
  for (long l = k; l <= m; ++l) v += r.hx[l];
  v /= span;
  for (long l = k + 1; l <= r.T - 1; ++l)
    v += std::min(1.0, double(l - k) / span) * (r.hx[l] - r.hy[l]);
  return v;
}

// pilot rule: k = the (1-indexed) ceil(q n)-th order statistic of the pilot
// meeting times, at least 1; m = mult * k
struct KmChoice {
  long k = 1;
  long m = 5;
};
inline KmChoice choose_k_m(std::vector<long> meeting_times, double quantile = 0.9,
                           long mult = 5) {
  if (meeting_times.empty()) throw std::invalid_argument("choose_k_m: no pilot meeting times");
  if (quantile <= 0 || quantile > 1) throw std::invalid_argument("choose_k_m: bad quantile");
  if (mult < 1) throw std::invalid_argument("choose_k_m: mult must be >= 1");
  std::sort(meeting_times.begin(), meeting_times.end());
  const size_t n = meeting_times.size();
  size_t idx = (size_t)std::ceil(quantile * double(n));
  idx = std::min(std::max<size_t>(idx, 1), n) - 1;
  KmChoice c;
  c.k = std::max<long>(1, meeting_times[idx]);
  c.m = mult * c.k;
  return c;
}

} // namespace cgibbs
