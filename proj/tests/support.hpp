// Shared test oracles: goodness-of-fit statistics, closed-form and quadrature
// compensators for the parametric kernels, finite-difference gradient checks,
// and an independent (tape-free) log-likelihood implementation.

#ifndef MSTNHP_TESTS_SUPPORT_HPP
#define MSTNHP_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "mstnhp/core.hpp"
#include "mstnhp/ctlstm.hpp"
#include "mstnhp/kernels.hpp"
#include "mstnhp/likelihood.hpp"

namespace testsupport {

using namespace mstnhp;

// --- Kolmogorov-Smirnov ------------------------------------------------------

// One-sample KS statistic of `gaps` against Exp(1).
inline double ks_stat_exp1(std::vector<double> gaps) {
  std::sort(gaps.begin(), gaps.end());
  const double n = static_cast<double>(gaps.size());
  double d = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double cdf = 1.0 - std::exp(-gaps[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(cdf - lo, hi - cdf));
  }
  return d;
}

// Asymptotic one-sample critical value (Stephens' correction).
inline double ks_critical(std::size_t n, double alpha) {
  const double c = alpha <= 0.011 ? 1.628 : 1.358;  // 1% / 5%
  const double sn = std::sqrt(static_cast<double>(n));
  return c / (sn + 0.12 + 0.11 / sn);
}

// Two-sample KS statistic.
inline double ks_stat_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline double ks_two_sample_critical(std::size_t na, std::size_t nb, double alpha) {
  const double c = alpha <= 0.011 ? 1.628 : 1.358;
  return c * std::sqrt((static_cast<double>(na) + static_cast<double>(nb)) /
                       (static_cast<double>(na) * static_cast<double>(nb)));
}

// --- Poisson chi-square GOF --------------------------------------------------

inline double poisson_pmf(int k, double lambda) {
  double logp = -lambda + k * std::log(lambda);
  for (int i = 2; i <= k; ++i) logp -= std::log(static_cast<double>(i));
  return std::exp(logp);
}

// Chi-square statistic for observed counts vs Poisson(lambda), bins pooled so
// every expected count is >= 5. Returns (statistic, degrees of freedom).
inline std::pair<double, int> poisson_chi2(const std::vector<int>& counts, double lambda) {
  int cmax = 0;
  for (int c : counts) cmax = std::max(cmax, c);
  std::vector<double> expected;
  std::vector<double> observed;
  const double n = static_cast<double>(counts.size());
  double e_acc = 0.0, o_acc = 0.0, tail_p = 1.0;
  for (int k = 0; k <= cmax; ++k) {
    const double p = poisson_pmf(k, lambda);
    tail_p -= p;
    e_acc += n * p;
    for (int c : counts) o_acc += (c == k) ? 1.0 : 0.0;
    if (e_acc >= 5.0) {
      expected.push_back(e_acc);
      observed.push_back(o_acc);
      e_acc = 0.0;
      o_acc = 0.0;
    }
  }
  // tail bin: everything above cmax plus any unpooled remainder
  e_acc += n * std::max(tail_p, 0.0);
  if (!expected.empty() && e_acc < 5.0) {
    expected.back() += e_acc;
    observed.back() += o_acc;
  } else {
    expected.push_back(e_acc);
    observed.push_back(o_acc);
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const double d = observed[i] - expected[i];
    chi2 += d * d / expected[i];
  }
  return {chi2, static_cast<int>(expected.size()) - 1};
}

// Wilson-Hilferty approximation to the chi-square upper quantile.
inline double chi2_critical(int df, double alpha) {
  const double z = alpha <= 0.011 ? 2.3263 : 1.6449;  // 1% / 5%
  const double k = static_cast<double>(df);
  const double h = 2.0 / (9.0 * k);
  const double x = 1.0 - h + z * std::sqrt(h);
  return k * x * x * x;
}

// --- Parametric compensator oracles -----------------------------------------

// Gaussian mass over a rectangle, closed form via erf.
inline double gaussian_rect_mass(double sigma2, const Point& center,
                                 const SpatialDomain& domain) {
  const double s = std::sqrt(2.0 * sigma2);
  const double mx = 0.5 * (std::erf((domain.x1() - center.x) / s) -
                           std::erf((domain.x0() - center.x) / s));
  const double my = 0.5 * (std::erf((domain.y1() - center.y) / s) -
                           std::erf((domain.y0() - center.y) / s));
  return mx * my;
}

// Gaussian mass over the domain by nx x ny midpoint quadrature; written with
// its own arithmetic so it is independent of the library's spatial_factor.
inline double gaussian_mass_quadrature(double sigma2, const Point& center,
                                       const SpatialDomain& domain, int nx, int ny) {
  const double dx = (domain.x1() - domain.x0()) / nx;
  const double dy = (domain.y1() - domain.y0()) / ny;
  const double norm = 1.0 / (2.0 * std::numbers::pi * sigma2);
  double acc = 0.0;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const double x = domain.x0() + (i + 0.5) * dx - center.x;
      const double y = domain.y0() + (j + 0.5) * dy - center.y;
      acc += norm * std::exp(-(x * x + y * y) / (2.0 * sigma2)) * dx * dy;
    }
  }
  return acc;
}

// Spatially integrated compensator for a separable kernel (unclamped form):
// Lambda_k(t0,t1) = integral over [t0,t1] x S of lambda_k. Spatial masses per
// (target type, event) are precomputed once.
class STCompensatorOracle {
 public:
  STCompensatorOracle(const SeparableKernelParams& spec, const SpatialDomain& domain,
                      std::span<const STEvent> events, int nx = 64, int ny = 64,
                      bool use_erf = false)
      : spec_(spec), domain_(domain), events_(events.begin(), events.end()) {
    const std::size_t K = static_cast<std::size_t>(spec.K);
    mass_.assign(K, std::vector<double>(events_.size(), 0.0));
    for (int k = 1; k <= spec.K; ++k) {
      for (std::size_t i = 0; i < events_.size(); ++i) {
        const double s2 = spec.s2(k, events_[i].k);
        mass_[static_cast<std::size_t>(k - 1)][i] =
            use_erf ? gaussian_rect_mass(s2, events_[i].s, domain)
                    : gaussian_mass_quadrature(s2, events_[i].s, domain, nx, ny);
      }
    }
  }

  double compensator(int k, double t0, double t1) const {
    double acc =
        spec_.mu[static_cast<std::size_t>(k - 1)] * domain_.area() * (t1 - t0);
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const STEvent& e = events_[i];
      if (e.t >= t1) break;
      const double b = spec_.b(k, e.k);
      const double lo = std::max(t0, e.t);
      acc += spec_.a(k, e.k) * mass_[static_cast<std::size_t>(k - 1)][i] *
             (std::exp(-b * (lo - e.t)) - std::exp(-b * (t1 - e.t)));
    }
    return acc;
  }

  // Spatially integrated intensity at time t (left limit).
  double integrated_intensity(int k, double t) const {
    double acc = spec_.mu[static_cast<std::size_t>(k - 1)] * domain_.area();
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const STEvent& e = events_[i];
      if (e.t >= t) break;
      const double b = spec_.b(k, e.k);
      acc += spec_.a(k, e.k) * mass_[static_cast<std::size_t>(k - 1)][i] * b *
             std::exp(-b * (t - e.t));
    }
    return acc;
  }

 private:
  SeparableKernelParams spec_;
  SpatialDomain domain_;
  std::vector<STEvent> events_;
  std::vector<std::vector<double>> mass_;  // [k-1][event]
};

// Per-type time-rescaled inter-event gaps for one sequence; gap j for type k
// is Lambda_k between consecutive type-k event times (first gap from 0).
inline std::vector<double> rescaled_gaps(const STCompensatorOracle& oracle, int k,
                                         std::span<const STEvent> events) {
  std::vector<double> gaps;
  double prev = 0.0;
  for (const STEvent& e : events) {
    if (e.k != k) continue;
    gaps.push_back(oracle.compensator(k, prev, e.t));
    prev = e.t;
  }
  return gaps;
}

// --- Euler-discretized temporal Hawkes oracle --------------------------------

// Independent simulator for cross-checking simulate_temporal: per step of
// length dt each type fires with probability lambda_k * dt.
inline std::vector<STEvent> simulate_temporal_euler(const TemporalHawkesSpec& spec,
                                                    double T, double dt,
                                                    RandomStream& rng) {
  std::vector<STEvent> events;
  const long steps = static_cast<long>(T / dt);
  for (long step = 0; step < steps; ++step) {
    const double t = (step + 1) * dt;
    for (int k = 1; k <= spec.K; ++k) {
      double lam = spec.mu[static_cast<std::size_t>(k - 1)];
      const double bk = spec.beta[static_cast<std::size_t>(k - 1)];
      for (const STEvent& e : events) lam += spec.a(k, e.k) * std::exp(-bk * (t - e.t));
      if (rng.uniform() < std::max(0.0, lam) * dt) {
        events.push_back({k, t, {}});
        break;  // at most one event per step
      }
    }
  }
  return events;
}

// --- Tape-free log-likelihood (independent of the autodiff path) -------------

inline double plain_sequence_loglik(const Model& model, const EventSequence& seq,
                                    const std::vector<MCPoint>& pts) {
  const int K = model.config().K;
  std::vector<PlainState> states;
  states.reserve(seq.size() + 1);
  states.push_back(plain_init_state(model, seq.domain().centroid()));
  double event_term = 0.0;
  for (const STEvent& e : seq.events()) {
    const PlainState& st = states.back();
    std::vector<double> c_minus = plain_decay_cell(model, st, e.s, e.t);
    std::vector<double> h_minus(c_minus.size());
    for (std::size_t d = 0; d < c_minus.size(); ++d)
      h_minus[d] = st.o[d] * std::tanh(c_minus[d]);
    event_term += std::log(plain_intensity_from_hidden(model, h_minus, e.k));
    states.push_back(
        plain_update_state(model, c_minus, h_minus, st.c_bar, e.k, e.t, e.s));
  }
  std::vector<double> times;
  for (const STEvent& e : seq.events()) times.push_back(e.t);
  double mc_acc = 0.0;
  for (const MCPoint& p : pts) {
    const std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(times.begin(), times.end(), p.t) - times.begin());
    const std::vector<double> h = plain_hidden(model, states[idx], p.s, p.t);
    for (int k = 1; k <= K; ++k) mc_acc += plain_intensity_from_hidden(model, h, k);
  }
  const double volume = seq.T() * (model.spatial() ? seq.domain().area() : 1.0);
  return event_term - volume * mc_acc / static_cast<double>(pts.size());
}

// --- Finite-difference gradient check ----------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

// Central differences on the flat parameter vector of `store` against the
// gradients currently held in it. `f` re-evaluates the scalar objective from
// the store's current values.
inline GradCheckResult finite_diff_check(ParamStore& store,
                                         const std::function<double()>& f, double h,
                                         double abs_floor = 1e-8) {
  const std::vector<double> base = store.flat_values();
  const std::vector<double> analytic = store.flat_grads();
  GradCheckResult r;
  std::vector<double> work = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    work[i] = base[i] + h;
    store.set_flat_values(work);
    const double fp = f();
    work[i] = base[i] - h;
    store.set_flat_values(work);
    const double fm = f();
    work[i] = base[i];
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), abs_floor});
    const double rel = std::abs(fd - analytic[i]) / denom;
    if (rel > r.max_rel_error) {
      r.max_rel_error = rel;
      r.worst_index = i;
    }
  }
  store.set_flat_values(base);
  return r;
}

}  // namespace testsupport

#endif
