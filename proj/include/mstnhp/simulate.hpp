#ifndef MSTNHP_SIMULATE_HPP
#define MSTNHP_SIMULATE_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mstnhp/core.hpp"
#include "mstnhp/kernels.hpp"

namespace mstnhp {

namespace detail {

constexpr long kMaxCandidates = 100000000;  // runaway supercriticality guard

// Upper bound on sup_s lambda_k(s, t) valid for every t >= u until the next
// accepted event. Each separable summand peaks at zero spatial lag and its
// exponential time factor only decays, so evaluating at u dominates.
inline double sup_intensity_bound(const SeparableKernelParams& spec,
                                  const std::vector<STEvent>& history, int k, double u) {
  double b = spec.mu[static_cast<std::size_t>(k - 1)];
  for (const STEvent& e : history) {
    const double a = spec.a(k, e.k);
    if (a <= 0.0) continue;  // inhibitory terms only lower the clamped intensity
    const double h_max = 1.0 / (2.0 * std::numbers::pi * spec.s2(k, e.k));
    b += a * h_max * temporal_factor(spec.b(k, e.k), u - e.t);
  }
  return b;
}

inline double sup_intensity_bound(const Biv4Kernel&, const std::vector<STEvent>& history,
                                  int k, double u) {
  double b = (k == 1) ? Biv4Kernel::mu1 : Biv4Kernel::mu2;
  for (const STEvent& e : history) b += Biv4Kernel::future_sup(k, e.k, u - e.t);
  return b;
}

}  // namespace detail

// Exact Ogata thinning on domain x [0, T]: candidates from a dominating
// homogeneous proposal (rate bound x |S|, locations uniform on the domain),
// accepted with probability sum_k lambda_k(s, u) / bound.
template <class Spec>
EventSequence simulate_st(const Spec& spec, const SpatialDomain& domain, double T,
                          RandomStream& rng) {
  if (!(T >= 0.0)) throw std::invalid_argument("simulate_st: T must be >= 0");
  const int K = static_cast<int>(spec.K);
  std::vector<STEvent> events;
  std::vector<double> lambdas(static_cast<std::size_t>(K));
  double u = 0.0;
  long candidates = 0;
  while (true) {
    double bound = 0.0;
    for (int k = 1; k <= K; ++k) bound += detail::sup_intensity_bound(spec, events, k, u);
    if (!std::isfinite(bound) || bound <= 0.0)
      throw std::runtime_error("simulate_st: nonfinite or degenerate dominating rate");
    u += rng.exponential(bound * domain.area());
    if (u > T) break;
    if (++candidates > detail::kMaxCandidates)
      throw std::runtime_error("simulate_st: candidate budget exhausted (supercritical spec?)");
    const Point s = domain.sample_uniform(rng);
    double total = 0.0;
    for (int k = 1; k <= K; ++k) {
      lambdas[static_cast<std::size_t>(k - 1)] = st_intensity(spec, events, k, s, u);
      total += lambdas[static_cast<std::size_t>(k - 1)];
    }
    if (rng.uniform() * bound < total) {
      double pick = rng.uniform() * total;
      int k = K;
      for (int j = 1; j <= K; ++j) {
        pick -= lambdas[static_cast<std::size_t>(j - 1)];
        if (pick < 0.0) {
          k = j;
          break;
        }
      }
      events.push_back({k, u, s});
    }
  }
  return EventSequence(std::move(events), T, domain, true);
}

inline EventSequence simulate_st(const STKernel& spec, const SpatialDomain& domain,
                                 double T, RandomStream& rng) {
  return std::visit([&](const auto& sp) { return simulate_st(sp, domain, T, rng); }, spec);
}

// Ogata thinning in time only. The dominating rate is the current total
// intensity with inhibitory weights dropped, which decays between events.
inline EventSequence simulate_temporal(const TemporalHawkesSpec& spec, double T,
                                       RandomStream& rng) {
  if (!(T >= 0.0)) throw std::invalid_argument("simulate_temporal: T must be >= 0");
  const int K = spec.K;
  std::vector<STEvent> events;
  std::vector<double> lambdas(static_cast<std::size_t>(K));
  double u = 0.0;
  long candidates = 0;
  while (true) {
    double bound = 0.0;
    for (int k = 1; k <= K; ++k) {
      double b = spec.mu[static_cast<std::size_t>(k - 1)];
      const double bk = spec.beta[static_cast<std::size_t>(k - 1)];
      for (const STEvent& e : events) {
        const double a = spec.a(k, e.k);
        if (a > 0.0) b += a * std::exp(-bk * (u - e.t));
      }
      bound += b;
    }
    if (!std::isfinite(bound) || bound <= 0.0)
      throw std::runtime_error("simulate_temporal: nonfinite or degenerate dominating rate");
    u += rng.exponential(bound);
    if (u > T) break;
    if (++candidates > detail::kMaxCandidates)
      throw std::runtime_error(
          "simulate_temporal: candidate budget exhausted (supercritical spec?)");
    double total = 0.0;
    for (int k = 1; k <= K; ++k) {
      lambdas[static_cast<std::size_t>(k - 1)] = temporal_intensity(spec, events, k, u);
      total += lambdas[static_cast<std::size_t>(k - 1)];
    }
    if (rng.uniform() * bound < total) {
      double pick = rng.uniform() * total;
      int k = K;
      for (int j = 1; j <= K; ++j) {
        pick -= lambdas[static_cast<std::size_t>(j - 1)];
        if (pick < 0.0) {
          k = j;
          break;
        }
      }
      events.push_back({k, u, {}});
    }
  }
  return EventSequence(std::move(events), T, SpatialDomain::unit_square(), false);
}

// Drops locations; exact-time duplicates collapse to one event keeping the
// earliest-listed mark. Idempotent.
inline std::vector<STEvent> collapse_events(const std::vector<STEvent>& events) {
  std::vector<STEvent> out;
  out.reserve(events.size());
  for (const STEvent& e : events) {
    if (!out.empty() && out.back().t == e.t) continue;
    out.push_back({e.k, e.t, {}});
  }
  return out;
}

inline EventSequence collapse_to_temporal(const EventSequence& seq) {
  return EventSequence(collapse_events(seq.events()), seq.T(), seq.domain(), false);
}

struct Dataset {
  std::vector<EventSequence> train;
  std::vector<EventSequence> valid;
  std::vector<EventSequence> test;
};

struct SplitSpec {
  int train = 0;
  int valid = 0;
  int test = 0;
};

// Independent realizations partitioned in generation order; sequence i draws
// from the child stream (seed, i) so splits stay reproducible.
template <class Generator>
Dataset make_dataset_with(int n_seqs, SplitSpec split, const RandomStream& rng,
                          Generator&& generate) {
  if (split.train + split.valid + split.test != n_seqs)
    throw std::invalid_argument("make_dataset: split does not sum to n_seqs");
  Dataset d;
  for (int i = 0; i < n_seqs; ++i) {
    RandomStream child = rng.child(static_cast<std::uint64_t>(i));
    EventSequence seq = generate(child);
    if (i < split.train)
      d.train.push_back(std::move(seq));
    else if (i < split.train + split.valid)
      d.valid.push_back(std::move(seq));
    else
      d.test.push_back(std::move(seq));
  }
  return d;
}

template <class Spec>
Dataset make_dataset(const Spec& spec, const SpatialDomain& domain, double T, int n_seqs,
                     SplitSpec split, const RandomStream& rng) {
  return make_dataset_with(n_seqs, split, rng, [&](RandomStream& child) {
    return simulate_st(spec, domain, T, child);
  });
}

inline Dataset make_dataset(const TemporalHawkesSpec& spec, double T, int n_seqs,
                            SplitSpec split, const RandomStream& rng) {
  return make_dataset_with(n_seqs, split, rng, [&](RandomStream& child) {
    return simulate_temporal(spec, T, child);
  });
}

}  // namespace mstnhp

#endif  // MSTNHP_SIMULATE_HPP
