#ifndef MSTNHP_KERNELS_HPP
#define MSTNHP_KERNELS_HPP

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "mstnhp/core.hpp"

namespace mstnhp {

// Exponential temporal factor beta * exp(-beta dt), zero for dt <= 0.
inline double temporal_factor(double beta, double dt) {
  if (dt <= 0.0) return 0.0;
  return beta * std::exp(-beta * dt);
}

// Isotropic bivariate Gaussian density at displacement ds.
inline double spatial_factor(double sigma2, const Point& ds) {
  const double r2 = ds.x * ds.x + ds.y * ds.y;
  return std::exp(-r2 / (2.0 * sigma2)) / (2.0 * std::numbers::pi * sigma2);
}

// Separable multivariate Hawkes triggering: baseline vector plus
// alpha * gaussian(space) * exponential(time) per ordered type pair.
// Matrices are row-major K x K; entry (k,l) is the effect of a past type-l
// event on type-k intensity.
struct SeparableKernelParams {
  int K = 1;
  std::vector<double> mu;      // K, rate per unit time per unit area
  std::vector<double> alpha;   // K*K branching weights, may be negative
  std::vector<double> beta;    // K*K temporal rates, > 0
  std::vector<double> sigma2;  // K*K spatial variances, > 0

  void validate() const {
    if (K < 1) throw std::invalid_argument("SeparableKernelParams: K < 1");
    const std::size_t k = static_cast<std::size_t>(K);
    if (mu.size() != k || alpha.size() != k * k || beta.size() != k * k ||
        sigma2.size() != k * k)
      throw std::invalid_argument("SeparableKernelParams: shape mismatch");
    for (double m : mu)
      if (!(m >= 0.0)) throw std::invalid_argument("SeparableKernelParams: mu < 0");
    for (std::size_t i = 0; i < k * k; ++i)
      if (!(beta[i] > 0.0) || !(sigma2[i] > 0.0))
        throw std::invalid_argument("SeparableKernelParams: beta/sigma2 must be > 0");
  }

  double a(int k, int l) const { return alpha[(k - 1) * K + (l - 1)]; }
  double b(int k, int l) const { return beta[(k - 1) * K + (l - 1)]; }
  double s2(int k, int l) const { return sigma2[(k - 1) * K + (l - 1)]; }
};

// Hard-coded K=2 non-separable kernel with power-law, double-exponential and
// truncated-sine temporal components, all spatially modulated by exp(-2 |ds|).
struct Biv4Kernel {
  static constexpr int K = 2;
  static constexpr double mu1 = 0.1;
  static constexpr double mu2 = 0.1;

  // Triggering of a type-k intensity by a past type-l event.
  static double g(int k, int l, const Point& ds, double dt) {
    if (dt <= 0.0) return 0.0;
    const double space = std::exp(-2.0 * std::hypot(ds.x, ds.y));
    if (k == 1 && l == 1) return 0.15 * std::pow(0.5 + dt, -1.3) * space;
    if (k == 1 && l == 2) return 0.03 * std::exp(-0.3 * dt) * space;
    if (k == 2 && l == 1)
      return (0.05 * std::exp(-0.2 * dt) + 0.16 * std::exp(-0.8 * dt)) * space;
    // (2,2): truncated sine, supported on dt in [0,4] only
    if (dt > 4.0) return 0.0;
    return std::max(0.0, std::sin(dt) / 8.0) * space;
  }

  // Bound on sup over space and over all future lags >= dt, used by the
  // thinning simulator (the sine component is not monotone in dt).
  static double future_sup(int k, int l, double dt) {
    const double d = std::max(dt, 0.0);
    if (k == 1 && l == 1) return 0.15 * std::pow(0.5 + d, -1.3);
    if (k == 1 && l == 2) return 0.03 * std::exp(-0.3 * d);
    if (k == 2 && l == 1) return 0.05 * std::exp(-0.2 * d) + 0.16 * std::exp(-0.8 * d);
    constexpr double half_pi = std::numbers::pi / 2.0;
    if (d < half_pi) return 0.125;
    if (d <= std::numbers::pi) return std::sin(d) / 8.0;
    return 0.0;
  }
};

// Purely temporal multivariate Hawkes with row-shared decay rates.
struct TemporalHawkesSpec {
  int K = 1;
  std::vector<double> mu;     // K
  std::vector<double> alpha;  // K*K
  std::vector<double> beta;   // K, shared across source types per target

  void validate() const {
    if (K < 1) throw std::invalid_argument("TemporalHawkesSpec: K < 1");
    const std::size_t k = static_cast<std::size_t>(K);
    if (mu.size() != k || alpha.size() != k * k || beta.size() != k)
      throw std::invalid_argument("TemporalHawkesSpec: shape mismatch");
    for (double m : mu)
      if (!(m > 0.0)) throw std::invalid_argument("TemporalHawkesSpec: mu must be > 0");
    for (double b : beta)
      if (!(b > 0.0)) throw std::invalid_argument("TemporalHawkesSpec: beta must be > 0");
  }

  double a(int k, int l) const { return alpha[(k - 1) * K + (l - 1)]; }
};

using STKernel = std::variant<SeparableKernelParams, Biv4Kernel>;

inline int kernel_types(const STKernel& spec) {
  return std::visit([](const auto& s) { return static_cast<int>(s.K); }, spec);
}

// Unclamped intensity sum over a history prefix; used internally and by
// superposition tests.
inline double st_intensity_raw(const SeparableKernelParams& spec,
                               std::span<const STEvent> history, int k, const Point& s,
                               double t) {
  double sum = spec.mu[static_cast<std::size_t>(k - 1)];
  for (const STEvent& e : history) {
    if (e.t >= t) break;
    const double g = temporal_factor(spec.b(k, e.k), t - e.t);
    if (g == 0.0) continue;
    sum += spec.a(k, e.k) * spatial_factor(spec.s2(k, e.k), {s.x - e.s.x, s.y - e.s.y}) * g;
  }
  return sum;
}

inline double st_intensity_raw(const Biv4Kernel&, std::span<const STEvent> history, int k,
                               const Point& s, double t) {
  double sum = (k == 1) ? Biv4Kernel::mu1 : Biv4Kernel::mu2;
  for (const STEvent& e : history) {
    if (e.t >= t) break;
    sum += Biv4Kernel::g(k, e.k, {s.x - e.s.x, s.y - e.s.y}, t - e.t);
  }
  return sum;
}

// Conditional intensity lambda_k(s, t | history), floored at zero so that
// inhibitory configurations stay valid rates.
template <class Spec>
double st_intensity(const Spec& spec, std::span<const STEvent> history, int k,
                    const Point& s, double t) {
  if (k < 1 || k > static_cast<int>(spec.K))
    throw std::invalid_argument("st_intensity: type id out of range");
  return std::max(0.0, st_intensity_raw(spec, history, k, s, t));
}

inline double st_intensity(const STKernel& spec, std::span<const STEvent> history, int k,
                           const Point& s, double t) {
  return std::visit([&](const auto& sp) { return st_intensity(sp, history, k, s, t); },
                    spec);
}

inline double temporal_intensity(const TemporalHawkesSpec& spec,
                                 std::span<const STEvent> history, int k, double t) {
  if (k < 1 || k > spec.K)
    throw std::invalid_argument("temporal_intensity: type id out of range");
  const double bk = spec.beta[static_cast<std::size_t>(k - 1)];
  double sum = spec.mu[static_cast<std::size_t>(k - 1)];
  for (const STEvent& e : history) {
    if (e.t >= t) break;
    sum += spec.a(k, e.k) * std::exp(-bk * (t - e.t));
  }
  return std::max(0.0, sum);
}

// Exact integral of the (unclamped) temporal intensity over [t0, t1];
// closed form for exponential kernels. Oracle for time-rescaling tests.
inline double compensator_temporal(const TemporalHawkesSpec& spec,
                                   std::span<const STEvent> history, int k, double t0,
                                   double t1) {
  if (!(t0 < t1)) throw std::invalid_argument("compensator_temporal: need t0 < t1");
  const double bk = spec.beta[static_cast<std::size_t>(k - 1)];
  double total = spec.mu[static_cast<std::size_t>(k - 1)] * (t1 - t0);
  for (const STEvent& e : history) {
    if (e.t >= t1) break;
    const double lo = std::max(t0, e.t);
    total += spec.a(k, e.k) / bk *
             (std::exp(-bk * (lo - e.t)) - std::exp(-bk * (t1 - e.t)));
  }
  return total;
}

// Table-1 configurations (bivariate, unit-square experiments).
inline SeparableKernelParams biv1_params() {
  SeparableKernelParams p;
  p.K = 2;
  p.mu = {0.1, 0.1};
  p.alpha = {0.25, 0.1, 0.1, 0.25};
  p.beta = {0.3, 0.3, 0.3, 0.3};
  p.sigma2 = {0.5, 0.5, 0.5, 0.5};
  return p;
}

inline SeparableKernelParams biv2_params() {
  SeparableKernelParams p = biv1_params();
  p.alpha = {0.25, -0.1, -0.1, 0.25};
  return p;
}

inline SeparableKernelParams biv3_params() {
  SeparableKernelParams p = biv1_params();
  p.beta = {0.1, 0.1, 0.1, 0.1};
  p.sigma2 = {0.5, 0.25, 0.25, 0.5};
  return p;
}

// Bivariate temporal Hawkes used for the temporal-model comparisons.
inline TemporalHawkesSpec compare_temporal_spec() {
  TemporalHawkesSpec p;
  p.K = 2;
  p.mu = {0.3, 0.3};
  p.alpha = {0.15, 0.02, 0.01, 0.15};
  p.beta = {1.3, 0.4};
  return p;
}

}  // namespace mstnhp

#endif  // MSTNHP_KERNELS_HPP
