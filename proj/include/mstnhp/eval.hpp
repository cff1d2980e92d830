#ifndef MSTNHP_EVAL_HPP
#define MSTNHP_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "mstnhp/core.hpp"
#include "mstnhp/ctlstm.hpp"
#include "mstnhp/kernels.hpp"

namespace mstnhp {

struct GridSpec {
  int nx = 64;
  int ny = 64;

  void validate() const {
    if (nx < 2 || ny < 2) throw std::invalid_argument("GridSpec: nx, ny must be >= 2");
  }
};

// Conditional intensity surface for a fixed realized history; fitted neural
// models and parametric ground truth expose the same interface so recovery
// diagnostics share grids and conditioning events.
class IntensityField {
 public:
  virtual ~IntensityField() = default;
  virtual int K() const = 0;
  virtual bool spatial() const = 0;
  virtual double lambda(int k, const Point& s, double t) const = 0;
  virtual void lambda_all(const Point& s, double t, std::span<double> out) const {
    for (int k = 1; k <= K(); ++k) out[static_cast<std::size_t>(k - 1)] = lambda(k, s, t);
  }
};

template <class Spec>
class ParametricField final : public IntensityField {
 public:
  ParametricField(Spec spec, const EventSequence& seq) : spec_(std::move(spec)), seq_(seq) {
    for (const STEvent& e : seq.events()) times_.push_back(e.t);
  }

  int K() const override { return static_cast<int>(spec_.K); }
  bool spatial() const override { return true; }

  double lambda(int k, const Point& s, double t) const override {
    return st_intensity(spec_, prefix(t), k, s, t);
  }

 private:
  std::span<const STEvent> prefix(double t) const {
    const std::size_t n = static_cast<std::size_t>(
        std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
    return {seq_.events().data(), n};
  }

  Spec spec_;
  const EventSequence& seq_;
  std::vector<double> times_;
};

class TemporalParametricField final : public IntensityField {
 public:
  TemporalParametricField(TemporalHawkesSpec spec, const EventSequence& seq)
      : spec_(std::move(spec)), seq_(seq) {
    for (const STEvent& e : seq.events()) times_.push_back(e.t);
  }

  int K() const override { return spec_.K; }
  bool spatial() const override { return false; }

  double lambda(int k, const Point&, double t) const override {
    const std::size_t n = static_cast<std::size_t>(
        std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
    return temporal_intensity(spec_, {seq_.events().data(), n}, k, t);
  }

 private:
  TemporalHawkesSpec spec_;
  const EventSequence& seq_;
  std::vector<double> times_;
};

class NeuralField final : public IntensityField {
 public:
  NeuralField(const Model& model, const EventSequence& seq)
      : model_(model), states_(plain_sequence_states(model, seq)) {
    for (const STEvent& e : seq.events()) times_.push_back(e.t);
  }

  int K() const override { return model_.config().K; }
  bool spatial() const override { return model_.spatial(); }

  double lambda(int k, const Point& s, double t) const override {
    return plain_intensity(model_, state_at(t), k, s, t);
  }

  void lambda_all(const Point& s, double t, std::span<double> out) const override {
    const std::vector<double> h = plain_hidden(model_, state_at(t), s, t);
    for (int k = 1; k <= K(); ++k)
      out[static_cast<std::size_t>(k - 1)] = plain_intensity_from_hidden(model_, h, k);
  }

 private:
  const PlainState& state_at(double t) const {
    const std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
    return states_[idx];
  }

  const Model& model_;
  std::vector<PlainState> states_;
  std::vector<double> times_;
};

inline std::vector<double> uniform_time_grid(double t0, double t1, int n) {
  std::vector<double> ts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    ts[static_cast<std::size_t>(i)] =
        t0 + (t1 - t0) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return ts;
}

namespace detail {

struct QuadCell {
  Point center;
  double weight;
};

inline std::vector<QuadCell> quadrature_cells(const SpatialDomain& domain,
                                              const GridSpec& grid) {
  grid.validate();
  std::vector<QuadCell> cells;
  const double dx = (domain.x1() - domain.x0()) / grid.nx;
  const double dy = (domain.y1() - domain.y0()) / grid.ny;
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.ny; ++j) {
      Point c{domain.x0() + (i + 0.5) * dx, domain.y0() + (j + 0.5) * dy};
      if (domain.kind() == SpatialDomain::Kind::Polygon && !domain.contains(c)) continue;
      cells.push_back({c, dx * dy});
    }
  }
  return cells;
}

}  // namespace detail

// Per-type temporal curve: the spatial integral of the intensity by midpoint
// quadrature for spatial fields, or the intensity itself for temporal ones.
// Returns row-major [times][K].
inline std::vector<std::vector<double>> temporal_curve(const IntensityField& field,
                                                       const SpatialDomain& domain,
                                                       std::span<const double> times,
                                                       const GridSpec& grid = {}) {
  const int K = field.K();
  std::vector<std::vector<double>> out(times.size(),
                                       std::vector<double>(static_cast<std::size_t>(K), 0.0));
  std::vector<double> lam(static_cast<std::size_t>(K));
  if (!field.spatial()) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      field.lambda_all({}, times[i], lam);
      out[i] = lam;
    }
    return out;
  }
  const auto cells = detail::quadrature_cells(domain, grid);
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (const auto& cell : cells) {
      field.lambda_all(cell.center, times[i], lam);
      for (int k = 0; k < K; ++k)
        out[i][static_cast<std::size_t>(k)] += cell.weight * lam[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

// Instantaneous per-type map at fixed t: nx*ny row-major values at cell
// centers (row = y index). Cells outside a polygon domain hold zero.
inline std::vector<std::vector<double>> spatial_map(const IntensityField& field,
                                                    const SpatialDomain& domain, double t,
                                                    const GridSpec& grid) {
  grid.validate();
  const int K = field.K();
  const std::size_t ncell = static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny);
  std::vector<std::vector<double>> maps(static_cast<std::size_t>(K),
                                        std::vector<double>(ncell, 0.0));
  const double dx = (domain.x1() - domain.x0()) / grid.nx;
  const double dy = (domain.y1() - domain.y0()) / grid.ny;
  std::vector<double> lam(static_cast<std::size_t>(K));
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      Point c{domain.x0() + (i + 0.5) * dx, domain.y0() + (j + 0.5) * dy};
      if (domain.kind() == SpatialDomain::Kind::Polygon && !domain.contains(c)) continue;
      field.lambda_all(c, t, lam);
      const std::size_t idx = static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.nx) +
                              static_cast<std::size_t>(i);
      for (int k = 0; k < K; ++k) maps[static_cast<std::size_t>(k)][idx] = lam[static_cast<std::size_t>(k)];
    }
  }
  return maps;
}

// Cumulative mean intensity map: average of instantaneous maps over a
// right-endpoint uniform time grid on [0, tau].
inline std::vector<std::vector<double>> cumulative_mean_map(const IntensityField& field,
                                                            const SpatialDomain& domain,
                                                            double tau, const GridSpec& grid,
                                                            int n_times = 256) {
  if (n_times < 1) throw std::invalid_argument("cumulative_mean_map: n_times must be >= 1");
  std::vector<std::vector<double>> acc;
  for (int j = 1; j <= n_times; ++j) {
    const double t = tau * static_cast<double>(j) / static_cast<double>(n_times);
    auto maps = spatial_map(field, domain, t, grid);
    if (acc.empty()) {
      acc = std::move(maps);
    } else {
      for (std::size_t k = 0; k < acc.size(); ++k)
        for (std::size_t i = 0; i < acc[k].size(); ++i) acc[k][i] += maps[k][i];
    }
  }
  for (auto& m : acc)
    for (double& x : m) x /= static_cast<double>(n_times);
  return acc;
}

struct RecoveryMetrics {
  double rmse = 0.0;
  std::optional<double> correlation;  // undefined when either curve is constant
};

inline RecoveryMetrics recovery_metrics(std::span<const double> fitted,
                                        std::span<const double> truth) {
  if (fitted.size() != truth.size() || fitted.empty())
    throw std::invalid_argument("recovery_metrics: curves must have equal nonzero length");
  const double n = static_cast<double>(fitted.size());
  double se = 0.0, mf = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    const double d = fitted[i] - truth[i];
    se += d * d;
    mf += fitted[i];
    mt += truth[i];
  }
  mf /= n;
  mt /= n;
  double cov = 0.0, vf = 0.0, vt = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    cov += (fitted[i] - mf) * (truth[i] - mt);
    vf += (fitted[i] - mf) * (fitted[i] - mf);
    vt += (truth[i] - mt) * (truth[i] - mt);
  }
  RecoveryMetrics m;
  m.rmse = std::sqrt(se / n);
  if (vf > 0.0 && vt > 0.0) m.correlation = cov / std::sqrt(vf * vt);
  return m;
}

// CSV export: one row per time, columns t, lambda_1..lambda_K.
inline void write_curve_csv(std::ostream& os, std::span<const double> times,
                            const std::vector<std::vector<double>>& curve) {
  os << "t";
  if (!curve.empty())
    for (std::size_t k = 1; k <= curve[0].size(); ++k) os << ",lambda_" << k;
  os << "\n";
  os.precision(17);
  for (std::size_t i = 0; i < times.size(); ++i) {
    os << times[i];
    for (double v : curve[i]) os << "," << v;
    os << "\n";
  }
}

// CSV export: header rows nx, ny, x-range, y-range, then row-major values.
inline void write_map_csv(std::ostream& os, const SpatialDomain& domain,
                          const GridSpec& grid, std::span<const double> values) {
  os.precision(17);
  os << "nx," << grid.nx << "\n";
  os << "ny," << grid.ny << "\n";
  os << "x," << domain.x0() << "," << domain.x1() << "\n";
  os << "y," << domain.y0() << "," << domain.y1() << "\n";
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (i) os << ",";
      os << values[static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.nx) +
                   static_cast<std::size_t>(i)];
    }
    os << "\n";
  }
}

}  // namespace mstnhp

#endif  // MSTNHP_EVAL_HPP
