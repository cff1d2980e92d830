#ifndef MSTNHP_CTLSTM_HPP
#define MSTNHP_CTLSTM_HPP

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mstnhp/autodiff.hpp"
#include "mstnhp/core.hpp"

namespace mstnhp {

enum class Variant { MSTNHP, MTNHP };

inline std::string variant_name(Variant v) {
  return v == Variant::MSTNHP ? "mstnhp" : "mtnhp";
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "mstnhp") return Variant::MSTNHP;
  if (s == "mtnhp") return Variant::MTNHP;
  throw std::invalid_argument("unknown model variant: " + s);
}

struct ModelConfig {
  Variant variant = Variant::MSTNHP;
  int K = 2;
  int D = 16;  // hidden size
  int E = 8;   // type embedding size
  std::vector<double> tau;  // softplus scales, one per type (default all 1)
  // Test hook: force the spatial decay rate to zero so an MSTNHP model with
  // zeroed coordinate weights reproduces the MTNHP trajectory exactly.
  bool freeze_delta_s = false;

  void validate() const {
    if (K < 1 || D < 1 || E < 1) throw std::invalid_argument("ModelConfig: K,D,E must be >= 1");
    if (tau.size() != static_cast<std::size_t>(K))
      throw std::invalid_argument("ModelConfig: tau must have K entries");
    for (double t : tau)
      if (!(t > 0.0)) throw std::invalid_argument("ModelConfig: tau must be > 0");
  }
};

inline ModelConfig default_config(Variant v, int K, int D, int E) {
  ModelConfig c;
  c.variant = v;
  c.K = K;
  c.D = D;
  c.E = E;
  c.tau.assign(static_cast<std::size_t>(K), 1.0);
  return c;
}

// Gate order: input, forget, candidate, output, input-bar, forget-bar,
// time-decay, then space-decay for the spatio-temporal variant.
inline const std::vector<std::string>& gate_names(Variant v) {
  static const std::vector<std::string> temporal = {"i", "f", "z", "o", "ibar", "fbar", "dt"};
  static const std::vector<std::string> spatial = {"i", "f", "z", "o", "ibar", "fbar", "dt", "ds"};
  return v == Variant::MSTNHP ? spatial : temporal;
}

constexpr int kGateI = 0, kGateF = 1, kGateZ = 2, kGateO = 3, kGateIbar = 4,
              kGateFbar = 5, kGateDt = 6, kGateDs = 7;

// Continuous-time LSTM model: trainable weights in a ParamStore, with a
// tape-building path for training and a plain path for evaluation.
//
// Per gate g the parameters are W_g (DxE, applied to the type embedding),
// C_g (Dx2, applied to raw coordinates; spatio-temporal variant only),
// U_g (DxD, applied to the pre-event hidden state) and bias b_g (D).
// Embeddings are one entry per type id 0..K (0 = beginning-of-sequence);
// intensity weights are one D-vector per type 1..K.
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    RandomStream rng(seed);
    init_params(rng);
  }

  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  const ModelConfig& config() const { return cfg_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  std::size_t param_count() const { return store_.total_size(); }

  std::size_t emb_index(int k) const { return store_.find("emb_" + std::to_string(k)); }
  std::size_t w_index(int k) const { return store_.find("w_" + std::to_string(k)); }
  std::size_t gate_W(int g) const { return store_.find("W_" + gname(g)); }
  std::size_t gate_C(int g) const { return store_.find("C_" + gname(g)); }
  std::size_t gate_U(int g) const { return store_.find("U_" + gname(g)); }
  std::size_t gate_b(int g) const { return store_.find("b_" + gname(g)); }

  int n_gates() const { return static_cast<int>(gate_names(cfg_.variant).size()); }
  bool spatial() const { return cfg_.variant == Variant::MSTNHP; }

  // Uniform(-r, r) with r = D^{-1/2} for matrices and embeddings, zero biases.
  void init_params(RandomStream& rng) {
    const auto D = static_cast<std::size_t>(cfg_.D);
    const auto E = static_cast<std::size_t>(cfg_.E);
    const double r = 1.0 / std::sqrt(static_cast<double>(cfg_.D));
    for (int k = 0; k <= cfg_.K; ++k)
      store_.add_uniform("emb_" + std::to_string(k), {E}, r, rng);
    for (int g = 0; g < n_gates(); ++g) {
      store_.add_uniform("W_" + gname(g), {D, E}, r, rng);
      if (spatial()) store_.add_uniform("C_" + gname(g), {D, 2}, r, rng);
      store_.add_uniform("U_" + gname(g), {D, D}, r, rng);
      store_.add("b_" + gname(g), {D}, std::vector<double>(D, 0.0));
    }
    for (int k = 1; k <= cfg_.K; ++k)
      store_.add_uniform("w_" + std::to_string(k), {D}, r, rng);
  }

 private:
  std::string gname(int g) const { return gate_names(cfg_.variant)[static_cast<std::size_t>(g)]; }

  ModelConfig cfg_;
  ParamStore store_;
};

// ---------------------------------------------------------------------------
// Tape path
// ---------------------------------------------------------------------------

// Parameter nodes created once per tape.
struct BoundParams {
  std::vector<int> emb;               // K+1 entries
  std::vector<std::array<int, 4>> g;  // per gate: W, C (-1 if absent), U, b
  std::vector<int> w;                 // K entries (index 0 unused)
};

inline BoundParams bind_params(const Model& model, Tape& tape) {
  BoundParams bp;
  for (int k = 0; k <= model.config().K; ++k)
    bp.emb.push_back(tape.param(model.emb_index(k)));
  for (int g = 0; g < model.n_gates(); ++g) {
    bp.g.push_back({tape.param(model.gate_W(g)),
                    model.spatial() ? tape.param(model.gate_C(g)) : -1,
                    tape.param(model.gate_U(g)), tape.param(model.gate_b(g))});
  }
  bp.w.push_back(-1);
  for (int k = 1; k <= model.config().K; ++k) bp.w.push_back(tape.param(model.w_index(k)));
  return bp;
}

// Interval state active on (anchor_t, next event]: node ids for the cell just
// after the anchor event, its steady-state target, the decay rates, and the
// output gate.
struct TapeState {
  int c_start = -1;
  int c_bar = -1;
  int delta_t = -1;
  int delta_s = -1;  // -1 for the temporal variant
  int o = -1;
  double anchor_t = 0.0;
  Point anchor_s{};
};

namespace detail {

inline int gate_preact(const Model& model, Tape& tape, const BoundParams& bp, int g,
                       int x_emb, const Point& s, int h_prev) {
  const auto D = static_cast<std::size_t>(model.config().D);
  const auto E = static_cast<std::size_t>(model.config().E);
  int pre = tape.matvec(bp.g[static_cast<std::size_t>(g)][0], x_emb, D, E);
  if (model.spatial()) {
    const double coords[2] = {s.x, s.y};
    int xc = tape.constant(std::span<const double>(coords, 2));
    pre = tape.add(pre, tape.matvec(bp.g[static_cast<std::size_t>(g)][1], xc, D, 2));
  }
  pre = tape.add(pre, tape.matvec(bp.g[static_cast<std::size_t>(g)][2], h_prev, D, D));
  return tape.add(pre, bp.g[static_cast<std::size_t>(g)][3]);
}

}  // namespace detail

// Discrete LSTM update given the left-limit cell/hidden at the event.
inline TapeState update_state(const Model& model, Tape& tape, const BoundParams& bp,
                              int c_minus, int h_minus, int c_bar_prev, int type_id,
                              double t, const Point& s) {
  auto pre = [&](int g) { return detail::gate_preact(model, tape, bp, g, bp.emb[static_cast<std::size_t>(type_id)], s, h_minus); };
  const int gi = tape.sigmoid(pre(kGateI));
  const int gf = tape.sigmoid(pre(kGateF));
  const int gz = tape.scaled_tanh(pre(kGateZ));
  const int go = tape.sigmoid(pre(kGateO));
  const int gibar = tape.sigmoid(pre(kGateIbar));
  const int gfbar = tape.sigmoid(pre(kGateFbar));
  TapeState out;
  out.c_start = tape.add(tape.mul(gf, c_minus), tape.mul(gi, gz));
  out.c_bar = tape.add(tape.mul(gfbar, c_bar_prev), tape.mul(gibar, gz));
  out.delta_t = tape.softplus(pre(kGateDt));
  if (model.spatial()) {
    if (model.config().freeze_delta_s) {
      std::vector<double> zeros(static_cast<std::size_t>(model.config().D), 0.0);
      out.delta_s = tape.constant(std::span<const double>(zeros));
    } else {
      out.delta_s = tape.softplus(pre(kGateDs));
    }
  }
  out.o = go;
  out.anchor_t = t;
  out.anchor_s = s;
  return out;
}

// Pre-first-event state: the beginning-of-sequence token (type 0) pushed
// through the update from an all-zeros state at t = 0.
inline TapeState init_state(const Model& model, Tape& tape, const BoundParams& bp,
                            const Point& origin) {
  std::vector<double> zeros(static_cast<std::size_t>(model.config().D), 0.0);
  const int z = tape.constant(std::span<const double>(zeros));
  return update_state(model, tape, bp, z, z, z, 0, 0.0, origin);
}

// c(s, t) = c_bar + (c_start - c_bar) exp(-dt_rate*(t-t0) - ds_rate*|s-s0|).
inline int decay_cell(const Model& model, Tape& tape, const TapeState& state,
                      const Point& s, double t) {
  if (t < state.anchor_t) throw std::invalid_argument("decay_cell: t before anchor");
  int expo = tape.scale(state.delta_t, t - state.anchor_t);
  if (model.spatial()) expo = tape.add(expo, tape.scale(state.delta_s, dist(s, state.anchor_s)));
  const int damp = tape.exp(tape.neg(expo));
  return tape.add(state.c_bar, tape.mul(tape.sub(state.c_start, state.c_bar), damp));
}

inline int hidden(const Model& model, Tape& tape, const TapeState& state, const Point& s,
                  double t) {
  return tape.mul(state.o, tape.scaled_tanh(decay_cell(model, tape, state, s, t)));
}

// lambda_k(s, t) = tau_k * softplus(w_k . h / tau_k); strictly positive.
inline int intensity_from_hidden(const Model& model, Tape& tape, const BoundParams& bp,
                                 int h, int k) {
  const double tau = model.config().tau[static_cast<std::size_t>(k - 1)];
  int u = tape.dot(bp.w[static_cast<std::size_t>(k)], h);
  if (tau != 1.0) u = tape.scale(u, 1.0 / tau);
  int sp = tape.softplus(u);
  return tau != 1.0 ? tape.scale(sp, tau) : sp;
}

inline int intensity(const Model& model, Tape& tape, const BoundParams& bp,
                     const TapeState& state, int k, const Point& s, double t) {
  return intensity_from_hidden(model, tape, bp, hidden(model, tape, state, s, t), k);
}

inline TapeState update_at_event(const Model& model, Tape& tape, const BoundParams& bp,
                                 const TapeState& state, const STEvent& event) {
  if (event.t < state.anchor_t) throw std::invalid_argument("update_at_event: time regression");
  const int c_minus = decay_cell(model, tape, state, event.s, event.t);
  const int h_minus = tape.mul(state.o, tape.scaled_tanh(c_minus));
  return update_state(model, tape, bp, c_minus, h_minus, state.c_bar, event.k, event.t,
                      event.s);
}

// ---------------------------------------------------------------------------
// Plain path (no tape) for evaluation and serving; mirrors the tape math.
// ---------------------------------------------------------------------------

struct PlainState {
  std::vector<double> c_start, c_bar, delta_t, delta_s, o;
  double anchor_t = 0.0;
  Point anchor_s{};
};

namespace detail {

inline void plain_preact(const Model& model, int g, std::span<const double> emb,
                         const Point& s, std::span<const double> h_prev,
                         std::vector<double>& out) {
  const auto& st = model.store();
  const auto D = static_cast<std::size_t>(model.config().D);
  const auto E = static_cast<std::size_t>(model.config().E);
  const auto& W = st.entry(model.gate_W(g)).value;
  const auto& U = st.entry(model.gate_U(g)).value;
  const auto& b = st.entry(model.gate_b(g)).value;
  out.assign(D, 0.0);
  for (std::size_t r = 0; r < D; ++r) {
    double acc = b[r];
    for (std::size_t c = 0; c < E; ++c) acc += W[r * E + c] * emb[c];
    for (std::size_t c = 0; c < D; ++c) acc += U[r * D + c] * h_prev[c];
    out[r] = acc;
  }
  if (model.spatial()) {
    const auto& C = st.entry(model.gate_C(g)).value;
    for (std::size_t r = 0; r < D; ++r) out[r] += C[r * 2] * s.x + C[r * 2 + 1] * s.y;
  }
}

}  // namespace detail

inline PlainState plain_update_state(const Model& model, std::span<const double> c_minus,
                                     std::span<const double> h_minus,
                                     std::span<const double> c_bar_prev, int type_id,
                                     double t, const Point& s) {
  const auto D = static_cast<std::size_t>(model.config().D);
  const auto& emb = model.store().entry(model.emb_index(type_id)).value;
  std::vector<double> pre;
  PlainState out;
  out.c_start.resize(D);
  out.c_bar.resize(D);
  out.delta_t.resize(D);
  out.o.resize(D);
  std::vector<double> gi(D), gf(D), gz(D), gibar(D), gfbar(D);
  detail::plain_preact(model, kGateI, emb, s, h_minus, pre);
  for (std::size_t d = 0; d < D; ++d) gi[d] = sigmoid(pre[d]);
  detail::plain_preact(model, kGateF, emb, s, h_minus, pre);
  for (std::size_t d = 0; d < D; ++d) gf[d] = sigmoid(pre[d]);
  detail::plain_preact(model, kGateZ, emb, s, h_minus, pre);
  for (std::size_t d = 0; d < D; ++d) gz[d] = std::tanh(pre[d]);
  detail::plain_preact(model, kGateO, emb, s, h_minus, pre);
  for (std::size_t d = 0; d < D; ++d) out.o[d] = sigmoid(pre[d]);
  detail::plain_preact(model, kGateIbar, emb, s, h_minus, pre);
  for (std::size_t d = 0; d < D; ++d) gibar[d] = sigmoid(pre[d]);
  detail::plain_preact(model, kGateFbar, emb, s, h_minus, pre);
  for (std::size_t d = 0; d < D; ++d) gfbar[d] = sigmoid(pre[d]);
  for (std::size_t d = 0; d < D; ++d) {
    out.c_start[d] = gf[d] * c_minus[d] + gi[d] * gz[d];
    out.c_bar[d] = gfbar[d] * c_bar_prev[d] + gibar[d] * gz[d];
  }
  detail::plain_preact(model, kGateDt, emb, s, h_minus, pre);
  for (std::size_t d = 0; d < D; ++d) out.delta_t[d] = softplus(pre[d]);
  if (model.spatial()) {
    out.delta_s.resize(D);
    if (model.config().freeze_delta_s) {
      std::fill(out.delta_s.begin(), out.delta_s.end(), 0.0);
    } else {
      detail::plain_preact(model, kGateDs, emb, s, h_minus, pre);
      for (std::size_t d = 0; d < D; ++d) out.delta_s[d] = softplus(pre[d]);
    }
  }
  out.anchor_t = t;
  out.anchor_s = s;
  return out;
}

inline PlainState plain_init_state(const Model& model, const Point& origin) {
  const std::vector<double> zeros(static_cast<std::size_t>(model.config().D), 0.0);
  return plain_update_state(model, zeros, zeros, zeros, 0, 0.0, origin);
}

inline std::vector<double> plain_decay_cell(const Model& model, const PlainState& state,
                                            const Point& s, double t) {
  if (t < state.anchor_t) throw std::invalid_argument("plain_decay_cell: t before anchor");
  const auto D = state.c_start.size();
  const double ddist = model.spatial() ? dist(s, state.anchor_s) : 0.0;
  std::vector<double> c(D);
  for (std::size_t d = 0; d < D; ++d) {
    double expo = state.delta_t[d] * (t - state.anchor_t);
    if (model.spatial()) expo += state.delta_s[d] * ddist;
    // zero lag returns the start cell bit-exactly
    c[d] = expo == 0.0 ? state.c_start[d]
                       : state.c_bar[d] +
                             (state.c_start[d] - state.c_bar[d]) * std::exp(-expo);
  }
  return c;
}

inline std::vector<double> plain_hidden(const Model& model, const PlainState& state,
                                        const Point& s, double t) {
  std::vector<double> h = plain_decay_cell(model, state, s, t);
  for (std::size_t d = 0; d < h.size(); ++d) h[d] = state.o[d] * std::tanh(h[d]);
  return h;
}

inline double plain_intensity_from_hidden(const Model& model, std::span<const double> h,
                                          int k) {
  const auto& w = model.store().entry(model.w_index(k)).value;
  double u = 0.0;
  for (std::size_t d = 0; d < h.size(); ++d) u += w[d] * h[d];
  const double tau = model.config().tau[static_cast<std::size_t>(k - 1)];
  return tau * softplus(u / tau);
}

inline double plain_intensity(const Model& model, const PlainState& state, int k,
                              const Point& s, double t) {
  return plain_intensity_from_hidden(model, plain_hidden(model, state, s, t), k);
}

inline PlainState plain_update_at_event(const Model& model, const PlainState& state,
                                        const STEvent& event) {
  if (event.t < state.anchor_t)
    throw std::invalid_argument("plain_update_at_event: time regression");
  std::vector<double> c_minus = plain_decay_cell(model, state, event.s, event.t);
  std::vector<double> h_minus(c_minus.size());
  for (std::size_t d = 0; d < c_minus.size(); ++d)
    h_minus[d] = state.o[d] * std::tanh(c_minus[d]);
  return plain_update_state(model, c_minus, h_minus, state.c_bar, event.k, event.t,
                            event.s);
}

// Interval states for a whole sequence: states[i] is active on
// (t_i, t_{i+1}] with states[0] the pre-first-event state.
inline std::vector<PlainState> plain_sequence_states(const Model& model,
                                                     const EventSequence& seq) {
  std::vector<PlainState> states;
  states.reserve(seq.size() + 1);
  states.push_back(plain_init_state(model, seq.domain().centroid()));
  for (const STEvent& e : seq.events())
    states.push_back(plain_update_at_event(model, states.back(), e));
  return states;
}

}  // namespace mstnhp

#endif  // MSTNHP_CTLSTM_HPP
