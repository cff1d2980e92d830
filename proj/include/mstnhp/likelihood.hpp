#ifndef MSTNHP_LIKELIHOOD_HPP
#define MSTNHP_LIKELIHOOD_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mstnhp/autodiff.hpp"
#include "mstnhp/core.hpp"
#include "mstnhp/ctlstm.hpp"

namespace mstnhp {

// Monte Carlo policy for the non-event integral. The sample count scales
// with the sequence length; draws are fresh every epoch unless frozen.
struct MCConfig {
  double event_multiplier = 10.0;
  int min_points = 8;
  bool frozen = false;          // frozen => draws depend only on (seed, sequence)
  std::uint64_t seed = 0x6d63ULL;

  int points_for(std::size_t n_events) const {
    const double n = event_multiplier * static_cast<double>(n_events);
    return std::max(min_points, static_cast<int>(std::llround(n)));
  }
};

struct MCPoint {
  double t;
  Point s;
};

inline std::vector<MCPoint> draw_mc_points(const EventSequence& seq, int n,
                                           RandomStream& rng) {
  std::vector<MCPoint> pts(static_cast<std::size_t>(n));
  for (MCPoint& p : pts) {
    p.t = rng.uniform(0.0, seq.T());
    p.s = seq.spatial() ? seq.domain().sample_uniform(rng) : Point{};
  }
  return pts;
}

// Builds the sequence log-likelihood on the tape and returns the scalar node:
// sum of event log-intensities (left-limit state) minus the Monte Carlo
// estimate of the integrated total intensity over [0,T] (x domain for the
// spatio-temporal variant).
inline int sequence_loglik_node(const Model& model, Tape& tape, const EventSequence& seq,
                                const std::vector<MCPoint>& mc_points) {
  if (model.spatial() && !seq.spatial())
    throw std::invalid_argument("sequence_loglik: spatio-temporal model needs locations");
  const int K = model.config().K;
  if (seq.max_type() > K)
    throw std::invalid_argument("sequence_loglik: sequence has type id beyond model K");

  BoundParams bp = bind_params(model, tape);
  std::vector<TapeState> states;
  states.reserve(seq.size() + 1);
  states.push_back(init_state(model, tape, bp, seq.domain().centroid()));

  int event_term = -1;
  for (const STEvent& e : seq.events()) {
    const TapeState& st = states.back();
    const int c_minus = decay_cell(model, tape, st, e.s, e.t);
    const int h_minus = tape.mul(st.o, tape.scaled_tanh(c_minus));
    const int lam = intensity_from_hidden(model, tape, bp, h_minus, e.k);
    const int loglam = tape.log(lam);
    event_term = event_term < 0 ? loglam : tape.add(event_term, loglam);
    states.push_back(update_state(model, tape, bp, c_minus, h_minus, st.c_bar, e.k, e.t, e.s));
  }

  std::vector<double> times;
  times.reserve(seq.size());
  for (const STEvent& e : seq.events()) times.push_back(e.t);

  int integral_acc = -1;
  for (const MCPoint& p : mc_points) {
    // events with t_i < p.t have been absorbed into the state
    const std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(times.begin(), times.end(), p.t) - times.begin());
    const int h = hidden(model, tape, states[idx], p.s, p.t);
    for (int k = 1; k <= K; ++k) {
      const int lam = intensity_from_hidden(model, tape, bp, h, k);
      integral_acc = integral_acc < 0 ? lam : tape.add(integral_acc, lam);
    }
  }
  const double volume = seq.T() * (model.spatial() ? seq.domain().area() : 1.0);
  const int integral =
      tape.scale(integral_acc, volume / static_cast<double>(mc_points.size()));

  if (event_term < 0) return tape.neg(integral);
  return tape.sub(event_term, integral);
}

inline double sequence_loglik(const Model& model, const EventSequence& seq,
                              const MCConfig& mc, RandomStream& rng) {
  Tape tape(const_cast<ParamStore*>(&model.store()));
  const auto pts = draw_mc_points(seq, mc.points_for(seq.size()), rng);
  return tape.scalar_value(sequence_loglik_node(model, tape, seq, pts));
}

struct DatasetLoglik {
  double total = 0.0;
  double per_event = 0.0;
  std::size_t n_events = 0;
};

inline DatasetLoglik dataset_loglik(const Model& model,
                                    const std::vector<EventSequence>& seqs,
                                    const MCConfig& mc, RandomStream& rng) {
  if (seqs.empty()) throw std::invalid_argument("dataset_loglik: empty dataset");
  DatasetLoglik out;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    RandomStream seq_rng = mc.frozen ? RandomStream(mc.seed).child(i) : rng.child(i);
    out.total += sequence_loglik(model, seqs[i], mc, seq_rng);
    out.n_events += seqs[i].size();
  }
  out.per_event = out.n_events > 0 ? out.total / static_cast<double>(out.n_events) : 0.0;
  return out;
}

struct TrainConfig {
  int epochs = 100;
  int batch_size = 10;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int patience = 0;  // early stop after this many epochs without a new best; 0 = off
  int valid_every = 1;
  int n_threads = 1;

  void validate() const {
    if (epochs < 0 || batch_size < 1 || !(lr > 0.0) || valid_every < 1 || n_threads < 1)
      throw std::invalid_argument("TrainConfig: invalid field");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_ll = 0.0;
  double valid_ll = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<double> best_values;  // flat parameter vector of the best epoch
  int best_epoch = 0;
  double best_valid_ll = -std::numeric_limits<double>::infinity();
  std::vector<EpochRecord> history;
};

namespace detail {

// Forward+backward for one sequence; adds d(ll)/dtheta into the store grads
// of `model` and returns the log-likelihood value.
inline double accumulate_sequence_grad(Model& model, Tape& tape, const EventSequence& seq,
                                       const std::vector<MCPoint>& pts) {
  tape.clear();
  const int ll = sequence_loglik_node(model, tape, seq, pts);
  tape.backward(ll);
  return tape.scalar_value(ll);
}

}  // namespace detail

// Mini-batch gradient ascent on the Monte Carlo log-likelihood with Adam,
// epoch-wise validation and best-checkpoint selection. Gradients are averaged
// per sequence within a batch. A nonfinite epoch halves the learning rate
// once and replays the epoch from its starting parameters; a second
// occurrence aborts.
inline TrainResult train(Model& model, const std::vector<EventSequence>& train_set,
                         const std::vector<EventSequence>& valid_set,
                         const TrainConfig& tcfg, const MCConfig& mc,
                         const RandomStream& rng) {
  tcfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  TrainResult result;
  result.best_values = model.store().flat_values();
  if (tcfg.epochs == 0) return result;

  double lr = tcfg.lr;
  bool lr_halved = false;
  const MCConfig valid_mc{mc.event_multiplier, mc.min_points, true, mc.seed ^ 0x76616cULL};
  RandomStream unused_valid_rng(0);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  const auto t_start = std::chrono::steady_clock::now();
  Tape tape(&model.store());

  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    RandomStream epoch_rng = rng.child(static_cast<std::uint64_t>(epoch));
    // deterministic Fisher-Yates on the sequence order
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = epoch_rng.next_u64() % i;
      std::swap(order[i - 1], order[j]);
    }

    const std::vector<double> epoch_start_values = model.store().flat_values();
    const long epoch_start_step = model.store().step_count();
    double train_ll = 0.0;
    bool finite = true;

    for (std::size_t b0 = 0; b0 < order.size() && finite;
         b0 += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t b1 =
          std::min(order.size(), b0 + static_cast<std::size_t>(tcfg.batch_size));
      model.store().zero_grad();
      if (tcfg.n_threads > 1 && b1 - b0 > 1) {
        // per-worker model clones; reduction in sequence order keeps results
        // identical to the single-threaded path
        const std::size_t nw =
            std::min<std::size_t>(static_cast<std::size_t>(tcfg.n_threads), b1 - b0);
        std::vector<Model> clones(nw, model);
        std::vector<double> lls(b1 - b0, 0.0);
        std::vector<std::thread> workers;
        for (std::size_t w = 0; w < nw; ++w) {
          workers.emplace_back([&, w]() {
            Tape wtape(&clones[w].store());
            for (std::size_t i = b0 + w; i < b1; i += nw) {
              const EventSequence& seq = train_set[order[i]];
              RandomStream seq_rng =
                  mc.frozen ? RandomStream(mc.seed).child(order[i])
                            : epoch_rng.child(order[i]);
              const auto pts = draw_mc_points(seq, mc.points_for(seq.size()), seq_rng);
              lls[i - b0] =
                  detail::accumulate_sequence_grad(clones[w], wtape, seq, pts);
            }
          });
        }
        for (auto& t : workers) t.join();
        for (std::size_t w = 0; w < nw; ++w) {
          for (std::size_t e = 0; e < model.store().count(); ++e) {
            auto& dst = model.store().entry(e).grad;
            const auto& src = clones[w].store().entry(e).grad;
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
          }
        }
        for (double v : lls) train_ll += v;
        if (!std::isfinite(train_ll)) finite = false;
      } else {
        for (std::size_t i = b0; i < b1; ++i) {
          const EventSequence& seq = train_set[order[i]];
          RandomStream seq_rng = mc.frozen ? RandomStream(mc.seed).child(order[i])
                                           : epoch_rng.child(order[i]);
          const auto pts = draw_mc_points(seq, mc.points_for(seq.size()), seq_rng);
          const double ll = detail::accumulate_sequence_grad(model, tape, seq, pts);
          train_ll += ll;
          if (!std::isfinite(ll)) finite = false;
        }
      }
      if (!finite) break;
      // ascend: Adam minimizes, so flip sign; average over the batch
      model.store().scale_grad(-1.0 / static_cast<double>(b1 - b0));
      model.store().adam_step(lr, tcfg.adam_beta1, tcfg.adam_beta2, tcfg.adam_eps);
    }

    double valid_ll = 0.0;
    if (finite && !valid_set.empty() && epoch % tcfg.valid_every == 0) {
      valid_ll = dataset_loglik(model, valid_set, valid_mc, unused_valid_rng).total;
      if (!std::isfinite(valid_ll)) finite = false;
    }

    if (!finite) {
      if (lr_halved)
        throw std::runtime_error("train: nonfinite loss recurred at epoch " +
                                 std::to_string(epoch));
      lr_halved = true;
      lr *= 0.5;
      model.store().set_flat_values(epoch_start_values);
      model.store().set_step_count(epoch_start_step);
      --epoch;  // replay
      continue;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_ll = train_ll;
    rec.valid_ll = valid_ll;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.history.push_back(rec);

    const bool improved = valid_set.empty() || valid_ll > result.best_valid_ll;
    if (improved) {
      result.best_valid_ll = valid_ll;
      result.best_epoch = epoch;
      result.best_values = model.store().flat_values();
    } else if (tcfg.patience > 0 && epoch - result.best_epoch >= tcfg.patience) {
      break;
    }
  }

  model.store().set_flat_values(result.best_values);
  return result;
}

}  // namespace mstnhp

#endif  // MSTNHP_LIKELIHOOD_HPP
