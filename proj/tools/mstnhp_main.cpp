// Command-line front end: simulate / train / eval / ingest subcommands
// wiring the library into reproducible experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mstnhp/config.hpp"
#include "mstnhp/core.hpp"
#include "mstnhp/dataio.hpp"
#include "mstnhp/eval.hpp"
#include "mstnhp/likelihood.hpp"
#include "mstnhp/simulate.hpp"

namespace fs = std::filesystem;
using namespace mstnhp;

namespace {

constexpr const char* kVersion = "0.1.0";

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

void write_manifest(const fs::path& path, const std::string& subcommand,
                    const std::vector<std::string>& args, nlohmann::json extra) {
  nlohmann::json j;
  j["tool_version"] = kVersion;
  j["format_version"] = kFormatVersion;
  j["subcommand"] = subcommand;
  j["args"] = args;
  for (auto& [k, v] : extra.items()) j[k] = v;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write manifest " + path.string());
  os << j.dump(2) << "\n";
}

std::vector<std::string> capture_args(int argc, char** argv) {
  return {argv + 1, argv + argc};
}

std::pair<std::string, std::string> split_once(const std::string& s, char sep) {
  const auto p = s.find(sep);
  if (p == std::string::npos) throw ConfigError("expected '" + std::string(1, sep) + "' in " + s);
  return {s.substr(0, p), s.substr(p + 1)};
}

// --- simulate ---------------------------------------------------------------

int run_simulate(const std::string& config_path, int n_seqs, const std::string& split_str,
                 std::uint64_t seed, const std::string& out_dir,
                 const std::vector<std::string>& args) {
  const ExperimentConfig cfg = parse_config_file(config_path);
  SplitSpec split;
  {
    std::istringstream ss(split_str);
    char c1, c2;
    if (!(ss >> split.train >> c1 >> split.valid >> c2 >> split.test) || c1 != ':' ||
        c2 != ':' || split.train < 0 || split.valid < 0 || split.test < 0)
      throw ConfigError("invalid --split, expected a:b:c");
  }
  if (split.train + split.valid + split.test != n_seqs)
    throw ConfigError("--split must sum to --n-seqs");

  RandomStream rng(seed);
  Dataset data = cfg.temporal_only
                     ? make_dataset(cfg.temporal_spec, cfg.T, n_seqs, split, rng)
                     : make_dataset(cfg.st_spec, cfg.domain, cfg.T, n_seqs, split, rng);

  fs::create_directories(out_dir);
  write_dataset((fs::path(out_dir) / "train.jsonl").string(), data.train);
  write_dataset((fs::path(out_dir) / "valid.jsonl").string(), data.valid);
  write_dataset((fs::path(out_dir) / "test.jsonl").string(), data.test);

  auto count_events = [](const std::vector<EventSequence>& v) {
    std::size_t n = 0;
    for (const auto& s : v) n += s.size();
    return n;
  };
  nlohmann::json extra;
  extra["config_hash"] = hex64(fnv1a_hash(cfg.text));
  extra["seed"] = seed;
  extra["sequences"] = {{"train", data.train.size()},
                        {"valid", data.valid.size()},
                        {"test", data.test.size()}};
  extra["events"] = {{"train", count_events(data.train)},
                     {"valid", count_events(data.valid)},
                     {"test", count_events(data.test)}};
  write_manifest(fs::path(out_dir) / "manifest.json", "simulate", args, extra);
  std::cout << "wrote " << n_seqs << " sequences to " << out_dir << "\n";
  return 0;
}

// --- train ------------------------------------------------------------------

std::vector<EventSequence> read_split(const fs::path& dir, const std::string& name,
                                      bool required) {
  const fs::path p = dir / (name + ".jsonl");
  if (!fs::exists(p)) {
    if (required) throw DataError("missing dataset file " + p.string());
    return {};
  }
  try {
    return read_dataset(p.string());
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

int run_train(const std::string& data_dir, const std::string& model_name, int hidden,
              int embed, int epochs, int batch, double lr, double mc_mult,
              std::uint64_t seed, const std::string& out_path, bool collapse, int patience,
              int threads, const std::vector<std::string>& args) {
  std::vector<EventSequence> train_set = read_split(data_dir, "train", true);
  std::vector<EventSequence> valid_set = read_split(data_dir, "valid", false);
  if (train_set.empty()) throw DataError("training set is empty");

  const Variant variant = variant_from_name(model_name);
  const bool data_spatial = train_set.front().spatial();
  if (variant == Variant::MTNHP && data_spatial && !collapse)
    throw DataError("mtnhp on spatial data requires --collapse");
  if (variant == Variant::MSTNHP && !data_spatial)
    throw DataError("mstnhp requires spatial data");
  if (collapse) {
    for (auto& s : train_set) s = collapse_to_temporal(s);
    for (auto& s : valid_set) s = collapse_to_temporal(s);
  }

  int K = 0;
  for (const auto& s : train_set) K = std::max(K, s.max_type());
  for (const auto& s : valid_set) K = std::max(K, s.max_type());
  if (K < 1) throw DataError("no events in dataset");

  Model model(default_config(variant, K, hidden, embed), seed);
  TrainConfig tcfg;
  tcfg.epochs = epochs;
  tcfg.batch_size = batch;
  tcfg.lr = lr;
  tcfg.patience = patience;
  tcfg.n_threads = threads;
  MCConfig mc;
  mc.event_multiplier = mc_mult;
  mc.seed = seed ^ 0x6d632d73ULL;

  TrainResult result = train(model, train_set, valid_set, tcfg, mc, RandomStream(seed));

  const SpatialDomain domain = train_set.front().domain();
  save_checkpoint(out_path, model, domain, result.best_epoch, result.history);
  {
    std::ofstream os(out_path + ".history.csv");
    write_history_csv(os, result.history, /*zero_wall=*/threads == 1);
  }
  nlohmann::json extra;
  extra["seed"] = seed;
  extra["best_epoch"] = result.best_epoch;
  extra["best_valid_ll"] = result.best_valid_ll;
  extra["param_count"] = model.param_count();
  write_manifest(out_path + ".manifest.json", "train", args, extra);
  std::cout << "best epoch " << result.best_epoch << ", validation log-likelihood "
            << result.best_valid_ll << "\n";
  return 0;
}

// --- eval -------------------------------------------------------------------

std::vector<double> parse_csv_doubles(const std::string& s) {
  std::vector<double> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

int run_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& what, const std::string& grid_str,
             const std::string& times_str, const std::string& horizons_str,
             const std::string& truth_path, std::uint64_t seed, const std::string& out_dir,
             const std::vector<std::string>& args) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  fs::path dp(data_path);
  if (fs::is_directory(dp)) dp /= "test.jsonl";
  std::vector<EventSequence> seqs;
  try {
    seqs = read_dataset(dp.string());
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  if (seqs.empty()) throw DataError("no sequences in " + dp.string());

  GridSpec grid;
  if (!grid_str.empty()) {
    const auto v = parse_csv_doubles(grid_str);
    if (v.size() != 2) throw ConfigError("--grid expects nx,ny");
    grid.nx = static_cast<int>(v[0]);
    grid.ny = static_cast<int>(v[1]);
    grid.validate();
  }

  std::optional<ExperimentConfig> truth;
  if (!truth_path.empty()) {
    truth = parse_config_file(truth_path);
    if (truth->K() != ck.model.config().K)
      throw ConfigError("--truth config K does not match checkpoint K");
  }

  const bool collapse_needed = !ck.model.spatial() && seqs.front().spatial();
  std::vector<EventSequence> model_seqs = seqs;
  if (collapse_needed)
    for (auto& s : model_seqs) s = collapse_to_temporal(s);

  fs::create_directories(out_dir);
  nlohmann::json extra;
  extra["seed"] = seed;
  extra["what"] = what;

  if (what == "loglik") {
    MCConfig mc;
    mc.frozen = true;
    mc.seed = seed;
    RandomStream rng(seed);
    const DatasetLoglik ll = dataset_loglik(ck.model, model_seqs, mc, rng);
    std::cout << "total_loglik " << ll.total << "\n";
    std::cout << "per_event_loglik " << ll.per_event << "\n";
    extra["total_loglik"] = ll.total;
    extra["per_event_loglik"] = ll.per_event;
    write_manifest(fs::path(out_dir) / "manifest.json", "eval", args, extra);
    return 0;
  }

  const int K = ck.model.config().K;
  std::ofstream metrics_csv;
  if (what == "metrics") {
    if (!truth) throw ConfigError("--what metrics requires --truth");
    metrics_csv.open(fs::path(out_dir) / "metrics.csv");
    metrics_csv << "sequence,type,rmse,correlation\n";
    metrics_csv.precision(17);
  }

  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const EventSequence& seq = seqs[i];
    const EventSequence& mseq = model_seqs[i];
    NeuralField fitted(ck.model, mseq);
    const std::string tag = "seq" + std::to_string(i);

    if (what == "curves" || what == "metrics") {
      std::vector<double> times =
          times_str.empty() ? uniform_time_grid(0.0, seq.T(), 512) : parse_csv_doubles(times_str);
      for (double t : times)
        if (t < 0.0 || t > seq.T()) throw ConfigError("curve time outside [0,T]");
      auto fit_curve = temporal_curve(fitted, seq.domain(), times, grid);
      std::vector<std::vector<double>> true_curve;
      if (truth) {
        std::unique_ptr<IntensityField> tf;
        if (truth->temporal_only)
          tf = std::make_unique<TemporalParametricField>(truth->temporal_spec, seq);
        else if (auto* sep = std::get_if<SeparableKernelParams>(&truth->st_spec))
          tf = std::make_unique<ParametricField<SeparableKernelParams>>(*sep, seq);
        else
          tf = std::make_unique<ParametricField<Biv4Kernel>>(Biv4Kernel{}, seq);
        true_curve = temporal_curve(*tf, seq.domain(), times, grid);
      }
      if (what == "curves") {
        std::ofstream os(fs::path(out_dir) / ("curve_" + tag + ".csv"));
        write_curve_csv(os, times, fit_curve);
        if (truth) {
          std::ofstream ost(fs::path(out_dir) / ("curve_true_" + tag + ".csv"));
          write_curve_csv(ost, times, true_curve);
        }
      } else {
        for (int k = 1; k <= K; ++k) {
          std::vector<double> f, tr;
          for (std::size_t j = 0; j < times.size(); ++j) {
            f.push_back(fit_curve[j][static_cast<std::size_t>(k - 1)]);
            tr.push_back(true_curve[j][static_cast<std::size_t>(k - 1)]);
          }
          const RecoveryMetrics m = recovery_metrics(f, tr);
          metrics_csv << i << "," << k << "," << m.rmse << ",";
          if (m.correlation)
            metrics_csv << *m.correlation;
          else
            metrics_csv << "undefined";
          metrics_csv << "\n";
          std::cout << "seq " << i << " type " << k << " rmse " << m.rmse << " corr "
                    << (m.correlation ? std::to_string(*m.correlation) : "undefined")
                    << "\n";
        }
      }
    } else if (what == "maps") {
      if (times_str.empty()) throw ConfigError("--what maps requires --times");
      for (double t : parse_csv_doubles(times_str)) {
        if (t < 0.0 || t > seq.T()) throw ConfigError("map time outside [0,T]");
        auto maps = spatial_map(fitted, seq.domain(), t, grid);
        for (int k = 1; k <= K; ++k) {
          std::ostringstream name;
          name << "map_" << tag << "_type" << k << "_t" << t << ".csv";
          std::ofstream os(fs::path(out_dir) / name.str());
          write_map_csv(os, seq.domain(), grid, maps[static_cast<std::size_t>(k - 1)]);
        }
      }
    } else if (what == "cummaps") {
      if (horizons_str.empty()) throw ConfigError("--what cummaps requires --horizons");
      for (double tau : parse_csv_doubles(horizons_str)) {
        if (tau <= 0.0 || tau > seq.T()) throw ConfigError("horizon beyond [0,T]");
        auto maps = cumulative_mean_map(fitted, seq.domain(), tau, grid);
        for (int k = 1; k <= K; ++k) {
          std::ostringstream name;
          name << "cummap_" << tag << "_type" << k << "_tau" << tau << ".csv";
          std::ofstream os(fs::path(out_dir) / name.str());
          write_map_csv(os, seq.domain(), grid, maps[static_cast<std::size_t>(k - 1)]);
        }
      }
    } else {
      throw ConfigError("unknown --what '" + what + "'");
    }
  }
  write_manifest(fs::path(out_dir) / "manifest.json", "eval", args, extra);
  return 0;
}

// --- ingest -----------------------------------------------------------------

int run_ingest(const std::string& raw_path, const std::string& bbox_str, bool auto_bbox,
               const std::string& polygon_path, const std::string& years_str,
               const std::string& out_dir, const std::vector<std::string>& args) {
  std::ifstream is(raw_path);
  if (!is) throw DataError("cannot open " + raw_path);
  std::vector<RawEvent> raw;
  try {
    raw = read_raw_csv(is, raw_path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  if (raw.empty()) throw DataError("no events in " + raw_path);

  BoundingBox box{};
  if (auto_bbox) {
    box = {raw[0].location.x, raw[0].location.x, raw[0].location.y, raw[0].location.y};
    for (const RawEvent& e : raw) {
      box.x0 = std::min(box.x0, e.location.x);
      box.x1 = std::max(box.x1, e.location.x);
      box.y0 = std::min(box.y0, e.location.y);
      box.y1 = std::max(box.y1, e.location.y);
    }
  } else {
    const auto v = parse_csv_doubles(bbox_str);
    if (v.size() != 4) throw ConfigError("--bbox expects x0,x1,y0,y1");
    box = {v[0], v[1], v[2], v[3]};
  }
  const AffineTransform tf = normalize_transform(box);
  for (RawEvent& e : raw) e.location = tf.forward(e.location);

  SpatialDomain domain = SpatialDomain::rectangle(-1.0, 1.0, -1.0, 1.0);
  int rejected = 0;
  if (!polygon_path.empty()) {
    std::ifstream ps(polygon_path);
    if (!ps) throw DataError("cannot open polygon file " + polygon_path);
    std::vector<Point> verts;
    double x, y;
    while (ps >> x >> y) verts.push_back({x, y});
    domain = SpatialDomain::polygon(std::move(verts));
    PolygonFilterResult fr = filter_polygon(raw, domain);
    rejected = fr.rejected;
    raw = std::move(fr.kept);
    std::cout << "polygon filter rejected " << rejected << " events\n";
  }

  const auto [y0s, y1s] = split_once(years_str, '.');
  const std::string y1t = y1s.rfind('.', 0) == 0 ? y1s.substr(1) : y1s;
  const int year_from = std::stoi(y0s);
  const int year_to = std::stoi(y1t);
  std::vector<EventSequence> seqs = yearly_split(raw, year_from, year_to, domain);

  fs::create_directories(out_dir);
  write_dataset((fs::path(out_dir) / "sequences.jsonl").string(), seqs);
  nlohmann::json extra;
  extra["transform"] = {{"sx", tf.sx}, {"ox", tf.ox}, {"sy", tf.sy}, {"oy", tf.oy}};
  extra["rejected"] = rejected;
  extra["years"] = {year_from, year_to};
  auto counts = nlohmann::json::array();
  for (const auto& s : seqs) counts.push_back(s.size());
  extra["events_per_year"] = counts;
  write_manifest(fs::path(out_dir) / "manifest.json", "ingest", args, extra);
  std::cout << "wrote " << seqs.size() << " yearly sequences to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate spatio-temporal neural Hawkes process toolkit"};
  app.require_subcommand(1);
  const std::vector<std::string> args = capture_args(argc, argv);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate Hawkes datasets by Ogata thinning");
  std::string sim_config, sim_split = "8:1:1", sim_out = "data";
  int sim_n = 10;
  std::uint64_t sim_seed = 1;
  sim->add_option("--config", sim_config, "experiment config file")->required();
  sim->add_option("--n-seqs", sim_n, "number of sequences");
  sim->add_option("--split", sim_split, "train:valid:test counts");
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--out", sim_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a neural Hawkes model");
  std::string tr_data, tr_model = "mstnhp", tr_out = "model.ckpt";
  int tr_hidden = 16, tr_embed = 8, tr_epochs = 100, tr_batch = 10, tr_patience = 0,
      tr_threads = 1;
  double tr_lr = 1e-3, tr_mc = 10.0;
  std::uint64_t tr_seed = 1;
  bool tr_collapse = false;
  tr->add_option("--data", tr_data, "dataset directory (train.jsonl/valid.jsonl)")->required();
  tr->add_option("--model", tr_model, "mstnhp|mtnhp");
  tr->add_option("--hidden", tr_hidden, "hidden size D");
  tr->add_option("--embed", tr_embed, "embedding size E");
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--batch", tr_batch, "batch size in sequences");
  tr->add_option("--lr", tr_lr, "learning rate");
  tr->add_option("--mc-mult", tr_mc, "MC points per event for the integral");
  tr->add_option("--seed", tr_seed, "random seed");
  tr->add_option("--patience", tr_patience, "early-stop patience (0 = off)");
  tr->add_option("--threads", tr_threads, "worker threads (1 = reproducibility mode)");
  tr->add_flag("--collapse", tr_collapse, "collapse spatial data to temporal sequences");
  tr->add_option("--out", tr_out, "checkpoint output path")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a fitted model");
  std::string ev_ckpt, ev_data, ev_what = "curves", ev_grid, ev_times, ev_horizons,
              ev_truth, ev_out = "eval";
  std::uint64_t ev_seed = 1;
  ev->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--data", ev_data, "dataset file or directory")->required();
  ev->add_option("--what", ev_what, "curves|maps|cummaps|loglik|metrics");
  ev->add_option("--grid", ev_grid, "spatial grid nx,ny (default 64,64)");
  ev->add_option("--times", ev_times, "comma-separated evaluation times");
  ev->add_option("--horizons", ev_horizons, "comma-separated cumulative horizons");
  ev->add_option("--truth", ev_truth, "parametric config for recovery metrics");
  ev->add_option("--seed", ev_seed, "MC seed for loglik");
  ev->add_option("--out", ev_out, "output directory");

  // ingest
  auto* in = app.add_subcommand("ingest", "Normalize raw event CSV into yearly sequences");
  std::string in_raw, in_bbox, in_polygon, in_years, in_out = "ingested";
  bool in_auto = false;
  in->add_option("--raw", in_raw, "CSV with date,lat,lon,group")->required();
  in->add_option("--bbox", in_bbox, "bounding box x0,x1,y0,y1");
  in->add_flag("--auto-bbox", in_auto, "derive bounding box from the data");
  in->add_option("--polygon", in_polygon, "polygon file (normalized coords, 'x y' lines)");
  in->add_option("--years", in_years, "year range a..b")->required();
  in->add_option("--out", in_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return run_simulate(sim_config, sim_n, sim_split, sim_seed, sim_out, args);
    if (tr->parsed())
      return run_train(tr_data, tr_model, tr_hidden, tr_embed, tr_epochs, tr_batch, tr_lr,
                       tr_mc, tr_seed, tr_out, tr_collapse, tr_patience, tr_threads, args);
    if (ev->parsed())
      return run_eval(ev_ckpt, ev_data, ev_what, ev_grid, ev_times, ev_horizons, ev_truth,
                      ev_seed, ev_out, args);
    if (in->parsed())
      return run_ingest(in_raw, in_bbox, in_auto, in_polygon, in_years, in_out, args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
