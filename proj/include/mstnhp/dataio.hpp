#ifndef MSTNHP_DATAIO_HPP
#define MSTNHP_DATAIO_HPP

#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mstnhp/core.hpp"
#include "mstnhp/ctlstm.hpp"
#include "mstnhp/likelihood.hpp"

namespace mstnhp {

constexpr int kFormatVersion = 1;

inline nlohmann::json domain_to_json(const SpatialDomain& d) {
  nlohmann::json j;
  if (d.kind() == SpatialDomain::Kind::Rectangle) {
    j["kind"] = "rect";
    j["x"] = {d.x0(), d.x1()};
    j["y"] = {d.y0(), d.y1()};
  } else {
    j["kind"] = "polygon";
    auto verts = nlohmann::json::array();
    for (const Point& p : d.vertices()) verts.push_back({p.x, p.y});
    j["vertices"] = verts;
  }
  return j;
}

inline SpatialDomain domain_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "rect") {
    const auto& x = j.at("x");
    const auto& y = j.at("y");
    return SpatialDomain::rectangle(x.at(0), x.at(1), y.at(0), y.at(1));
  }
  if (kind == "polygon") {
    std::vector<Point> verts;
    for (const auto& v : j.at("vertices")) verts.push_back({v.at(0), v.at(1)});
    return SpatialDomain::polygon(std::move(verts));
  }
  throw std::invalid_argument("domain_from_json: unknown kind " + kind);
}

// JSON Lines dataset: one sequence per line. Temporal-only sequences omit
// the x,y fields of every event.
inline void write_dataset(std::ostream& os, const std::vector<EventSequence>& seqs) {
  for (const EventSequence& seq : seqs) {
    nlohmann::json j;
    j["T"] = seq.T();
    j["domain"] = domain_to_json(seq.domain());
    auto events = nlohmann::json::array();
    for (const STEvent& e : seq.events()) {
      nlohmann::json je;
      je["k"] = e.k;
      je["t"] = e.t;
      if (seq.spatial()) {
        je["x"] = e.s.x;
        je["y"] = e.s.y;
      }
      events.push_back(std::move(je));
    }
    j["events"] = std::move(events);
    os << j.dump() << "\n";
  }
}

inline void write_dataset(const std::string& path, const std::vector<EventSequence>& seqs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_dataset: cannot open " + path);
  write_dataset(os, seqs);
}

inline std::vector<EventSequence> read_dataset(std::istream& is,
                                               const std::string& origin = "<stream>") {
  std::vector<EventSequence> seqs;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      const double T = j.at("T").get<double>();
      SpatialDomain domain = domain_from_json(j.at("domain"));
      std::vector<STEvent> events;
      std::optional<bool> spatial;
      for (const auto& je : j.at("events")) {
        STEvent e;
        e.k = je.at("k").get<int>();
        e.t = je.at("t").get<double>();
        const bool has_xy = je.contains("x") || je.contains("y");
        if (spatial.has_value() && *spatial != has_xy)
          throw std::invalid_argument("mixed spatial/temporal events in one sequence");
        spatial = has_xy;
        if (has_xy) {
          e.s.x = je.at("x").get<double>();
          e.s.y = je.at("y").get<double>();
        }
        events.push_back(e);
      }
      seqs.emplace_back(std::move(events), T, std::move(domain), spatial.value_or(true));
    } catch (const std::exception& ex) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return seqs;
}

inline std::vector<EventSequence> read_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_dataset: cannot open " + path);
  return read_dataset(is, path);
}

// Independent affine map per axis sending the bounding box onto [-1,1]^2.
struct AffineTransform {
  double sx = 1.0, ox = 0.0, sy = 1.0, oy = 0.0;

  Point forward(const Point& p) const { return {sx * p.x + ox, sy * p.y + oy}; }
  Point inverse(const Point& p) const { return {(p.x - ox) / sx, (p.y - oy) / sy}; }
};

struct BoundingBox {
  double x0, x1, y0, y1;
};

inline AffineTransform normalize_transform(const BoundingBox& box) {
  if (!(box.x1 > box.x0) || !(box.y1 > box.y0))
    throw std::invalid_argument("normalize_transform: degenerate bounding box");
  AffineTransform t;
  t.sx = 2.0 / (box.x1 - box.x0);
  t.ox = -1.0 - t.sx * box.x0;
  t.sy = 2.0 / (box.y1 - box.y0);
  t.oy = -1.0 - t.sy * box.y0;
  return t;
}

// Raw ingested record: calendar date, geographic location, type code 1..K.
struct RawEvent {
  int year = 1970, month = 1, day = 1;
  Point location;  // x = longitude, y = latitude
  int k = 1;
};

// CSV with header date,lat,lon,group; dates are YYYY-MM-DD.
inline std::vector<RawEvent> read_raw_csv(std::istream& is,
                                          const std::string& origin = "<stream>") {
  std::vector<RawEvent> events;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("date", 0) == 0) continue;  // header
    std::istringstream ss(line);
    std::string date, lat, lon, group;
    if (!std::getline(ss, date, ',') || !std::getline(ss, lat, ',') ||
        !std::getline(ss, lon, ',') || !std::getline(ss, group, ','))
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected date,lat,lon,group");
    RawEvent e;
    try {
      if (date.size() != 10 || date[4] != '-' || date[7] != '-')
        throw std::invalid_argument("bad date " + date);
      e.year = std::stoi(date.substr(0, 4));
      e.month = std::stoi(date.substr(5, 2));
      e.day = std::stoi(date.substr(8, 2));
      e.location.y = std::stod(lat);
      e.location.x = std::stod(lon);
      e.k = std::stoi(group);
      if (e.k < 1) throw std::invalid_argument("group must be >= 1");
    } catch (const std::exception& ex) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + ex.what());
    }
    events.push_back(e);
  }
  return events;
}

inline int day_of_year(int year, int month, int day) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year(year), std::chrono::month(static_cast<unsigned>(month)),
                           std::chrono::day(static_cast<unsigned>(day))};
  if (!ymd.ok()) throw std::invalid_argument("day_of_year: invalid calendar date");
  const year_month_day jan1{std::chrono::year(year), January, std::chrono::day(1)};
  return static_cast<int>((sys_days(ymd) - sys_days(jan1)).count());
}

struct PolygonFilterResult {
  std::vector<RawEvent> kept;
  int rejected = 0;
};

inline PolygonFilterResult filter_polygon(const std::vector<RawEvent>& events,
                                          const SpatialDomain& polygon) {
  PolygonFilterResult r;
  for (const RawEvent& e : events) {
    if (polygon.contains(e.location))
      r.kept.push_back(e);
    else
      ++r.rejected;
  }
  return r;
}

// One EventSequence per calendar year on [0, 366], t = days since Jan 1.
// Date-only data gets deterministic intra-day jitter (input order, 1e-3 day
// steps) so times are strictly increasing.
inline std::vector<EventSequence> yearly_split(const std::vector<RawEvent>& events,
                                               int year_from, int year_to,
                                               const SpatialDomain& domain) {
  if (year_to < year_from) throw std::invalid_argument("yearly_split: empty year range");
  std::vector<std::vector<STEvent>> buckets(static_cast<std::size_t>(year_to - year_from + 1));
  for (const RawEvent& e : events) {
    if (e.year < year_from || e.year > year_to) continue;
    STEvent se;
    se.k = e.k;
    se.t = static_cast<double>(day_of_year(e.year, e.month, e.day));
    se.s = e.location;
    buckets[static_cast<std::size_t>(e.year - year_from)].push_back(se);
  }
  std::vector<EventSequence> out;
  for (auto& bucket : buckets) {
    std::stable_sort(bucket.begin(), bucket.end(),
                     [](const STEvent& a, const STEvent& b) { return a.t < b.t; });
    double prev_day = -1.0;
    int j = 0;
    for (STEvent& e : bucket) {
      if (e.t == prev_day) {
        ++j;
      } else {
        prev_day = e.t;
        j = 0;
      }
      e.t += static_cast<double>(j) * 1e-3;
    }
    out.emplace_back(std::move(bucket), 366.0, domain, true);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

struct Checkpoint {
  Model model;
  SpatialDomain domain;
  int best_epoch = 0;
  std::vector<EpochRecord> history;
};

inline void save_checkpoint(std::ostream& os, const Model& model,
                            const SpatialDomain& domain, int best_epoch,
                            const std::vector<EpochRecord>& history) {
  const ModelConfig& cfg = model.config();
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["variant"] = variant_name(cfg.variant);
  j["K"] = cfg.K;
  j["D"] = cfg.D;
  j["E"] = cfg.E;
  j["tau"] = cfg.tau;
  j["domain"] = domain_to_json(domain);
  j["best_epoch"] = best_epoch;
  auto hist = nlohmann::json::array();
  for (const EpochRecord& r : history)
    hist.push_back({r.epoch, r.train_ll, r.valid_ll, r.wall_seconds});
  j["history"] = std::move(hist);
  nlohmann::json params;
  for (std::size_t i = 0; i < model.store().count(); ++i) {
    const auto& e = model.store().entry(i);
    params[e.name] = {{"dims", e.dims}, {"values", e.value}};
  }
  j["params"] = std::move(params);
  os << j.dump() << "\n";
}

inline void save_checkpoint(const std::string& path, const Model& model,
                            const SpatialDomain& domain, int best_epoch,
                            const std::vector<EpochRecord>& history) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  save_checkpoint(os, model, domain, best_epoch, history);
}

inline Checkpoint load_checkpoint(std::istream& is) {
  const nlohmann::json j = nlohmann::json::parse(is);
  if (j.at("format_version").get<int>() != kFormatVersion)
    throw std::runtime_error("load_checkpoint: unsupported format_version");
  ModelConfig cfg;
  cfg.variant = variant_from_name(j.at("variant").get<std::string>());
  cfg.K = j.at("K").get<int>();
  cfg.D = j.at("D").get<int>();
  cfg.E = j.at("E").get<int>();
  cfg.tau = j.at("tau").get<std::vector<double>>();
  // Seed 0 then overwrite every entry: keeps the store layout identical to a
  // freshly initialized model.
  Model model(cfg, 0);
  const auto& params = j.at("params");
  for (std::size_t i = 0; i < model.store().count(); ++i) {
    auto& e = model.store().entry(i);
    if (!params.contains(e.name))
      throw std::runtime_error("load_checkpoint: missing parameter " + e.name);
    const auto& pe = params.at(e.name);
    const auto dims = pe.at("dims").get<std::vector<std::size_t>>();
    const auto values = pe.at("values").get<std::vector<double>>();
    if (dims != e.dims || values.size() != e.value.size())
      throw std::runtime_error("load_checkpoint: shape mismatch for " + e.name);
    e.value = values;
  }
  Checkpoint ck{std::move(model), domain_from_json(j.at("domain")),
                j.at("best_epoch").get<int>(), {}};
  for (const auto& r : j.at("history"))
    ck.history.push_back({r.at(0).get<int>(), r.at(1).get<double>(), r.at(2).get<double>(),
                          r.at(3).get<double>()});
  return ck;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  try {
    return load_checkpoint(is);
  } catch (const nlohmann::json::exception& ex) {
    throw std::runtime_error("load_checkpoint: " + path + ": " + ex.what());
  }
}

// Training history CSV. With zero_wall the wall-clock column is written as 0
// so reruns in reproducibility mode stay byte-identical.
inline void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history,
                              bool zero_wall = false) {
  os << "epoch,train_ll,valid_ll,wall_seconds\n";
  os.precision(17);
  for (const EpochRecord& r : history)
    os << r.epoch << "," << r.train_ll << "," << r.valid_ll << ","
       << (zero_wall ? 0.0 : r.wall_seconds) << "\n";
}

}  // namespace mstnhp

#endif  // MSTNHP_DATAIO_HPP
