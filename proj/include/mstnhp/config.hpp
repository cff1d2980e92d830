#ifndef MSTNHP_CONFIG_HPP
#define MSTNHP_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mstnhp/core.hpp"
#include "mstnhp/kernels.hpp"

namespace mstnhp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Experiment configuration: kernel family, parameters, domain and window.
// Flat key-value text, one `key = values` per line, '#' comments. Matrices
// are row-major with K set explicitly. Families biv1..biv4 are presets;
// `separable` and `temporal` take explicit parameters.
struct ExperimentConfig {
  enum class Family { Biv1, Biv2, Biv3, Biv4, Separable, Temporal };

  Family family = Family::Biv1;
  bool temporal_only = false;
  STKernel st_spec = biv1_params();
  TemporalHawkesSpec temporal_spec;
  SpatialDomain domain = SpatialDomain::unit_square();
  double T = 100.0;
  std::string text;  // raw config text, hashed into manifests

  int K() const {
    return temporal_only ? temporal_spec.K : kernel_types(st_spec);
  }
};

inline std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

namespace detail {

inline std::vector<double> parse_doubles(const std::string& s, const std::string& key) {
  std::istringstream ss(s);
  std::vector<double> out;
  double x;
  while (ss >> x) out.push_back(x);
  if (out.empty()) throw ConfigError("config: no numeric values for key '" + key + "'");
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line, raw;
  while (std::getline(is, line)) {
    raw += line + "\n";
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }

  ExperimentConfig cfg;
  cfg.text = raw;
  if (!kv.count("family")) throw ConfigError("config: missing 'family'");
  const std::string fam = kv["family"];

  if (kv.count("T")) cfg.T = detail::parse_doubles(kv["T"], "T").at(0);
  if (!(cfg.T >= 0.0)) throw ConfigError("config: T must be >= 0");

  if (kv.count("domain")) {
    std::istringstream ss(kv["domain"]);
    std::string kind;
    ss >> kind;
    if (kind == "rect") {
      double x0, x1, y0, y1;
      if (!(ss >> x0 >> x1 >> y0 >> y1))
        throw ConfigError("config: domain rect needs x0 x1 y0 y1");
      cfg.domain = SpatialDomain::rectangle(x0, x1, y0, y1);
    } else if (kind == "polygon") {
      std::vector<Point> verts;
      double x, y;
      while (ss >> x >> y) verts.push_back({x, y});
      cfg.domain = SpatialDomain::polygon(std::move(verts));
    } else {
      throw ConfigError("config: unknown domain kind '" + kind + "'");
    }
  }

  auto separable_from_kv = [&](int K) {
    SeparableKernelParams p;
    p.K = K;
    p.mu = detail::parse_doubles(kv.at("mu"), "mu");
    p.alpha = detail::parse_doubles(kv.at("alpha"), "alpha");
    p.beta = detail::parse_doubles(kv.at("beta"), "beta");
    p.sigma2 = detail::parse_doubles(kv.at("sigma2"), "sigma2");
    p.validate();
    return p;
  };

  try {
    if (fam == "biv1") {
      cfg.family = ExperimentConfig::Family::Biv1;
      cfg.st_spec = biv1_params();
    } else if (fam == "biv2") {
      cfg.family = ExperimentConfig::Family::Biv2;
      cfg.st_spec = biv2_params();
    } else if (fam == "biv3") {
      cfg.family = ExperimentConfig::Family::Biv3;
      cfg.st_spec = biv3_params();
    } else if (fam == "biv4") {
      cfg.family = ExperimentConfig::Family::Biv4;
      cfg.st_spec = Biv4Kernel{};
    } else if (fam == "separable") {
      cfg.family = ExperimentConfig::Family::Separable;
      if (!kv.count("K")) throw ConfigError("config: separable family needs K");
      cfg.st_spec =
          separable_from_kv(static_cast<int>(detail::parse_doubles(kv["K"], "K").at(0)));
    } else if (fam == "temporal") {
      cfg.family = ExperimentConfig::Family::Temporal;
      cfg.temporal_only = true;
      if (!kv.count("K")) throw ConfigError("config: temporal family needs K");
      TemporalHawkesSpec p;
      p.K = static_cast<int>(detail::parse_doubles(kv["K"], "K").at(0));
      p.mu = detail::parse_doubles(kv.at("mu"), "mu");
      p.alpha = detail::parse_doubles(kv.at("alpha"), "alpha");
      p.beta = detail::parse_doubles(kv.at("beta"), "beta");
      p.validate();
      cfg.temporal_spec = p;
    } else {
      throw ConfigError("config: unknown kernel family '" + fam + "'");
    }
  } catch (const std::out_of_range&) {
    throw ConfigError("config: family '" + fam + "' is missing required keys");
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }

  // sigma2 override applies to preset families too (ablation studies)
  if (kv.count("sigma2_override") && !cfg.temporal_only) {
    if (auto* sep = std::get_if<SeparableKernelParams>(&cfg.st_spec)) {
      const double s2 = detail::parse_doubles(kv["sigma2_override"], "sigma2_override").at(0);
      if (!(s2 > 0.0)) throw ConfigError("config: sigma2_override must be > 0");
      for (double& v : sep->sigma2) v = s2;
    } else {
      throw ConfigError("config: sigma2_override needs a separable family");
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  return parse_config(is);
}

}  // namespace mstnhp

#endif  // MSTNHP_CONFIG_HPP
