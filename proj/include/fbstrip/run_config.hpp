#pragma once

// Run configuration: a single JSON document describing one experiment.
// Parsing is strict (unknown keys rejected) and every error names the
// offending field with a dotted path, e.g. "params.gamma".

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fbstrip/field_io.hpp"
#include "fbstrip/params.hpp"

namespace fbstrip {

struct GridConfig {
  int nx = 128;
  int ny = 0;           // 0: pick ny so that dy is close to dx
  double y_max = 0.0;   // 0: h + 0.5
};

struct SmoothingConfig {
  double eps_start = 0.2;
  double floor_cells = 4.0;
};

struct WeissConfig {
  bool enabled = false;
  std::vector<double> radii;  // empty: fractions of the admissible radius
  int angular = 512;
  int radial = 64;
};

struct BlowupConfig {
  bool enabled = false;
  double rho = 0.0;  // 0: half the admissible window at the chosen R
  double R = 1.5;
};

struct ContactConfig {
  bool enabled = false;
  int depth = 12;
  double delta = 0.0;  // 0: operation default
};

struct BernoulliConfig {
  bool enabled = false;
};

struct ProbeConfig {
  bool enabled = false;
  double k = 0.5;
  int samples = 200;
};

struct DiagnosticsConfig {
  WeissConfig weiss;
  BlowupConfig blowup;
  ContactConfig contact;
  BernoulliConfig bernoulli;
  ProbeConfig probe;
};

struct RunConfig {
  ProblemParams params;
  GridConfig grid;
  SmoothingConfig smoothing;
  std::vector<std::string> starts;  // empty: every available initializer
  DiagnosticsConfig diagnostics;
  std::string output_dir = "out";
  bool deterministic = false;
  std::uint64_t seed = 20240817;
};

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline void require_object(const ordered_json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "must be an object");
}

inline void reject_unknown(const ordered_json& j, const std::string& path,
                           std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(join_path(path, it.key()), "unknown field");
  }
}

inline double get_num(const ordered_json& j, const std::string& path, const char* key,
                      double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join_path(path, key), "must be a number");
  return v.get<double>();
}

inline int get_int(const ordered_json& j, const std::string& path, const char* key,
                   int fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(join_path(path, key), "must be an integer");
  return v.get<int>();
}

inline bool get_bool(const ordered_json& j, const std::string& path, const char* key,
                     bool fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(join_path(path, key), "must be a boolean");
  return v.get<bool>();
}

inline std::string get_str(const ordered_json& j, const std::string& path, const char* key,
                           const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(join_path(path, key), "must be a string");
  return v.get<std::string>();
}

}  // namespace detail

inline RunConfig parse_run_config(const ordered_json& root) {
  using detail::get_bool;
  using detail::get_int;
  using detail::get_num;
  using detail::get_str;

  detail::require_object(root, "config");
  detail::reject_unknown(root, "", {"schema_version", "params", "grid", "smoothing", "starts",
                                    "diagnostics", "output_dir", "deterministic", "seed"});
  RunConfig c;

  if (root.contains("schema_version")) {
    const int v = get_int(root, "", "schema_version", kSchemaVersion);
    if (v != kSchemaVersion)
      throw ConfigError("schema_version",
                        "unsupported version " + std::to_string(v) + ", expected " +
                            std::to_string(kSchemaVersion));
  }

  if (!root.contains("params")) throw ConfigError("params", "required");
  {
    const auto& jp = root.at("params");
    detail::require_object(jp, "params");
    detail::reject_unknown(jp, "params", {"m", "h", "gamma", "lambda"});
    for (const char* k : {"m", "h", "gamma", "lambda"})
      if (!jp.contains(k)) throw ConfigError(detail::join_path("params", k), "required");
    c.params.m = get_num(jp, "params", "m", 0.0);
    c.params.h = get_num(jp, "params", "h", 0.0);
    c.params.gamma = get_num(jp, "params", "gamma", 0.0);
    c.params.lambda = get_num(jp, "params", "lambda", 0.0);
    validate(c.params);  // throws field-pointing ConfigError on bad values
  }

  if (root.contains("grid")) {
    const auto& jg = root.at("grid");
    detail::require_object(jg, "grid");
    detail::reject_unknown(jg, "grid", {"nx", "ny", "y_max"});
    c.grid.nx = get_int(jg, "grid", "nx", c.grid.nx);
    c.grid.ny = get_int(jg, "grid", "ny", c.grid.ny);
    c.grid.y_max = get_num(jg, "grid", "y_max", c.grid.y_max);
    if (c.grid.nx < 4) throw ConfigError("grid.nx", "must be >= 4");
    if (c.grid.ny < 0) throw ConfigError("grid.ny", "must be >= 0 (0 selects dy close to dx)");
  }
  if (c.grid.y_max == 0.0) c.grid.y_max = c.params.h + 0.5;
  if (!(c.grid.y_max > c.params.h))
    throw ConfigError("grid.y_max", "must exceed h");
  if (c.grid.ny == 0) {
    const double dx = c.params.lambda / c.grid.nx;
    c.grid.ny = std::max(8, (int)std::llround(c.grid.y_max / dx));
  }

  if (root.contains("smoothing")) {
    const auto& js = root.at("smoothing");
    detail::require_object(js, "smoothing");
    detail::reject_unknown(js, "smoothing", {"eps_start", "floor_cells"});
    c.smoothing.eps_start = get_num(js, "smoothing", "eps_start", c.smoothing.eps_start);
    c.smoothing.floor_cells = get_num(js, "smoothing", "floor_cells", c.smoothing.floor_cells);
    if (!(c.smoothing.eps_start > 0.0))
      throw ConfigError("smoothing.eps_start", "must be positive");
    if (!(c.smoothing.floor_cells > 0.0))
      throw ConfigError("smoothing.floor_cells", "must be positive");
  }

  if (root.contains("starts")) {
    const auto& js = root.at("starts");
    if (!js.is_array()) throw ConfigError("starts", "must be an array of initializer names");
    for (const auto& e : js) {
      if (!e.is_string()) throw ConfigError("starts", "entries must be strings");
      const std::string name = e.get<std::string>();
      if (name != "flat_gamma" && name != "flat_root" && name != "bump")
        throw ConfigError("starts", "unknown initializer '" + name + "'");
      c.starts.push_back(name);
    }
    if (c.starts.empty()) throw ConfigError("starts", "must name at least one initializer");
  }

  if (root.contains("diagnostics")) {
    const auto& jd = root.at("diagnostics");
    detail::require_object(jd, "diagnostics");
    detail::reject_unknown(jd, "diagnostics",
                           {"weiss", "blowup", "contact", "bernoulli", "probe"});
    if (jd.contains("weiss")) {
      const auto& jw = jd.at("weiss");
      detail::require_object(jw, "diagnostics.weiss");
      detail::reject_unknown(jw, "diagnostics.weiss", {"enabled", "radii", "angular", "radial"});
      auto& w = c.diagnostics.weiss;
      w.enabled = get_bool(jw, "diagnostics.weiss", "enabled", false);
      w.angular = get_int(jw, "diagnostics.weiss", "angular", w.angular);
      w.radial = get_int(jw, "diagnostics.weiss", "radial", w.radial);
      if (jw.contains("radii")) {
        const auto& jr = jw.at("radii");
        if (!jr.is_array()) throw ConfigError("diagnostics.weiss.radii", "must be an array");
        for (const auto& e : jr) {
          if (!e.is_number())
            throw ConfigError("diagnostics.weiss.radii", "entries must be numbers");
          w.radii.push_back(e.get<double>());
        }
      }
    }
    if (jd.contains("blowup")) {
      const auto& jb = jd.at("blowup");
      detail::require_object(jb, "diagnostics.blowup");
      detail::reject_unknown(jb, "diagnostics.blowup", {"enabled", "rho", "R"});
      auto& b = c.diagnostics.blowup;
      b.enabled = get_bool(jb, "diagnostics.blowup", "enabled", false);
      b.rho = get_num(jb, "diagnostics.blowup", "rho", b.rho);
      b.R = get_num(jb, "diagnostics.blowup", "R", b.R);
    }
    if (jd.contains("contact")) {
      const auto& jc = jd.at("contact");
      detail::require_object(jc, "diagnostics.contact");
      detail::reject_unknown(jc, "diagnostics.contact", {"enabled", "depth", "delta"});
      auto& t = c.diagnostics.contact;
      t.enabled = get_bool(jc, "diagnostics.contact", "enabled", false);
      t.depth = get_int(jc, "diagnostics.contact", "depth", t.depth);
      t.delta = get_num(jc, "diagnostics.contact", "delta", t.delta);
    }
    if (jd.contains("bernoulli")) {
      const auto& jb = jd.at("bernoulli");
      detail::require_object(jb, "diagnostics.bernoulli");
      detail::reject_unknown(jb, "diagnostics.bernoulli", {"enabled"});
      c.diagnostics.bernoulli.enabled = get_bool(jb, "diagnostics.bernoulli", "enabled", false);
    }
    if (jd.contains("probe")) {
      const auto& jp = jd.at("probe");
      detail::require_object(jp, "diagnostics.probe");
      detail::reject_unknown(jp, "diagnostics.probe", {"enabled", "k", "samples"});
      auto& pr = c.diagnostics.probe;
      pr.enabled = get_bool(jp, "diagnostics.probe", "enabled", false);
      pr.k = get_num(jp, "diagnostics.probe", "k", pr.k);
      pr.samples = get_int(jp, "diagnostics.probe", "samples", pr.samples);
    }
  }

  c.output_dir = get_str(root, "", "output_dir", c.output_dir);
  c.deterministic = get_bool(root, "", "deterministic", false);
  if (root.contains("seed")) {
    const auto& v = root.at("seed");
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ConfigError("seed", "must be a nonnegative integer");
    c.seed = v.get<std::uint64_t>();
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError("config", "no such file: " + path.string());
  ordered_json root;
  try {
    root = ordered_json::parse(detail::read_bytes(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  // a manifest is accepted in place of a config: replaying one reproduces
  // its run
  if (root.is_object() && root.contains("kind") && root.at("kind") == "manifest") {
    if (!root.contains("config")) throw ConfigError("config", "manifest without a config echo");
    root = root.at("config");
  }
  return parse_run_config(root);
}

// Echo of the effective configuration (defaults resolved, output_dir omitted
// so that a manifest replayed with --out elsewhere reproduces the run).
inline ordered_json run_config_to_json(const RunConfig& c) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  params_to_json(j["params"], c.params);
  j["grid"] = {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"y_max", c.grid.y_max}};
  j["smoothing"] = {{"eps_start", c.smoothing.eps_start},
                    {"floor_cells", c.smoothing.floor_cells}};
  if (!c.starts.empty()) j["starts"] = c.starts;
  ordered_json d;
  d["weiss"] = {{"enabled", c.diagnostics.weiss.enabled},
                {"angular", c.diagnostics.weiss.angular},
                {"radial", c.diagnostics.weiss.radial}};
  if (!c.diagnostics.weiss.radii.empty()) d["weiss"]["radii"] = c.diagnostics.weiss.radii;
  d["blowup"] = {{"enabled", c.diagnostics.blowup.enabled},
                 {"rho", c.diagnostics.blowup.rho},
                 {"R", c.diagnostics.blowup.R}};
  d["contact"] = {{"enabled", c.diagnostics.contact.enabled},
                  {"depth", c.diagnostics.contact.depth},
                  {"delta", c.diagnostics.contact.delta}};
  d["bernoulli"] = {{"enabled", c.diagnostics.bernoulli.enabled}};
  d["probe"] = {{"enabled", c.diagnostics.probe.enabled},
                {"k", c.diagnostics.probe.k},
                {"samples", c.diagnostics.probe.samples}};
  j["diagnostics"] = d;
  j["deterministic"] = c.deterministic;
  j["seed"] = c.seed;
  return j;
}

}  // namespace fbstrip
