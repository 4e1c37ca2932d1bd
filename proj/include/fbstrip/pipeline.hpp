#pragma once

// Drives a configured experiment end to end and persists the artifact tree:
//   manifest.json   config echo + versions (+ runtime unless deterministic)
//   regime.json     closed-form regime map
//   field.bin/.json solution field payload + sidecar          (solve+)
//   solution.json   solver statistics and curve summary       (solve+)
//   fbcurve.csv     extracted free-boundary graph             (solve+)
//   weiss.csv, blowup.bin/.json + classification.json, contact.json,
//   bernoulli.json, probe.json                                (per toggle)

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbstrip/field_io.hpp"
#include "fbstrip/flat_profile.hpp"
#include "fbstrip/free_boundary.hpp"
#include "fbstrip/minimize.hpp"
#include "fbstrip/regimes.hpp"
#include "fbstrip/run_config.hpp"
#include "fbstrip/weiss.hpp"

namespace fbstrip {

enum class RunMode { RegimesOnly, Solve, Diagnose };

inline const char* to_string(GammaClass c) {
  return c == GammaClass::NonFlatGuaranteed ? "non_flat_guaranteed" : "no_guarantee";
}

namespace detail {

inline ordered_json regime_json(const ProblemParams& p) {
  const RegimeReport rep = classify_gamma(p);
  const BestFlat bf = best_flat_profile(p.m, p.h);
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  params_to_json(j["params"], p);
  j["h_sharp"] = rep.h_sharp;
  j["h_star"] = rep.h_star;
  j["t_h"] = rep.t_h ? ordered_json(*rep.t_h) : ordered_json(nullptr);
  j["tau_h"] = rep.tau_h ? ordered_json(*rep.tau_h) : ordered_json(nullptr);
  j["gamma_class"] = to_string(rep.gamma_class);
  j["best_flat"] = {{"t", std::isfinite(bf.t) ? ordered_json(bf.t) : ordered_json(nullptr)},
                    {"energy", bf.energy}};
  return j;
}

// Defaults that depend on the parameters are pinned into the config before
// the manifest is echoed, so a replayed manifest resolves to the same run.
inline void resolve_diagnostic_defaults(RunConfig& c) {
  const double bound = weiss_radius_bound(c.params);
  if (c.diagnostics.weiss.enabled && c.diagnostics.weiss.radii.empty())
    c.diagnostics.weiss.radii = {0.2 * bound, 0.4 * bound, 0.6 * bound, 0.8 * bound};
  if (c.diagnostics.blowup.enabled && c.diagnostics.blowup.rho == 0.0)
    c.diagnostics.blowup.rho = 0.5 * bound / c.diagnostics.blowup.R;
}

inline ordered_json fbcurve_summary(const FBCurve& curve) {
  ordered_json j;
  j["threshold"] = curve.threshold;
  j["n_defined"] = curve.n_defined();
  // a single defined sample has no oscillation value; empty curves report 0
  j["oscillation"] =
      curve.n_defined() == 1 ? ordered_json(nullptr) : ordered_json(oscillation(curve));
  j["max_jump"] = curve.max_jump();
  j["asymmetric_rows"] = curve.asymmetric_rows;
  return j;
}

using clock = std::chrono::steady_clock;

inline double ms_since(clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
}

}  // namespace detail

// Runs one experiment into out_dir.  Returns the process exit status: 0 on
// success (including honest non-convergence), with config errors expected to
// be thrown as ConfigError before anything heavy starts.
inline int run_pipeline(RunConfig c, const std::filesystem::path& out_dir, RunMode mode,
                        int threads_used) {
  detail::resolve_diagnostic_defaults(c);
  std::filesystem::create_directories(out_dir);

  ordered_json timings;
  std::vector<std::string> artifacts;
  bool converged = true;

  detail::write_text(out_dir / "regime.json", detail::regime_json(c.params).dump(2) + "\n");
  artifacts.push_back("regime.json");

  if (mode != RunMode::RegimesOnly) {
    const Grid grid = build_grid(c.params, c.grid.nx, c.grid.ny, c.grid.y_max);
    const SmoothingSchedule sched =
        make_schedule(grid, c.smoothing.eps_start, c.smoothing.floor_cells);

    auto starts = default_starts(grid, c.params);
    if (!c.starts.empty()) {
      std::vector<std::pair<std::string, Field>> picked;
      for (const std::string& name : c.starts) {
        bool found = false;
        for (auto& s : starts)
          if (s.first == name) {
            picked.push_back(std::move(s));
            found = true;
            break;
          }
        if (!found)
          throw ConfigError("starts", "initializer '" + name +
                                          "' is not available for these parameters");
      }
      starts = std::move(picked);
    }

    const auto t_solve = detail::clock::now();
    const Solution sol = minimize(c.params, grid, sched, std::move(starts));
    timings["solve_ms"] = detail::ms_since(t_solve);
    converged = sol.converged;

    write_field_artifact(out_dir, "field", sol.field, sol.params, sol.eps_final);
    artifacts.push_back("field.bin");
    artifacts.push_back("field.json");

    const FBCurve curve = extract_graph(sol);
    detail::write_text(out_dir / "fbcurve.csv", fbcurve_csv(curve));
    artifacts.push_back("fbcurve.csv");

    ordered_json js;
    js["schema_version"] = kSchemaVersion;
    js["energy"] = sol.energy;
    js["energy_sharp"] = sol.energy_sharp;
    js["eps_final"] = sol.eps_final;
    js["grad_norm"] = sol.grad_norm;
    js["iterations"] = sol.iterations;
    js["starts_used"] = sol.starts_used;
    js["best_start"] = sol.best_start;
    js["converged"] = sol.converged;
    js["subharmonicity_residual"] = subharmonicity_residual(sol.field);
    js["fbcurve"] = detail::fbcurve_summary(curve);
    detail::write_text(out_dir / "solution.json", js.dump(2) + "\n");
    artifacts.push_back("solution.json");

    if (mode == RunMode::Diagnose) {
      if (c.diagnostics.weiss.enabled) {
        const auto t0 = detail::clock::now();
        QuadratureSpec q{c.diagnostics.weiss.angular, c.diagnostics.weiss.radial};
        const WeissSeries series = compute_weiss_series(sol, c.diagnostics.weiss.radii, q);
        detail::write_text(out_dir / "weiss.csv", weiss_csv(series));
        artifacts.push_back("weiss.csv");
        timings["weiss_ms"] = detail::ms_since(t0);
      }
      if (c.diagnostics.blowup.enabled) {
        const auto t0 = detail::clock::now();
        const BlowupField bf =
            blowup_rescale(sol, c.diagnostics.blowup.rho, c.diagnostics.blowup.R);
        write_blowup_artifact(out_dir, "blowup", bf);
        artifacts.push_back("blowup.bin");
        artifacts.push_back("blowup.json");
        ordered_json jc;
        jc["schema_version"] = kSchemaVersion;
        const BlowupClass cls = classify_blowup(bf);
        jc["label"] = to_string(cls.label);
        jc["distance_zero"] = cls.distance_zero;
        jc["distance_halfplane"] = cls.distance_halfplane;
        jc["distance_cone"] = cls.distance_cone;
        jc["rho"] = bf.rho;
        jc["R"] = bf.R;
        detail::write_text(out_dir / "classification.json", jc.dump(2) + "\n");
        artifacts.push_back("classification.json");
        timings["blowup_ms"] = detail::ms_since(t0);
      }
      if (c.diagnostics.contact.enabled) {
        ordered_json jc;
        jc["schema_version"] = kSchemaVersion;
        try {
          const ContactReport rep =
              contact_ratios(curve, c.params, c.diagnostics.contact.depth,
                             c.diagnostics.contact.delta > 0.0 ? c.diagnostics.contact.delta
                                                               : -1.0);
          jc["defined"] = true;
          jc["from_above"] = rep.from_above;
          jc["monotone_tail"] = rep.monotone_tail;
          jc["max_ratio"] = rep.max_ratio;
          auto pairs = [](const std::vector<std::pair<double, double>>& v) {
            ordered_json a = ordered_json::array();
            for (const auto& [y, r] : v) a.push_back({{"y", y}, {"ratio", r}});
            return a;
          };
          jc["ratios"] = pairs(rep.ratios);
          jc["other_side"] = pairs(rep.other_side);
        } catch (const NotDefinedError& e) {
          jc["defined"] = false;
          jc["reason"] = e.what();
        }
        detail::write_text(out_dir / "contact.json", jc.dump(2) + "\n");
        artifacts.push_back("contact.json");
      }
      if (c.diagnostics.bernoulli.enabled) {
        ordered_json jb;
        jb["schema_version"] = kSchemaVersion;
        try {
          const BernoulliStats st = bernoulli_check(sol, curve);
          jb["defined"] = true;
          jb["median"] = st.median;
          jb["p90"] = st.p90;
          jb["n_samples"] = st.n_samples;
        } catch (const NotDefinedError& e) {
          jb["defined"] = false;
          jb["reason"] = e.what();
        }
        detail::write_text(out_dir / "bernoulli.json", jb.dump(2) + "\n");
        artifacts.push_back("bernoulli.json");
      }
      if (c.diagnostics.probe.enabled) {
        const auto t0 = detail::clock::now();
        ordered_json jp;
        jp["schema_version"] = kSchemaVersion;
        try {
          const ProbeReport rep = nondegeneracy_probe(sol, c.diagnostics.probe.k,
                                                      c.diagnostics.probe.samples, c.seed);
          jp["defined"] = true;
          jp["c_emp"] = rep.c_emp;
          jp["qualifying"] = rep.qualifying;
          jp["attempted"] = rep.attempted;
          jp["k"] = rep.k;
        } catch (const NotDefinedError& e) {
          jp["defined"] = false;
          jp["reason"] = e.what();
        }
        detail::write_text(out_dir / "probe.json", jp.dump(2) + "\n");
        artifacts.push_back("probe.json");
        timings["probe_ms"] = detail::ms_since(t0);
      }
    }
  }

  ordered_json man;
  man["schema_version"] = kSchemaVersion;
  man["kind"] = "manifest";
  man["versions"] = {{"fbstrip", kVersion},
                     {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  man["mode"] = mode == RunMode::RegimesOnly ? "regimes"
                : mode == RunMode::Solve     ? "solve"
                                             : "diagnose";
  man["config"] = run_config_to_json(c);
  man["converged"] = converged;
  man["artifacts"] = artifacts;
  // wall-clock data would break byte-identity between repeated runs
  man["runtime"] =
      c.deterministic ? ordered_json(nullptr)
                      : ordered_json{{"threads", threads_used}, {"timings", timings}};
  detail::write_text(out_dir / "manifest.json", man.dump(2) + "\n");
  return 0;
}

namespace detail {

inline ordered_json load_json_artifact(const std::filesystem::path& dir, const char* name,
                                       const char* which_run) {
  const auto path = dir / name;
  if (!std::filesystem::exists(path))
    throw ConfigError(which_run, "missing artifact " + path.string());
  return ordered_json::parse(read_bytes(path));
}

// fbcurve.csv back into an FBCurve (only ys/gs/flags matter downstream).
inline FBCurve parse_fbcurve_csv(const std::string& text) {
  FBCurve c;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (line.empty() || line[0] == '#' || lineno <= 2) continue;  // header rows
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ConfigError("fbcurve.csv", "malformed row: " + line);
    c.ys.push_back(std::stod(line.substr(0, c1)));
    const std::string gtext = line.substr(c1 + 1, c2 - c1 - 1);
    const std::string flag = line.substr(c2 + 1);
    if (flag == "defined") {
      c.flags.push_back(RowFlag::Defined);
      c.gs.push_back(std::stod(gtext));
    } else if (flag == "all_zero") {
      c.flags.push_back(RowFlag::AllZero);
      c.gs.push_back(std::numeric_limits<double>::quiet_NaN());
    } else if (flag == "all_positive") {
      c.flags.push_back(RowFlag::AllPositive);
      c.gs.push_back(std::stod(gtext));
    } else {
      throw ConfigError("fbcurve.csv", "unknown flag: " + flag);
    }
  }
  return c;
}

inline std::optional<double> curve_sup_distance(const FBCurve& a, const FBCurve& b) {
  double sup = -1.0;
  auto one_way = [&sup](const FBCurve& from, const FBCurve& to) {
    for (std::size_t k = 0; k < from.ys.size(); ++k) {
      if (from.flags[k] != RowFlag::Defined) continue;
      const auto gv = curve_value(to, from.ys[k]);
      if (gv) sup = std::max(sup, std::abs(from.gs[k] - *gv));
    }
  };
  one_way(a, b);
  one_way(b, a);
  if (sup < 0.0) return std::nullopt;
  return sup;
}

struct WeissRows {
  std::vector<std::pair<double, double>> phi;  // (r, value)
};

inline WeissRows parse_weiss_csv(const std::string& text) {
  WeissRows out;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (line.empty() || line[0] == '#' || lineno <= 2) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto c3 = line.find(',', c2 + 1);
    if (line.substr(0, c1) != "phi") continue;
    out.phi.emplace_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)),
                         std::stod(line.substr(c3 + 1)));
  }
  return out;
}

}  // namespace detail

// Refinement-study comparison of two completed run directories.
inline ordered_json compare_runs(const std::filesystem::path& dir_a,
                                 const std::filesystem::path& dir_b) {
  const ordered_json man_a = detail::load_json_artifact(dir_a, "manifest.json", "run_a");
  const ordered_json man_b = detail::load_json_artifact(dir_b, "manifest.json", "run_b");
  const auto& pa = man_a.at("config").at("params");
  const auto& pb = man_b.at("config").at("params");
  for (const char* k : {"m", "h", "gamma", "lambda"})
    if (pa.at(k).get<double>() != pb.at(k).get<double>())
      throw ConfigError("run_b", std::string("params.") + k + " differs from run_a");

  ordered_json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["run_a"] = dir_a.string();
  rep["run_b"] = dir_b.string();
  params_to_json(rep["params"], ProblemParams{pa.at("m").get<double>(), pa.at("h").get<double>(),
                                              pa.at("gamma").get<double>(),
                                              pa.at("lambda").get<double>()});

  const ordered_json sol_a = detail::load_json_artifact(dir_a, "solution.json", "run_a");
  const ordered_json sol_b = detail::load_json_artifact(dir_b, "solution.json", "run_b");
  rep["energy_a"] = sol_a.at("energy").get<double>();
  rep["energy_b"] = sol_b.at("energy").get<double>();
  rep["energy_delta"] = sol_b.at("energy").get<double>() - sol_a.at("energy").get<double>();

  {
    const auto path_a = dir_a / "fbcurve.csv";
    const auto path_b = dir_b / "fbcurve.csv";
    if (!std::filesystem::exists(path_a))
      throw ConfigError("run_a", "missing artifact " + path_a.string());
    if (!std::filesystem::exists(path_b))
      throw ConfigError("run_b", "missing artifact " + path_b.string());
    const FBCurve ca = detail::parse_fbcurve_csv(detail::read_text_file(path_a));
    const FBCurve cb = detail::parse_fbcurve_csv(detail::read_text_file(path_b));
    const auto sup = detail::curve_sup_distance(ca, cb);
    rep["fbcurve_sup_distance"] = sup ? ordered_json(*sup) : ordered_json(nullptr);
  }

  const auto weiss_a = dir_a / "weiss.csv";
  const auto weiss_b = dir_b / "weiss.csv";
  if (std::filesystem::exists(weiss_a) && std::filesystem::exists(weiss_b)) {
    const auto rows_a = detail::parse_weiss_csv(detail::read_text_file(weiss_a));
    const auto rows_b = detail::parse_weiss_csv(detail::read_text_file(weiss_b));
    ordered_json deltas = ordered_json::array();
    for (const auto& [ra, va] : rows_a.phi)
      for (const auto& [rb, vb] : rows_b.phi)
        if (ra == rb) deltas.push_back({{"r", ra}, {"phi_delta", vb - va}});
    rep["weiss_phi_deltas"] = deltas;
  } else {
    rep["weiss_phi_deltas"] = nullptr;
  }
  return rep;
}

}  // namespace fbstrip
