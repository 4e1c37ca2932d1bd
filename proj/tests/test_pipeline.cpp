#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "fbstrip/pipeline.hpp"

using namespace fbstrip;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("tp_artifacts") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ordered_json parse_file(const fs::path& p) {
  return ordered_json::parse(detail::read_text_file(p));
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  return detail::read_bytes(a) == detail::read_bytes(b);
}

// Small but genuinely non-flat configuration; every diagnostic enabled with
// quadrature cheap enough for a test run.
RunConfig small_diag_config() {
  ordered_json j = {
      {"params", {{"m", 1.0}, {"h", 3.0}, {"gamma", 0.3}, {"lambda", 1.0}}},
      {"grid", {{"nx", 48}, {"ny", 64}, {"y_max", 3.3}}},
      {"diagnostics",
       {{"weiss", {{"enabled", true}, {"angular", 64}, {"radial", 16}}},
        {"blowup", {{"enabled", true}}},
        {"contact", {{"enabled", true}, {"depth", 8}}},
        {"bernoulli", {{"enabled", true}}},
        {"probe", {{"enabled", true}, {"k", 0.5}, {"samples", 50}}}}},
      {"deterministic", true},
  };
  return parse_run_config(j);
}

std::string config_field(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.field;
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing resolves defaults and points at bad fields") {
  ordered_json base = {{"params", {{"m", 1.0}, {"h", 3.0}, {"gamma", 0.3}, {"lambda", 1.0}}}};

  SECTION("defaults") {
    const RunConfig c = parse_run_config(base);
    CHECK(c.grid.nx == 128);
    CHECK(c.grid.y_max == 3.5);
    // ny picked so that dy is close to dx = lambda/nx
    CHECK(c.grid.ny == 448);
    CHECK(c.smoothing.eps_start == 0.2);
    CHECK(c.starts.empty());
    CHECK_FALSE(c.diagnostics.weiss.enabled);
    CHECK_FALSE(c.deterministic);
    CHECK(c.seed == 20240817u);
    CHECK(c.output_dir == "out");
  }

  SECTION("field-pointing errors") {
    auto with = [&](const char* ptr, ordered_json v) {
      ordered_json j = base;
      j[ptr] = std::move(v);
      return j;
    };
    ordered_json bad_gamma = base;
    bad_gamma["params"]["gamma"] = -0.25;
    CHECK(config_field([&] { parse_run_config(bad_gamma); }) == "params.gamma");

    CHECK(config_field([&] { parse_run_config(ordered_json::object()); }) == "params");

    ordered_json unknown = base;
    unknown["grdi"] = 3;
    CHECK(config_field([&] { parse_run_config(unknown); }) == "grdi");

    ordered_json nested_unknown = base;
    nested_unknown["diagnostics"] = {{"weiss", {{"enable", true}}}};
    CHECK(config_field([&] { parse_run_config(nested_unknown); }) ==
          "diagnostics.weiss.enable");

    CHECK(config_field([&] { parse_run_config(with("starts", {"warp"})); }) == "starts");
    CHECK(config_field([&] { parse_run_config(with("seed", -4)); }) == "seed");
    CHECK(config_field([&] { parse_run_config(with("schema_version", 99)); }) ==
          "schema_version");

    ordered_json shallow = base;
    shallow["grid"] = {{"y_max", 2.0}};  // below h
    CHECK(config_field([&] { parse_run_config(shallow); }) == "grid.y_max");

    ordered_json bad_radii = base;
    bad_radii["diagnostics"] = {{"weiss", {{"enabled", true}, {"radii", "all"}}}};
    CHECK(config_field([&] { parse_run_config(bad_radii); }) == "diagnostics.weiss.radii");
  }

  SECTION("explicit values survive") {
    ordered_json j = base;
    j["grid"] = {{"nx", 64}, {"ny", 80}, {"y_max", 3.25}};
    j["starts"] = {"bump", "flat_gamma"};
    j["deterministic"] = true;
    j["seed"] = 7;
    const RunConfig c = parse_run_config(j);
    CHECK(c.grid.ny == 80);
    CHECK(c.starts == std::vector<std::string>{"bump", "flat_gamma"});
    CHECK(c.deterministic);
    CHECK(c.seed == 7u);
  }
}

TEST_CASE("field artifact round-trips bit-exactly") {
  const ProblemParams p{1.0, 3.0, 0.5, 2.0};
  const Grid g = build_grid(p, 32, 40, 3.2);
  Field f = sample(g, p.m, p.gamma, [&](double x, double y) {
    return std::max(0.0, p.m * (1.0 - y / p.gamma) + 0.01 * std::sin(3.0 * x + y));
  });
  const fs::path dir = fresh_dir("field_io");
  write_field_artifact(dir, "field", f, p, 0.015625);

  const FieldArtifact back = read_field_artifact(dir, "field");
  CHECK(back.params.m == p.m);
  CHECK(back.params.lambda == p.lambda);
  CHECK(back.eps_final == 0.015625);
  REQUIRE(back.field.values.size() == f.values.size());
  CHECK(back.field.values == f.values);
  CHECK(back.field.grid.nx == 32);

  SECTION("payload corruption is detected") {
    auto bytes = detail::read_bytes(dir / "field.bin");
    bytes[17] ^= 0x40;
    detail::write_bytes(dir / "field.bin", bytes);
    CHECK_THROWS_AS(read_field_artifact(dir, "field"), ConfigError);
  }
}

TEST_CASE("fbcurve csv round-trips the extracted graph") {
  const ProblemParams p{1.0, 3.0, 1.0, 1.0};
  const Grid g = build_grid(p, 64, 48, 3.1);
  Field f = sample(g, p.m, p.gamma, [&](double x, double y) {
    const double gy = -0.3 + 0.05 * std::sin(2.0 * y);
    return std::max(0.0, 1.2 * (gy - x)) * (y < 2.0 ? 1.0 : 0.0);
  });
  const FBCurve c = extract_graph(f, 1e-3);
  REQUIRE(c.n_defined() > 10);

  const std::string csv = fbcurve_csv(c);
  CHECK(csv.rfind("# schema_version=1\ny,g,flag\n", 0) == 0);
  const FBCurve back = detail::parse_fbcurve_csv(csv);
  REQUIRE(back.ys.size() == c.ys.size());
  for (std::size_t k = 0; k < c.ys.size(); ++k) {
    CHECK(back.ys[k] == c.ys[k]);
    CHECK(back.flags[k] == c.flags[k]);
    if (c.flags[k] == RowFlag::Defined) CHECK(back.gs[k] == c.gs[k]);
  }
}

TEST_CASE("regimes-only run writes the closed-form report") {
  ordered_json j = {{"params", {{"m", 1.0}, {"h", 2.2}, {"gamma", 0.7}, {"lambda", 1.0}}}};
  const RunConfig c = parse_run_config(j);
  const fs::path dir = fresh_dir("regimes_only");
  REQUIRE(run_pipeline(c, dir, RunMode::RegimesOnly, 1) == 0);

  CHECK(fs::exists(dir / "regime.json"));
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK_FALSE(fs::exists(dir / "field.bin"));
  CHECK_FALSE(fs::exists(dir / "solution.json"));

  const ordered_json rj = parse_file(dir / "regime.json");
  const RegimeReport rep = classify_gamma(c.params);
  CHECK(rj.at("h_sharp").get<double>() == rep.h_sharp);
  CHECK(rj.at("h_star").get<double>() == rep.h_star);
  REQUIRE(rep.t_h);
  CHECK(rj.at("t_h").get<double>() == *rep.t_h);
  REQUIRE(rep.tau_h);
  CHECK(rj.at("tau_h").get<double>() == *rep.tau_h);
  CHECK(rj.at("gamma_class").get<std::string>() == to_string(rep.gamma_class));

  const ordered_json man = parse_file(dir / "manifest.json");
  CHECK(man.at("kind") == "manifest");
  CHECK(man.at("mode") == "regimes");
  CHECK_FALSE(man.at("config").contains("output_dir"));
  // the echoed config parses back to the same effective run
  const RunConfig echo = parse_run_config(man.at("config"));
  CHECK(run_config_to_json(echo) == man.at("config"));
}

TEST_CASE("diagnose pipeline writes every toggled artifact") {
  // one shared run; sections below only read its artifacts
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("diag_full");
    REQUIRE(run_pipeline(small_diag_config(), d, RunMode::Diagnose, 1) == 0);
    return d;
  }();

  for (const char* name :
       {"manifest.json", "regime.json", "field.bin", "field.json", "solution.json",
        "fbcurve.csv", "weiss.csv", "blowup.bin", "blowup.json", "classification.json",
        "contact.json", "bernoulli.json", "probe.json"}) {
    INFO(name);
    CHECK(fs::exists(dir / name));
  }

  const ordered_json sol = parse_file(dir / "solution.json");
  CHECK(sol.at("schema_version") == kSchemaVersion);
  CHECK(sol.at("energy").is_number());
  CHECK(sol.at("converged").is_boolean());
  CHECK(sol.at("fbcurve").at("n_defined").get<int>() > 0);

  const ordered_json cls = parse_file(dir / "classification.json");
  const std::string label = cls.at("label").get<std::string>();
  CHECK((label == "zero" || label == "half_plane" || label == "other"));
  CHECK(cls.at("distance_halfplane").is_number());

  for (const char* name : {"contact.json", "bernoulli.json", "probe.json"}) {
    const ordered_json d = parse_file(dir / name);
    INFO(name);
    CHECK(d.at("defined").is_boolean());
  }

  const ordered_json man = parse_file(dir / "manifest.json");
  CHECK(man.at("mode") == "diagnose");
  CHECK(man.at("runtime").is_null());  // deterministic run carries no timings
  const auto& radii = man.at("config").at("diagnostics").at("weiss").at("radii");
  REQUIRE(radii.is_array());  // auto-chosen radii are pinned into the echo
  CHECK(radii.size() == 4);

  SECTION("solution artifact matches the recorded sha and grid") {
    const FieldArtifact fa = read_field_artifact(dir, "field");
    CHECK(fa.field.grid.nx == 48);
    CHECK(fa.params.h == 3.0);
  }

  SECTION("manifest replay reproduces the same config") {
    const fs::path man_path = dir / "manifest.json";
    const RunConfig replay = load_run_config(man_path);
    CHECK(run_config_to_json(replay) == man.at("config"));
  }

  SECTION("self-comparison reports zero deltas") {
    const ordered_json rep = compare_runs(dir, dir);
    CHECK(rep.at("energy_delta").get<double>() == 0.0);
    CHECK(rep.at("fbcurve_sup_distance").get<double>() == 0.0);
    REQUIRE(rep.at("weiss_phi_deltas").is_array());
    CHECK(rep.at("weiss_phi_deltas").size() == 4);
    for (const auto& d : rep.at("weiss_phi_deltas"))
      CHECK(d.at("phi_delta").get<double>() == 0.0);
  }

  SECTION("comparison refuses mismatched parameters") {
    ordered_json j2 = {{"params", {{"m", 1.0}, {"h", 2.9}, {"gamma", 0.3}, {"lambda", 1.0}}},
                       {"grid", {{"nx", 16}, {"ny", 24}, {"y_max", 3.2}}}};
    const fs::path dir2 = fresh_dir("diag_other_params");
    REQUIRE(run_pipeline(parse_run_config(j2), dir2, RunMode::Solve, 1) == 0);
    CHECK(config_field([&] { compare_runs(dir, dir2); }) == "run_b");
  }

  SECTION("comparison requires completed runs") {
    const fs::path empty = fresh_dir("diag_empty");
    CHECK(config_field([&] { compare_runs(empty, dir); }) == "run_a");
    CHECK(config_field([&] { compare_runs(dir, empty); }) == "run_b");
  }
}

TEST_CASE("deterministic runs are byte-identical across thread counts") {
  RunConfig c = small_diag_config();
  REQUIRE(c.deterministic);

  const fs::path dir1 = fresh_dir("det_t1");
  ThreadPool::instance().set_threads(1);
  REQUIRE(run_pipeline(c, dir1, RunMode::Diagnose, 1) == 0);

  const fs::path dir3 = fresh_dir("det_t3");
  ThreadPool::instance().set_threads(3);
  REQUIRE(run_pipeline(c, dir3, RunMode::Diagnose, 3) == 0);
  ThreadPool::instance().set_threads(1);

  for (const char* name :
       {"manifest.json", "regime.json", "field.bin", "field.json", "solution.json",
        "fbcurve.csv", "weiss.csv", "blowup.bin", "blowup.json", "classification.json",
        "contact.json", "bernoulli.json", "probe.json"}) {
    INFO(name);
    CHECK(same_bytes(dir1 / name, dir3 / name));
  }
}

TEST_CASE("cli binary maps errors to exit codes") {
  const fs::path dir = fresh_dir("cli_codes");
  const std::string bin = FBSTRIP_BIN;

  SECTION("corrupt config exits 2 and names the field") {
    const fs::path cfg = dir / "bad.json";
    detail::write_text(cfg,
                       R"({"params": {"m": 1.0, "h": 3.0, "gamma": -0.25, "lambda": 1.0}})");
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = bin + " solve --config " + cfg.string() + " --out " +
                            (dir / "run").string() + " 2>" + err.string();
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    CHECK(WEXITSTATUS(rc) == 2);
    const std::string msg = detail::read_text_file(err);
    CHECK(msg.find("params.gamma") != std::string::npos);
  }

  SECTION("regimes subcommand succeeds") {
    const fs::path cfg = dir / "ok.json";
    detail::write_text(cfg,
                       R"({"params": {"m": 1.0, "h": 2.2, "gamma": 0.7, "lambda": 1.0}})");
    const std::string cmd = bin + " regimes --config " + cfg.string() + " --out " +
                            (dir / "run2").string() + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    CHECK(WEXITSTATUS(rc) == 0);
    CHECK(fs::exists(dir / "run2" / "regime.json"));
  }

  SECTION("missing run directories exit 2 on compare") {
    const std::string cmd =
        bin + " compare " + (dir / "nope_a").string() + " " + (dir / "nope_b").string() +
        " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    CHECK(WEXITSTATUS(rc) == 2);
  }
}
