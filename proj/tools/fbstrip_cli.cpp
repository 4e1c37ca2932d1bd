// Command-line driver: regimes / solve / diagnose / compare.
//
// Exit codes: 0 success (including honest non-convergence), 2 configuration
// or artifact errors (message names the offending field), 1 anything else.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "fbstrip/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  bool deterministic = false;
  int threads = 0;  // 0: unset
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "run configuration (JSON, or a manifest.json)")
      ->required();
  cmd->add_option("--out", f.out_dir, "output directory (default: config output_dir)");
  cmd->add_flag("--deterministic", f.deterministic,
                "force deterministic mode (no wall-clock data in the manifest)");
  cmd->add_option("--threads", f.threads, "worker thread count (fallback: FB_THREADS)");
}

int pick_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("FB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 4096)
      throw fbstrip::ConfigError("FB_THREADS", "must be an integer in [1, 4096]");
    return (int)v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? (int)hw : 1;
}

int run_command(const CommonFlags& flags, fbstrip::RunMode mode) {
  fbstrip::RunConfig cfg = fbstrip::load_run_config(flags.config_path);
  if (flags.deterministic) cfg.deterministic = true;
  const int threads = pick_threads(flags.threads);
  fbstrip::ThreadPool::instance().set_threads(threads);
  const std::string out = flags.out_dir.empty() ? cfg.output_dir : flags.out_dir;
  if (out.empty()) throw fbstrip::ConfigError("output_dir", "must not be empty");
  const int rc = fbstrip::run_pipeline(cfg, out, mode, threads);
  std::cout << "wrote " << out << "/manifest.json\n";
  return rc;
}

int error_exit(const std::exception& e, const std::string& field, int code) {
  fbstrip::ordered_json err;
  err["error"] = {{"field", field.empty() ? fbstrip::ordered_json(nullptr)
                                          : fbstrip::ordered_json(field)},
                  {"message", e.what()}};
  std::cerr << err.dump(2) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"periodic-strip Bernoulli free-boundary toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  CLI::App* regimes = app.add_subcommand("regimes", "closed-form regime map only");
  add_common(regimes, flags);
  CLI::App* solve = app.add_subcommand("solve", "regime map + multistart minimization");
  add_common(solve, flags);
  CLI::App* diagnose =
      app.add_subcommand("diagnose", "solve + every diagnostic enabled in the config");
  add_common(diagnose, flags);

  std::string dir_a, dir_b;
  CLI::App* compare = app.add_subcommand("compare", "diff two completed run directories");
  compare->add_option("run_a", dir_a, "first run directory")->required();
  compare->add_option("run_b", dir_b, "second run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (regimes->parsed()) return run_command(flags, fbstrip::RunMode::RegimesOnly);
    if (solve->parsed()) return run_command(flags, fbstrip::RunMode::Solve);
    if (diagnose->parsed()) return run_command(flags, fbstrip::RunMode::Diagnose);
    if (compare->parsed()) {
      const fbstrip::ordered_json rep = fbstrip::compare_runs(dir_a, dir_b);
      std::cout << rep.dump(2) << "\n";
      return 0;
    }
  } catch (const fbstrip::ConfigError& e) {
    return error_exit(e, e.field, 2);
  } catch (const std::exception& e) {
    return error_exit(e, "", 1);
  }
  return 1;
}
