// lowmode-cli: runs one experiment and writes <out>/<experiment>.csv, its .meta.json sidecar
// and an SVG plot. Exit status is 0 on success, 10 + error category otherwise.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "lowmode/experiments.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  bool paper_scale = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
};

lowmode::RunConfig resolve(const std::string& experiment, const Options& o) {
  lowmode::RunConfig cfg = o.config_path.empty() ? lowmode::default_config(experiment, o.paper_scale)
                                                 : lowmode::load_config(o.config_path, experiment, o.paper_scale);
  if (cfg.experiment != experiment)
    lowmode::detail::fail(lowmode::ErrorCategory::invalid_argument,
                          "config names experiment '" + cfg.experiment + "' but subcommand is '" + experiment + "'");
  if (o.seed_set) cfg.seed = o.seed;
  cfg.threads = o.threads;
  if (const char* env = std::getenv("LOWMODE_OUT_DIR"); env && *env) cfg.out_dir = env;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;  // explicit flag wins over the environment
  return cfg;
}

void write_outputs(const lowmode::ResultTable& t, const lowmode::RunConfig& cfg, const std::string& stem) {
  const std::filesystem::path dir(cfg.out_dir);
  const std::string csv = (dir / (stem + ".csv")).string();
  lowmode::emit_csv(t, csv);
  std::cout << "wrote " << csv << " (" << t.size() << " rows, config " << t.provenance().config_hash << ")\n";
  for (const auto& [name, spec] : lowmode::experiment_plots(cfg)) {
    const std::string svg = (dir / (name + ".svg")).string();
    lowmode::emit_plot(t, spec, svg);
    std::cout << "wrote " << svg << "\n";
  }
}

void print_table(const lowmode::ResultTable& t) {
  std::cout << lowmode::to_csv(t);
  std::cout.flush();
}

int run(const std::string& experiment, const Options& o) {
  lowmode::RunConfig cfg;
  try {
    cfg = resolve(experiment, o);
    if (cfg.threads > 1) std::cerr << "note: --threads " << cfg.threads << " recorded; solvers run serially\n";
    const lowmode::ResultTable t = lowmode::run_experiment(cfg);
    print_table(t);
    write_outputs(t, cfg, experiment);
    return 0;
  } catch (const lowmode::ExperimentFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    try {
      print_table(e.partial());
      write_outputs(e.partial(), cfg, experiment + ".partial");
    } catch (const lowmode::Error& w) {
      std::cerr << "error: " << w.what() << "\n";
    }
    return lowmode::exit_code(e.category());
  } catch (const lowmode::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lowmode::exit_code(e.category());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-mode spectral reduction experiments"};
  app.set_version_flag("--version", LOWMODE_VERSION);
  app.require_subcommand(1);

  Options opt;
  std::string selected;
  for (const std::string& id : lowmode::experiment_ids()) {
    CLI::App* sub = app.add_subcommand(id, "run the " + id + " experiment");
    sub->add_option("--config", opt.config_path, "key = value run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory (overrides LOWMODE_OUT_DIR)");
    sub->add_flag("--paper-scale", opt.paper_scale, "use the full grid sizes");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&opt](const std::uint64_t& s) { opt.seed = s, opt.seed_set = true; }, "random seed");
    sub->add_option("--threads", opt.threads, "thread count (recorded; execution is serial)")->check(CLI::PositiveNumber);
    sub->callback([&selected, id] { selected = id; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : lowmode::exit_code(lowmode::ErrorCategory::invalid_argument);
  }
  return run(selected, opt);
}
