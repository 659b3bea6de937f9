#include <eiv/bench/config.hpp>
#include <eiv/bench/experiments.hpp>
#include <eiv/bench/logging.hpp>

#include "acceptance.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace {

enum Exit { kOk = 0, kFailed = 1, kConfig = 2, kNumerical = 3, kIo = 4 };

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<long> jobs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "INI experiment configuration");
  cmd->add_option("--set", c.sets, "Override section.key=value (repeatable)")->take_all();
  cmd->add_option("--jobs", c.jobs, "Worker threads");
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--out", c.out, "Output directory");
}

eiv::bench::ExperimentConfig resolve(const Common& c) {
  std::vector<std::string> overrides = c.sets;
  if (c.jobs) overrides.push_back("run.jobs=" + std::to_string(*c.jobs));
  if (c.seed) overrides.push_back("run.seed=" + std::to_string(*c.seed));
  if (c.out) overrides.push_back("run.out=" + *c.out);
  return eiv::bench::load_config(c.config, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  eiv::bench::init_logging();
  CLI::App app{"Errors-in-variables low-rank matrix regression: simulation, fitting, "
               "benchmarks and acceptance checks"};
  app.require_subcommand(1);

  Common sim, fit, bench, audit;
  std::string data_dir;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a synthetic dataset directory");
  add_common(sim_cmd, sim);
  auto* fit_cmd = app.add_subcommand("fit", "Fit one dataset directory");
  add_common(fit_cmd, fit);
  fit_cmd->add_option("--data", data_dir, "Dataset directory written by simulate")->required();
  auto* bench_cmd = app.add_subcommand("bench", "Corrected vs naive sweep over N and replications");
  add_common(bench_cmd, bench);
  auto* audit_cmd = app.add_subcommand("audit", "Sampled RSC/RSM audit and gradient scaling");
  add_common(audit_cmd, audit);

  auto* accept_cmd = app.add_subcommand("accept", "Run the acceptance criteria");
  eiv::acceptance::Options accept_opts;
  accept_cmd->add_option("--seed", accept_opts.seed, "Master seed");
  accept_cmd->add_option("--jobs", accept_opts.jobs, "Worker threads");
  accept_cmd->add_option("--only", accept_opts.only, "Criteria to run, e.g. P1 P6")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sim_cmd) {
      const auto cfg = resolve(sim);
      eiv::bench::run_simulate(cfg, cfg.out);
      spdlog::info("dataset written to {}", cfg.out);
    } else if (*fit_cmd) {
      const auto cfg = resolve(fit);
      const auto result = eiv::bench::run_fit(cfg, data_dir, cfg.out);
      std::printf("%s\n", eiv::bench::to_json(result.record, cfg.timing).dump(2).c_str());
    } else if (*bench_cmd) {
      const auto cfg = resolve(bench);
      const auto records = eiv::bench::run_bench(cfg, cfg.out);
      long failures = 0;
      for (const auto& r : records) failures += r.status != "ok";
      spdlog::info("{} fits written to {}/results.csv ({} failed)", records.size(), cfg.out,
                   failures);
    } else if (*audit_cmd) {
      const auto cfg = resolve(audit);
      const auto summary = eiv::bench::run_audit(cfg, cfg.out);
      std::printf("checks %ld violations %ld\n", summary.total_trials, summary.total_violations);
      for (std::size_t k = 0; k < summary.n_values.size(); ++k) {
        std::printf("n %ld median_grad_opnorm %.6g median_ratio_to_rate %.6g\n",
                    summary.n_values[k], summary.median_opnorm[k], summary.median_ratio[k]);
      }
      for (std::size_t k = 0; k < summary.step_ratio.size(); ++k) {
        std::printf("grad_opnorm ratio n=%ld -> n=%ld: %.4f\n", summary.n_values[k],
                    summary.n_values[k + 1], summary.step_ratio[k]);
      }
    } else if (*accept_cmd) {
      bool all = true;
      eiv::acceptance::run_all(accept_opts, [&](const eiv::acceptance::CriterionResult& r) {
        all = all && r.passed;
        std::printf("%s\n", eiv::acceptance::format_line(r).c_str());
        std::fflush(stdout);
      });
      return all ? kOk : kFailed;
    }
  } catch (const eiv::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfig;
  } catch (const eiv::InputError& e) {
    spdlog::error("input error: {}", e.what());
    return kConfig;
  } catch (const eiv::NumericalError& e) {
    spdlog::error("numerical error: {}", e.what());
    return kNumerical;
  } catch (const eiv::IoError& e) {
    spdlog::error("I/O error: {}", e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("I/O error: {}", e.what());
    return kIo;
  }
  return kOk;
}
