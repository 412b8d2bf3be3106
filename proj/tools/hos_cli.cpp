// Command-line experiment runner for the horde of shapings.
//
//   hos run --config <file> --out <dir> [--seed N] [--workers K]
//   hos compare --in <dir> --a <policy> --b <policy>
//   hos curves --in <dir> --policies <p1,p2,...>
//   hos tune --config <file> [--seed N] [--workers K]
//
// Errors are reported as one JSON line on stderr and a nonzero exit code.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hos/experiment.hpp"

namespace {

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Horde of shapings: off-policy ensembles of reward-shaped learners"};
  app.require_subcommand(1);

  std::string config_path, out_dir, in_dir, policy_a, policy_b, policies;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;

  auto* run = app.add_subcommand("run", "Run an experiment and write CSV outputs");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--workers", workers, "Parallel runs");

  auto* compare = app.add_subcommand("compare", "Welch test on per-run summed returns of two policies");
  compare->add_option("--in", in_dir, "Directory written by `run`")->required();
  compare->add_option("--a", policy_a, "First policy")->required();
  compare->add_option("--b", policy_b, "Second policy")->required();

  auto* curves = app.add_subcommand("curves", "Emit gnuplot-ready mean/stderr learning curves");
  curves->add_option("--in", in_dir, "Directory written by `run`")->required();
  curves->add_option("--policies", policies, "Comma-separated policy names")->required();

  auto* tune = app.add_subcommand("tune", "Grid-search the best scale of every potential in a config");
  tune->add_option("--config", config_path, "Experiment config (JSON)")->required();
  tune->add_option("--seed", seed, "Override the master seed");
  tune->add_option("--workers", workers, "Parallel runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*run || *tune) {
      auto cfg = hos::load_config(config_path);
      if (seed) cfg.seed = *seed;
      if (workers) cfg.workers = *workers;
      const auto result = hos::run_experiment(cfg);
      if (*run) {
        hos::emit_outputs(result, out_dir);
        std::cout << "wrote " << result.curves.size() << " learning curves to " << out_dir << '\n';
      } else {
        nlohmann::json best = nlohmann::json::object();
        for (const auto& [kind, scale] : hos::best_scales(result)) best[std::string(hos::to_string(kind))] = scale;
        std::cout << best.dump() << '\n';
      }
    } else if (*compare) {
      const auto all = hos::read_curves(in_dir);
      const auto rep = hos::compare_policies(all, policy_a, policy_b);
      std::cout << "policy_a,policy_b,mean_a,mean_b,t,df,p\n"
                << rep.policy_a << ',' << rep.policy_b << ',' << hos::format_number(rep.mean_a) << ','
                << hos::format_number(rep.mean_b) << ',' << hos::format_number(rep.test.t) << ','
                << hos::format_number(rep.test.df) << ',' << hos::format_number(rep.test.p) << '\n';
    } else if (*curves) {
      const auto all = hos::read_curves(in_dir);
      std::cout << hos::plot_data(all, split_list(policies));
    }
  } catch (const hos::config_error& e) {
    return fail("config", e.what(), 3);
  } catch (const hos::invalid_input& e) {
    return fail("input", e.what(), 4);
  } catch (const hos::numerical_error& e) {
    return fail("numerical", e.what(), 5);
  } catch (const std::exception& e) {
    return fail("io", e.what(), 6);
  }
  return 0;
}
