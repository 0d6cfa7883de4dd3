#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hetbench/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hetbench: personalized federated learning benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::string scheme, partition, out;
  std::vector<std::string> seeds;
  auto* run = app.add_subcommand("run", "run an experiment grid and write results.csv, summary.json, efficiency.csv");
  run->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  run->add_option("--scheme", scheme, "scheme or comma list (pfedgraph, pfedsv, pfedjs, fedcollab, race, ce, fedavg, all)");
  run->add_option("--partition", partition, "iid, c<k>, dir<e>, gau<s>, qdir<e>, dir<e>+gau<s>, qdir<e>+gau<s>");
  run->add_option("--seed", seeds, "one or more seeds");
  run->add_option("--out", out, "output directory");

  std::vector<std::string> report_dirs;
  auto* report = app.add_subcommand("report", "markdown comparison table from several result directories");
  report->add_option("--in", report_dirs, "result directories (one per partition)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      std::vector<std::pair<std::string, std::string>> overrides;
      if (!scheme.empty()) overrides.emplace_back("scheme", scheme);
      if (!partition.empty()) overrides.emplace_back("partition", partition);
      if (!seeds.empty()) overrides.emplace_back("seeds", join(seeds));
      if (!out.empty()) overrides.emplace_back("out", out);
      const auto cfg = hetbench::parse_config(
          config_path.empty() ? std::nullopt : std::optional<std::string>(config_path), overrides);
      hetbench::run_experiment(cfg, &std::cerr);
      std::cerr << "wrote " << cfg.out << "/results.csv, summary.json, efficiency.csv\n";
    } else {
      std::cout << hetbench::compare_report(report_dirs);
    }
  } catch (const hetbench::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == hetbench::ErrorKind::ConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
