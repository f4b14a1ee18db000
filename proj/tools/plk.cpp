#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "plk/error.hpp"
#include "plk/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kInfeasible = 3;
constexpr int kDivergence = 4;

struct Args {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Args& args) {
  cmd->add_option("--config", args.config, "scenario JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "master seed")->required();
  cmd->add_option("--out", args.out, "output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proactive lane-keeping: prior estimation, controller design, closed-loop simulation"};
  app.require_subcommand(1);
  Args args;
  const std::pair<const char*, plk::harness::Verb> verbs[] = {
      {"estimate", plk::harness::Verb::kEstimate},
      {"design", plk::harness::Verb::kDesign},
      {"simulate", plk::harness::Verb::kSimulate},
      {"sweep", plk::harness::Verb::kSweep},
      {"all", plk::harness::Verb::kAll},
  };
  const char* help[] = {
      "run the map filter under sparse and full arrivals",
      "design every configured area and report the speed program",
      "closed-loop runs with on-board fusion",
      "maximum speed against nominal stiffness",
      "estimate, simulate and sweep",
  };
  std::vector<CLI::App*> cmds;
  for (std::size_t i = 0; i < std::size(verbs); ++i) {
    cmds.push_back(app.add_subcommand(verbs[i].first, help[i]));
    add_common(cmds.back(), args);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  plk::harness::Verb verb = plk::harness::Verb::kAll;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    if (cmds[i]->parsed()) verb = verbs[i].second;
  }

  try {
    const auto cfg = plk::harness::load_config(args.config);
    const int rc = plk::harness::run_verb(verb, cfg, args.seed, args.out);
    if (rc == kInfeasible) std::cerr << "infeasible design; see summary.json\n";
    if (rc == kDivergence) std::cerr << "closed loop diverged; see summary.json\n";
    return rc;
  } catch (const plk::ConfigError& e) {
    std::cerr << "config error at " << e.what() << '\n';
    return kConfigError;
  } catch (const plk::Infeasible& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const plk::Divergence& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const plk::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
