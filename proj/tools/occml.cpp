#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "occml/pipeline.hpp"

namespace {

using occml::models::ModelKind;
namespace pl = occml::pipeline;

struct CommonOptions {
  std::string config;
  std::vector<std::string> models;
  bool fast = false;
  bool full = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_models) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  if (with_models) {
    cmd->add_option("--model", o.models, "Model kind(s); repeat or comma-separate, or 'all'")->delimiter(',');
  }
  auto* fast = cmd->add_flag("--fast", o.fast, "Use the fast grid profile");
  auto* full = cmd->add_flag("--full", o.full, "Use the full grid profile");
  fast->excludes(full);
  cmd->add_option("--seed", o.seed, "Override the config seed");
  cmd->add_option("--out", o.out, "Override the output directory");
}

pl::RunConfig resolve(const CommonOptions& o) {
  auto config = pl::load_config(o.config);
  if (o.fast) config.profile = occml::tuning::GridProfile::kFast;
  if (o.full) config.profile = occml::tuning::GridProfile::kFull;
  if (o.seed) config.seed = *o.seed;
  if (o.out) config.output_dir = *o.out;
  return config;
}

std::vector<ModelKind> selected_kinds(const CommonOptions& o, const pl::RunConfig& config) {
  if (o.models.empty()) return config.models;
  std::vector<ModelKind> kinds;
  for (const auto& name : o.models) {
    if (name == "all") return occml::models::all_kinds();
    kinds.push_back(occml::models::parse_kind(name));
  }
  return kinds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Room-occupancy classification pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(OCCML_VERSION));

  CommonOptions eda_o, tune_o, eval_o, explain_o, report_o;
  bool tune_on_demand = false;
  std::optional<std::size_t> samples;
  std::optional<int> pairs;
  bool exact = false;

  auto* eda = app.add_subcommand("eda", "Summary statistics, autocorrelation, correlation, OLS and series export");
  add_common(eda, eda_o, false);
  auto* tune = app.add_subcommand("tune", "Grid search with stratified k-fold cross-validation");
  add_common(tune, tune_o, true);
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate tuned models on the held-out split");
  add_common(evaluate, eval_o, true);
  evaluate->add_flag("--tune-on-demand", tune_on_demand, "Tune models that have no current tuning artifact");
  auto* explain = app.add_subcommand("explain", "SHAP attributions for tuned models");
  add_common(explain, explain_o, true);
  explain->add_option("--samples", samples, "Number of test rows to explain");
  explain->add_option("--pairs", pairs, "Antithetic permutation pairs per row (sampled mode)");
  explain->add_flag("--exact", exact, "Enumerate all feature subsets instead of sampling");
  auto* report = app.add_subcommand("report", "Join result tables into report.md");
  add_common(report, report_o, false);
  auto* grids = app.add_subcommand("grids", "Print the built-in grid profiles as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pl::exit_code::kInput;
  }

  const pl::Console console{std::cout, std::cerr};
  try {
    if (*grids) {
      std::cout << pl::default_grids_json().dump(2) << '\n';
      return 0;
    }
    if (*eda) return pl::cmd_eda(resolve(eda_o), console);
    if (*tune) {
      const auto config = resolve(tune_o);
      return pl::cmd_tune(config, selected_kinds(tune_o, config), console);
    }
    if (*evaluate) {
      const auto config = resolve(eval_o);
      return pl::cmd_evaluate(config, selected_kinds(eval_o, config), tune_on_demand, console);
    }
    if (*explain) {
      const auto config = resolve(explain_o);
      pl::ExplainRequest request;
      request.n_samples = samples;
      request.pairs = pairs;
      request.method = exact ? occml::explain::Method::kExact : occml::explain::Method::kSampled;
      auto kinds = explain_o.models.empty() ? std::vector<ModelKind>{ModelKind::kRandomForest}
                                            : selected_kinds(explain_o, config);
      return pl::cmd_explain(config, kinds, request, console);
    }
    if (*report) return pl::cmd_report(resolve(report_o), console);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pl::exit_code::kInput;
  }
  return pl::exit_code::kInput;
}
