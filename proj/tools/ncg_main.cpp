#include <iostream>

#include <CLI11.hpp>

#include "ncg/experiment.hpp"
#include "ncg/libsvm.hpp"

namespace {

int solve(const ncg::ExperimentSpec& spec) {
  const auto result = ncg::run_experiment(spec);
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const auto& run = result.runs[r];
    std::cout << result.csv_files[r].string() << ": " << ncg::to_string(run.termination) << ", "
              << run.iterations() << " iterations, f = " << run.f_final << ", props = "
              << run.records.back().ledger.props() << '\n';
    if (!run.violation.empty()) std::cerr << "contract violation: " << run.violation << '\n';
  }
  std::cout << result.aggregate_file.string() << '\n';
  return result.contract_violation ? 2 : 0;
}

// Reads a flat key = value file and scopes every key to the solve subcommand.
class SolveConfig : public CLI::ConfigINI {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    for (auto& item : items)
      if (item.parents.empty()) item.parents = {"solve"};
    return items;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inexact Newton-CG solver and experiment harness"};
  app.require_subcommand(1);

  ncg::ExperimentSpec spec;
  std::string problem = "nls-sigmoid";
  std::string variant = "full";
  std::string data;
  std::string out = spec.out.string();
  double eps_h = 0.0;

  app.config_formatter(std::make_shared<SolveConfig>());
  app.set_config("--config", "", "Flat key = value file for solve; command-line flags take precedence");
  auto* cmd = app.add_subcommand("solve", "Run one experiment and write per-repeat CSVs plus an aggregate JSON");
  cmd->fallthrough();
  cmd->add_option("--problem", problem, "nls-sigmoid | nls-tanh | nls-welsch | quadratic | saddle")
      ->check(CLI::IsMember({"nls-sigmoid", "nls-tanh", "nls-welsch", "quadratic", "saddle"}))
      ->capture_default_str();
  cmd->add_option("--data", data, "LIBSVM file (NLS problems); a synthetic instance is used when omitted");
  cmd->add_option("--variant", variant, "full | subh | inexact-full-eval | inexact-fixed | inexact-sub-eval")
      ->check(CLI::IsMember({"full", "subh", "inexact-full-eval", "inexact-fixed", "inexact-sub-eval"}))
      ->capture_default_str();
  cmd->add_option("--eps", spec.eps, "Gradient tolerance eps_g")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--seed", spec.seed, "Seed of the first repeat")->capture_default_str();
  cmd->add_option("--repeats", spec.repeats, "Number of repeats")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_flag("--audit", spec.audit, "Record exact gradient norms and check per-step guarantees");
  cmd->add_flag("--skip-small-step-block,!--no-skip-small-step-block", spec.skip_small_step_block,
                "Omit the small-step eigen-oracle check of the line-search driver (on by default)")
      ->capture_default_str();
  cmd->add_option("--out", out, "Output directory")->capture_default_str();
  cmd->add_option("--dim", spec.dim, "Dimension of synthetic instances")->capture_default_str();
  cmd->add_option("--rows", spec.rows, "Rows of a synthetic NLS instance")->capture_default_str();
  cmd->add_option("--data-seed", spec.data_seed, "Seed for synthetic instances")->capture_default_str();
  cmd->add_option("--welsch-alpha", spec.welsch_alpha, "Welsch alpha")->check(CLI::PositiveNumber)->capture_default_str();
  auto* eps_h_opt = cmd->add_option("--eps-h", eps_h, "Curvature tolerance eps_H (default: sqrt(L_H eps), or sqrt(eps) when L_H = 0)");
  cmd->add_option("--eta", spec.eta, "Sufficient-decrease constant")->capture_default_str();
  cmd->add_option("--theta", spec.theta, "Backtracking factor")->capture_default_str();
  cmd->add_option("--zeta", spec.zeta, "Capped CG accuracy")->capture_default_str();
  cmd->add_option("--delta", spec.delta, "MEO failure probability")->capture_default_str();
  cmd->add_option("--max-iters", spec.max_iters, "Outer iteration cap")->capture_default_str();
  cmd->add_option("--bins", spec.bins, "Props bins in the aggregate")->check(CLI::PositiveNumber)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    spec.problem = ncg::parse_problem_kind(problem);
    spec.variant = ncg::parse_preset(variant);
    spec.data = data;
    spec.out = out;
    if (eps_h_opt->count() > 0) spec.eps_H = eps_h;
    return solve(spec);
  } catch (const ncg::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const ncg::ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
