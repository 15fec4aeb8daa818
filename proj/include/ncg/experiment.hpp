#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncg/problems.hpp"
#include "ncg/solver.hpp"

namespace ncg {

enum class ProblemKind { NlsSigmoid, NlsTanh, NlsWelsch, Quadratic, Saddle };
enum class Preset { Full, SubH, InexactFullEval, InexactFixed, InexactSubEval };

ProblemKind parse_problem_kind(const std::string& s);
Preset parse_preset(const std::string& s);
std::string to_string(ProblemKind p);
std::string to_string(Preset p);

struct ExperimentSpec {
  ProblemKind problem = ProblemKind::NlsSigmoid;
  std::filesystem::path data;  ///< LIBSVM file; empty selects a synthetic instance
  Preset variant = Preset::Full;
  double eps = 1e-3;
  std::uint64_t seed = 1;
  std::size_t repeats = 1;
  bool audit = false;
  bool skip_small_step_block = true;
  std::filesystem::path out = "out";

  // Synthetic-instance shape and problem parameters.
  Index dim = 20;
  Index rows = 1000;
  std::uint64_t data_seed = 7;
  double welsch_alpha = 1.0;

  // Solver overrides.
  std::optional<double> eps_H;
  double eta = 0.1;
  double theta = 0.5;
  double zeta = 0.5;
  double delta = 0.05;
  std::size_t max_iters = 10000;
  std::size_t bins = 100;
};

struct ProblemSetup {
  std::shared_ptr<const FiniteSumProblem> problem;
  ProblemConstants constants;
  Vector x0;
  std::optional<double> f_low;
};

ProblemSetup make_problem(const ExperimentSpec& spec);

/// Sampling policy, driver variant and step rule encoded by a preset for n components.
struct PresetSettings {
  SamplingPolicy policy;
  Variant variant = Variant::LineSearch;
  std::optional<ConstantSteps> constant_steps;
};

PresetSettings preset_settings(Preset preset, Index n);
SolverConfig solver_config(const ExperimentSpec& spec, const ProblemSetup& setup, std::uint64_t run_seed);

inline constexpr const char* kCsvHeader =
    "iter,f,grad_est_norm,grad_true_norm,d_type,step_class,alpha,ls_trials,cg_iters,meo_iters,"
    "f_calls,grad_calls,hv_calls,props";

std::string run_csv(const RunReport& report);
/// Mean and sample standard deviation of f over repeats on an evenly spaced
/// props grid; each run contributes the f of its last record at or below a
/// grid point.
nlohmann::json aggregate_runs(const std::vector<RunReport>& runs, std::size_t bins);

struct ExperimentResult {
  std::vector<RunReport> runs;
  std::vector<std::filesystem::path> csv_files;
  std::filesystem::path aggregate_file;
  bool contract_violation = false;
};

/// Runs `repeats` seeds s, s+1, ... sequentially; writes run_<r>.csv and aggregate.json under spec.out.
ExperimentResult run_experiment(const ExperimentSpec& spec);

}  // namespace ncg
