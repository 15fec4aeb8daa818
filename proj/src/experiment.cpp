#include "ncg/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "ncg/libsvm.hpp"

namespace ncg {

namespace {

const std::pair<const char*, ProblemKind> kProblems[] = {
    {"nls-sigmoid", ProblemKind::NlsSigmoid}, {"nls-tanh", ProblemKind::NlsTanh},
    {"nls-welsch", ProblemKind::NlsWelsch},   {"quadratic", ProblemKind::Quadratic},
    {"saddle", ProblemKind::Saddle},
};

const std::pair<const char*, Preset> kPresets[] = {
    {"full", Preset::Full},
    {"subh", Preset::SubH},
    {"inexact-full-eval", Preset::InexactFullEval},
    {"inexact-fixed", Preset::InexactFixed},
    {"inexact-sub-eval", Preset::InexactSubEval},
};

Index fraction_of(Index n, double frac) {
  return std::max<Index>(1, static_cast<Index>(std::ceil(frac * static_cast<double>(n))));
}

std::string num(double v) { return fmt::format("{:.17g}", v); }
std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

ProblemKind parse_problem_kind(const std::string& s) {
  for (const auto& [name, kind] : kProblems) {
    if (s == name) return kind;
  }
  throw std::invalid_argument("unknown problem '" + s + "'");
}

Preset parse_preset(const std::string& s) {
  for (const auto& [name, p] : kPresets) {
    if (s == name) return p;
  }
  throw std::invalid_argument("unknown variant '" + s + "'");
}

std::string to_string(ProblemKind p) {
  for (const auto& [name, kind] : kProblems) {
    if (kind == p) return name;
  }
  return "?";
}

std::string to_string(Preset p) {
  for (const auto& [name, q] : kPresets) {
    if (q == p) return name;
  }
  return "?";
}

ProblemSetup make_problem(const ExperimentSpec& spec) {
  ProblemSetup setup;
  switch (spec.problem) {
    case ProblemKind::NlsSigmoid:
    case ProblemKind::NlsTanh:
    case ProblemKind::NlsWelsch: {
      const Link kind = spec.problem == ProblemKind::NlsSigmoid ? Link::Sigmoid
                        : spec.problem == ProblemKind::NlsTanh  ? Link::Tanh
                                                                : Link::Welsch;
      auto data = std::make_shared<NlsData>(spec.data.empty()
                                                ? make_synthetic_nls(spec.rows, spec.dim, 1.0, kind, spec.data_seed)
                                                : load_libsvm(spec.data));
      auto problem = std::make_shared<NLSProblem>(data, LinkSpec{kind, spec.welsch_alpha});
      setup.constants = constants_for(*problem);
      setup.x0 = Vector::Zero(static_cast<Eigen::Index>(problem->dim()));
      setup.f_low = 0.0;
      setup.problem = std::move(problem);
      break;
    }
    case ProblemKind::Quadratic: {
      if (spec.dim < 1) throw std::invalid_argument("quadratic: dim must be positive");
      const auto d = static_cast<Eigen::Index>(spec.dim);
      Rng rng(spec.data_seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      Matrix g(d, d);
      for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
      const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(d, d);
      Vector spectrum = Vector::LinSpaced(d, 1.0, 10.0);
      Vector c(d);
      for (auto& v : c) v = normal(rng);
      Matrix a = q * spectrum.asDiagonal() * q.transpose();
      auto problem = std::make_shared<QuadraticProblem>(a, c);
      const Vector xstar = -problem->matrix().ldlt().solve(c);
      setup.f_low = 0.5 * xstar.dot(c);
      setup.constants = problem->constants(10.0 + xstar.norm());
      setup.x0 = Vector::Zero(d);
      setup.problem = std::move(problem);
      break;
    }
    case ProblemKind::Saddle: {
      auto problem = SaddleProblem::make(std::max<Index>(2, spec.dim), 1.0, 1.0, spec.data_seed);
      setup.constants = problem->constants(10.0);
      setup.f_low = problem->f_low();
      setup.x0 = Vector::Zero(static_cast<Eigen::Index>(problem->dim()));
      setup.problem = std::move(problem);
      break;
    }
  }
  return setup;
}

PresetSettings preset_settings(Preset preset, Index n) {
  PresetSettings s;
  if (preset == Preset::Full) return s;
  s.policy.hess_batch = fraction_of(n, 0.01);
  if (preset == Preset::SubH) {
    s.policy.mode = SamplingMode::SubHessianOnly;
    return s;
  }
  s.policy.mode = SamplingMode::SubBoth;
  s.policy.grad_batch = fraction_of(n, 0.05);
  s.policy.adaptive = true;
  if (preset == Preset::InexactFixed) {
    s.variant = Variant::FixedStep;
    s.constant_steps = ConstantSteps{0.2, 0.04};
  } else if (preset == Preset::InexactSubEval) {
    s.policy.ls_eval = LineSearchEval::GradientSample;
  }
  return s;
}

SolverConfig solver_config(const ExperimentSpec& spec, const ProblemSetup& setup, std::uint64_t run_seed) {
  SolverConfig c;
  c.eps_g = spec.eps;
  c.eps_H = spec.eps_H;
  if (!c.eps_H && !(setup.constants.L_H > 0.0)) c.eps_H = std::sqrt(spec.eps);
  c.eta = spec.eta;
  c.theta = spec.theta;
  c.zeta = spec.zeta;
  c.delta = spec.delta;
  c.U_H = setup.constants.U_H;
  c.L_H = setup.constants.L_H;
  c.U_g = setup.constants.U_g;
  c.f_low = setup.f_low;
  c.max_outer_iters = spec.max_iters;
  c.skip_small_step_block = spec.skip_small_step_block;
  c.seed = run_seed;
  c.audit = spec.audit;
  return c;
}

std::string run_csv(const RunReport& report) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : report.records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.k, num(r.f_value), opt_num(r.grad_est_norm),
                       opt_num(r.grad_true_norm), r.d_type ? to_string(*r.d_type) : "", to_string(r.step_class),
                       num(r.alpha), r.ls_trials, r.cg_iters, r.meo_iters, r.ledger.f_calls, r.ledger.grad_calls,
                       r.ledger.hv_calls, r.ledger.props());
  }
  return out;
}

nlohmann::json aggregate_runs(const std::vector<RunReport>& runs, std::size_t bins) {
  if (runs.empty()) throw std::invalid_argument("aggregate_runs: no runs");
  bins = std::max<std::size_t>(bins, 1);
  std::uint64_t top = 0;
  for (const auto& r : runs) top = std::max(top, r.records.back().ledger.props());
  nlohmann::json grid = nlohmann::json::array();
  std::vector<std::size_t> cursor(runs.size(), 0);
  for (std::size_t b = 0; b <= bins; ++b) {
    const double edge = static_cast<double>(top) * static_cast<double>(b) / static_cast<double>(bins);
    std::vector<double> fs;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& recs = runs[i].records;
      while (cursor[i] + 1 < recs.size() && static_cast<double>(recs[cursor[i] + 1].ledger.props()) <= edge) ++cursor[i];
      fs.push_back(recs[cursor[i]].f_value);
    }
    double mean = 0.0;
    for (double f : fs) mean += f;
    mean /= static_cast<double>(fs.size());
    double var = 0.0;
    for (double f : fs) var += (f - mean) * (f - mean);
    const double sd = fs.size() > 1 ? std::sqrt(var / static_cast<double>(fs.size() - 1)) : 0.0;
    grid.push_back({{"props", edge}, {"mean_f", mean}, {"std_f", sd}, {"upper_f", mean + sd}});
  }
  nlohmann::json per_run = nlohmann::json::array();
  for (const auto& r : runs) {
    per_run.push_back({{"termination", to_string(r.termination)},
                       {"iterations", r.iterations()},
                       {"final_f", r.f_final},
                       {"final_grad_norm", r.grad_true_norm_final},
                       {"final_props", r.records.back().ledger.props()},
                       {"violation", r.violation}});
  }
  return {{"bins", grid}, {"runs", per_run}};
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  const ProblemSetup setup = make_problem(spec);
  const PresetSettings preset = preset_settings(spec.variant, setup.problem->num_components());
  std::filesystem::create_directories(spec.out);

  ExperimentResult result;
  for (std::size_t r = 0; r < spec.repeats; ++r) {
    const std::uint64_t seed = spec.seed + r;
    ObjectiveOracle oracle(setup.problem);
    SolverConfig cfg = solver_config(spec, setup, seed);
    cfg.constant_steps = preset.constant_steps;
    RunReport report = run(oracle, setup.x0, preset.policy, cfg, preset.variant);
    if (report.termination == Termination::ContractViolation) result.contract_violation = true;

    const auto path = spec.out / fmt::format("run_{}.csv", r);
    std::ofstream out(path, std::ios::binary);
    out << run_csv(report);
    if (!out) throw std::runtime_error("write failed for " + path.string());
    result.csv_files.push_back(path);
    result.runs.push_back(std::move(report));
  }

  nlohmann::json agg = aggregate_runs(result.runs, spec.bins);
  agg["spec"] = {{"problem", to_string(spec.problem)},
                 {"data", spec.data.string()},
                 {"variant", to_string(spec.variant)},
                 {"eps", spec.eps},
                 {"seed", spec.seed},
                 {"repeats", spec.repeats},
                 {"audit", spec.audit},
                 {"skip_small_step_block", spec.skip_small_step_block},
                 {"n", setup.problem->num_components()},
                 {"d", setup.problem->dim()},
                 {"L_H", setup.constants.L_H},
                 {"U_H", setup.constants.U_H}};
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    agg["runs"][r]["seed"] = spec.seed + r;
    agg["runs"][r]["csv"] = result.csv_files[r].filename().string();
  }
  result.aggregate_file = spec.out / "aggregate.json";
  std::ofstream out(result.aggregate_file, std::ios::binary);
  out << agg.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + result.aggregate_file.string());
  return result;
}

}  // namespace ncg
