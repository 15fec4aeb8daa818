// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the number of failures.
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "ncg/capped_cg.hpp"
#include "ncg/experiment.hpp"
#include "ncg/libsvm.hpp"
#include "ncg/meo.hpp"
#include "ncg/sampling.hpp"
#include "ncg/solver.hpp"
#include "test_support.hpp"

using namespace ncg;
using namespace ncg::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double spectral_norm(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ncg_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

// Random symmetric matrix with a prescribed spectrum, random gradient and tolerance.
struct CgCase {
  Matrix h;
  Vector g;
  double eps;
};

CgCase random_case(Rng& rng, bool indefinite) {
  static constexpr double kEps[] = {0.05, 0.1, 0.5};
  std::uniform_int_distribution<int> dim(2, 50);
  std::uniform_int_distribution<int> pick(0, 2);
  const Index d = dim(rng);
  const double eps = kEps[pick(rng)];
  Vector spec = indefinite ? uniform_spectrum(d, -5.0, 5.0, rng) : uniform_spectrum(d, eps, 5.0, rng);
  if (indefinite) {
    std::uniform_real_distribution<double> low(-5.0, -2.0 * eps);
    spec(0) = low(rng);
  } else {
    spec(0) = eps;
  }
  return {planted_symmetric(spec, rng), gaussian_vector(d, rng), eps};
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  Rng rng(101);
  const double zeta = 0.5;
  int violations = 0, sol = 0;
  double worst_res = 0.0;
  for (int t = 0; t < 500; ++t) {
    const CgCase c = random_case(rng, false);
    const Index d = c.g.size();
    const auto r = capped_cg(HessianOperator::from_dense(c.h), c.g, {c.eps, zeta});
    if (r.d_type != DirectionType::SOL) {
      ++violations;
      continue;
    }
    ++sol;
    const Matrix damped = c.h + 2.0 * c.eps * Matrix::Identity(d, d);
    const double dn = r.d.norm();
    const double res = (damped * r.d + c.g).norm();
    worst_res = std::max(worst_res, res / (0.5 * c.eps * zeta * dn));
    bool ok = res <= 0.5 * c.eps * zeta * dn;
    ok = ok && r.d.dot(c.h * r.d) >= -c.eps * dn * dn;
    ok = ok && dn <= 1.1 / c.eps * c.g.norm();
    // Distance to the exact solution is bounded by the residual over lambda_min(H + 2 eps I).
    const Vector exact = damped.llt().solve(-c.g);
    ok = ok && (r.d - exact).norm() <= res / lambda_min(damped) * (1.0 + 1e-8) + 1e-12;
    if (!ok) ++violations;
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 10.0,
          fmt::format("{} SOL returns, {} violations, worst residual ratio {:.3f}, {:.2f} s", sol, violations,
                      worst_res, secs)};
}

Outcome criterion2() {
  Rng rng(202);
  const double zeta = 0.5;
  int violations = 0, nc = 0;
  for (int t = 0; t < 500; ++t) {
    const CgCase c = random_case(rng, true);
    const Index d = c.g.size();
    const auto r = capped_cg(HessianOperator::from_dense(c.h), c.g, {c.eps, zeta});
    if (r.iterations > std::min<std::size_t>(static_cast<std::size_t>(d), j_cap(r.M_final, c.eps, zeta))) ++violations;
    if (r.d_type != DirectionType::NC) continue;
    ++nc;
    if (!(r.d.dot(c.h * r.d) < -c.eps * r.d.squaredNorm())) ++violations;
  }
  return {violations == 0, fmt::format("{} NC returns of 500, {} violations", nc, violations)};
}

std::size_t meo_cap_formula(double d, double M, double eps, double delta) {
  const double k = 1.0 + std::ceil(std::log(2.75 * d / (delta * delta)) / 2.0 * std::sqrt(M / eps));
  return static_cast<std::size_t>(std::min(d, k));
}

Outcome criterion3() {
  const Index d = 50;
  const double eps = 1.0, delta = 0.05;
  int wrong_certificates = 0, violations = 0;
  const std::size_t cap = meo_cap_formula(static_cast<double>(d), 3.0, eps, delta);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    Vector spec = uniform_spectrum(d, -1.0, 3.0, rng);
    spec(0) = -3.0;
    const Matrix h = planted_symmetric(spec, rng);
    const double M = spectral_norm(h);
    const auto r = meo_lanczos(HessianOperator::from_dense(h), M, eps, delta, rng);
    if (r.iterations > cap) ++violations;
    if (r.outcome == MeoOutcome::Certificate) {
      ++wrong_certificates;
      continue;
    }
    if (!(std::abs(r.v.norm() - 1.0) <= 1e-10 && r.v.dot(h * r.v) <= -eps / 2.0)) ++violations;
  }
  const double rate = wrong_certificates / 200.0;
  const double limit = 0.05 + 2.0 * std::sqrt(0.05 * 0.95 / 200.0);
  return {rate <= limit && violations == 0,
          fmt::format("incorrect-certificate rate {:.3f} (limit {:.3f}), {} violations, cap {}", rate, limit,
                      violations, cap)};
}

Outcome criterion4() {
  Rng rng(404);
  int failures = 0;
  double worst_g = 0.0, worst_hv = 0.0;
  std::uniform_int_distribution<int> rows(5, 60), dims(2, 12);
  std::uniform_real_distribution<double> alpha(0.2, 3.0);
  for (Link link : {Link::Sigmoid, Link::Tanh, Link::Welsch}) {
    for (int t = 0; t < 100; ++t) {
      const LinkSpec spec{link, link == Link::Welsch ? alpha(rng) : 1.0};
      auto data = std::make_shared<NlsData>(make_synthetic_nls(rows(rng), dims(rng), 1.0, link, 1000 + t));
      const ObjectiveOracle o(std::make_shared<NLSProblem>(data, spec));
      const Vector x = gaussian_vector(data->cols(), rng);
      const Vector v = gaussian_vector(data->cols(), rng);
      const Vector g = o.audit_grad(x);
      const Vector hv = o.audit_hessian(x).apply(v);
      const Vector g_fd = fd_gradient([&](const Vector& z) { return o.audit_f(z); }, x);
      const Vector hv_fd = fd_hvp([&](const Vector& z) { return o.audit_grad(z); }, x, v);
      const double eg = (g - g_fd).norm() / g_fd.norm();
      const double eh = (hv - hv_fd).norm() / hv_fd.norm();
      worst_g = std::max(worst_g, eg);
      worst_hv = std::max(worst_hv, eh);
      if (!(eg <= 1e-6 && eh <= 1e-5)) ++failures;
    }
  }
  return {failures == 0, fmt::format("300 instances, worst relative error gradient {:.2e}, Hvp {:.2e}", worst_g, worst_hv)};
}

// Instances shared by the driver criteria: a strict saddle and a sigmoid NLS problem.
std::vector<std::pair<std::string, ProblemSetup>> driver_instances() {
  std::vector<std::pair<std::string, ProblemSetup>> out;
  ExperimentSpec saddle;
  saddle.problem = ProblemKind::Saddle;
  saddle.dim = 20;
  saddle.data_seed = 3;
  out.emplace_back("saddle", make_problem(saddle));
  ExperimentSpec nls;
  nls.problem = ProblemKind::NlsSigmoid;
  nls.rows = 1000;
  nls.dim = 20;
  nls.data_seed = 5;
  out.emplace_back("nls", make_problem(nls));
  return out;
}

SolverConfig driver_config(const ProblemSetup& s, double eps) {
  SolverConfig c;
  c.eps_g = eps;
  c.U_H = s.constants.U_H;
  c.L_H = s.constants.L_H;
  c.U_g = s.constants.U_g;
  c.f_low = s.f_low;
  c.audit = true;
  c.seed = 17;
  return c;
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  const double eps = 1e-3;
  std::vector<std::string> notes;
  bool pass = true;
  for (const auto& [name, s] : driver_instances()) {
    const ObjectiveOracle o(s.problem);
    const SolverConfig cfg = driver_config(s, eps);
    const RunReport r = run(o, s.x0, SamplingPolicy{}, cfg, Variant::LineSearch);
    const double eh3 = std::pow(cfg.resolved_eps_H(), 3.0);
    const DecreaseConstants dc = decrease_constants(cfg.eta, cfg.theta, cfg.zeta, cfg.theta_tilde, cfg.L_H);
    int bad = 0;
    for (std::size_t i = 0; i + 1 < r.records.size(); ++i) {
      const auto& rec = r.records[i];
      const double drop = rec.f_value - r.records[i + 1].f_value;
      const bool certified_return = i + 2 == r.records.size() && r.termination == Termination::FirstOrderAndCertified;
      if (!certified_return && !(drop > 0.0)) ++bad;
      if (rec.d_type == DirectionType::NC && !certified_return) {
        const double floor = rec.from_meo ? dc.c_nc / 8.0 * eh3 : dc.c_nc * eh3;
        if (drop < floor) ++bad;
      }
    }
    const std::uint64_t kbar = iteration_bound(r.records.front().f_value - *s.f_low, cfg.L_H, dc, eps, Variant::LineSearch);
    const double gbound = 4.5 * eps;
    const bool ok = bad == 0 && r.audit_failures.empty() && r.iterations() <= kbar &&
                    (r.termination == Termination::FirstOrderAndCertified ||
                     r.termination == Termination::CertifiedAtCurrentPoint) &&
                    r.grad_true_norm_final <= gbound;
    pass = pass && ok;
    notes.push_back(fmt::format("{}: {} ({} iters <= {}, |grad| {:.2e}, {} bad steps)", name, to_string(r.termination),
                                r.iterations(), kbar, r.grad_true_norm_final, bad));
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 60.0;
  return {pass, fmt::format("{}; {}; {:.2f} s", notes[0], notes[1], secs)};
}

Outcome criterion6() {
  const double eps = 1e-3;
  std::vector<std::string> notes;
  bool pass = true;
  for (const auto& [name, s] : driver_instances()) {
    const ObjectiveOracle o(s.problem);
    const SolverConfig cfg = driver_config(s, eps);
    const RunReport r = run(o, s.x0, SamplingPolicy{}, cfg, Variant::FixedStep);
    const double eh = cfg.resolved_eps_H();
    const double eh3 = eh * eh * eh;
    const DecreaseConstants dc = decrease_constants(cfg.eta, cfg.theta, cfg.zeta, cfg.theta_tilde, cfg.L_H);
    int bad = 0;
    for (std::size_t i = 0; i + 1 < r.records.size(); ++i) {
      const auto& rec = r.records[i];
      const bool certified_return = i + 2 == r.records.size() && r.termination == Termination::FirstOrderAndCertified;
      if (certified_return) continue;
      const double drop = rec.f_value - r.records[i + 1].f_value;
      if (!(drop > 0.0)) ++bad;
      if (rec.d_type == DirectionType::NC) {
        if (drop < (rec.from_meo ? dc.cbar_nc / 8.0 : dc.cbar_nc) * eh3) ++bad;
      } else if (rec.d_type == DirectionType::SOL && rec.d_norm >= eps / eh) {
        if (drop < dc.cbar_sol * eh3) ++bad;
      }
    }
    const std::uint64_t kbar2 = iteration_bound(r.records.front().f_value - *s.f_low, cfg.L_H, dc, eps, Variant::FixedStep);
    const bool ok = bad == 0 && r.audit_failures.empty() && r.iterations() <= kbar2 &&
                    r.termination != Termination::MaxIters && r.termination != Termination::ContractViolation;
    pass = pass && ok;
    notes.push_back(fmt::format("{}: {} ({} iters <= {}, {} bad steps)", name, to_string(r.termination), r.iterations(),
                                kbar2, bad));
  }
  return {pass, fmt::format("{}; {}", notes[0], notes[1])};
}

Outcome criterion7() {
  const Index n = 5000, d = 20;
  // A loose tolerance keeps both sample sizes below n; tighter ones ask for more rows than exist.
  const double eps = 50.0, zeta = 0.5, eta = 0.1, delta_bar = 0.1;
  auto data = std::make_shared<NlsData>(make_synthetic_nls(n, d, 1.0, Link::Sigmoid, 77));
  auto problem = std::make_shared<NLSProblem>(data, LinkSpec{Link::Sigmoid});
  const ObjectiveOracle o(problem);
  const ProblemConstants c = constants_for(*problem);
  const AccuracyTargets t = floor_targets(eps, c.L_H, zeta, eta);
  const Index bg = grad_sample_size(c.K_g, t.delta_g, delta_bar);
  const Index bh = hess_sample_size(c.K_H, t.delta_H, d, delta_bar);
  Rng rng(7);
  const Vector x = gaussian_vector(d, rng);
  const Vector g = o.audit_grad(x);
  const Matrix h = assemble(o.audit_hessian(x));
  int good = 0;
  for (int t_ = 0; t_ < 200; ++t_) {
    const IndexSet sg = sample_indices(n, bg, rng);
    Vector gs(d);
    problem->gradient_sum(x, sg, gs);
    gs /= static_cast<double>(sg.size());
    const Matrix hs = assemble(o.audit_hessian(x, sample_indices(n, bh, rng)));
    if ((gs - g).norm() <= t.delta_g && spectral_norm(hs - h) <= t.delta_H) ++good;
  }
  const bool subsampled = bg < n && bh < n;
  return {subsampled && good >= 170,
          fmt::format("{}/200 within bounds at batches {}/{} of {} (delta_g {:.3g}, delta_H {:.3g})", good, bg, bh, n,
                      t.delta_g, t.delta_H)};
}

// Forwards to a problem and counts the components each evaluation touches.
class CountingProblem final : public FiniteSumProblem {
 public:
  explicit CountingProblem(std::shared_ptr<const FiniteSumProblem> inner) : inner_(std::move(inner)) {}
  Index num_components() const override { return inner_->num_components(); }
  Index dim() const override { return inner_->dim(); }
  double value_sum(const Vector& x, std::span<const Index> idx) const override {
    f_ += idx.size();
    return inner_->value_sum(x, idx);
  }
  void gradient_sum(const Vector& x, std::span<const Index> idx, Vector& out) const override {
    g_ += idx.size();
    inner_->gradient_sum(x, idx, out);
  }
  void hvp_sum(const Vector& x, const Vector& v, std::span<const Index> idx, Vector& out) const override {
    hv_ += idx.size();
    inner_->hvp_sum(x, v, idx, out);
  }
  HessianOperator::ApplyFn hvp_closure(const Vector& x, IndexSet idx) const override {
    const std::uint64_t size = idx.size();
    auto inner = inner_->hvp_closure(x, std::move(idx));
    return [this, size, inner](const Vector& v, Vector& out) {
      hv_ += size;
      inner(v, out);
    };
  }
  mutable std::atomic<std::uint64_t> f_{0}, g_{0}, hv_{0};

 private:
  std::shared_ptr<const FiniteSumProblem> inner_;
};

Outcome criterion8() {
  const Index n = 800;
  const Index grad_batch = 64, hess_batch = 16;
  auto data = std::make_shared<NlsData>(make_synthetic_nls(n, 6, 1.0, Link::Tanh, 31));
  auto counting = std::make_shared<CountingProblem>(std::make_shared<NLSProblem>(data, LinkSpec{Link::Tanh}));
  const ObjectiveOracle o(counting);
  const ProblemConstants c = constants_for(NLSProblem(data, LinkSpec{Link::Tanh}));
  SamplingPolicy pol;
  pol.mode = SamplingMode::SubBoth;
  pol.grad_batch = grad_batch;
  pol.hess_batch = hess_batch;
  pol.ls_eval = LineSearchEval::GradientSample;
  SolverConfig cfg;
  cfg.eps_g = 1e-2;
  cfg.U_H = c.U_H;
  cfg.L_H = c.L_H;
  cfg.max_outer_iters = 40;
  cfg.seed = 8;
  const RunReport r = run(o, Vector::Zero(6), pol, cfg, Variant::LineSearch);
  const fs::path csv = scratch("accounting") / "run.csv";
  std::ofstream(csv) << run_csv(r);
  const auto rows = read_csv(csv);

  int bad = 0;
  std::uint64_t prev_g = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::uint64_t fc = std::stoull(rows[i][10]), gc = std::stoull(rows[i][11]), hc = std::stoull(rows[i][12]);
    if (std::stoull(rows[i][13]) != fc + 2 * gc + 4 * hc) ++bad;
    // Each step draws one gradient batch; no step draws more (the terminal record may add none).
    if (i > 1 && gc - prev_g != static_cast<std::uint64_t>(grad_batch) && gc != prev_g) ++bad;
    if (hc % hess_batch != 0) ++bad;
    prev_g = gc;
  }
  // Independent recount at the problem boundary. Reporting is unmetered: one full f per
  // record plus one for the starting point, and one full gradient at termination.
  const auto& last = rows.back();
  const std::uint64_t records = rows.size() - 1;
  const bool ledger_match = counting->g_ == std::stoull(last[11]) + static_cast<std::uint64_t>(n) &&
                            counting->hv_ == std::stoull(last[12]) &&
                            counting->f_ == std::stoull(last[10]) + (records + 1) * static_cast<std::uint64_t>(n);
  return {bad == 0 && ledger_match && rows.size() > 3,
          fmt::format("{} rows, {} mismatches; recount f {} grad {} hv {} against CSV {} {} {}; props {}", records, bad,
                      counting->f_.load(), counting->g_.load(), counting->hv_.load(), last[10], last[11], last[12],
                      last[13])};
}

std::optional<std::uint64_t> props_to_reach(const RunReport& r, double threshold) {
  for (const auto& rec : r.records)
    if (rec.f_value <= threshold) return rec.ledger.props();
  return std::nullopt;
}

Outcome criterion9() {
  const fs::path dir = scratch("comparison");
  const fs::path file = dir / "binary.svm";
  NlsData data = make_synthetic_nls(10000, 22, 1.0, Link::Tanh, 2024);
  write_libsvm(file, data);

  ExperimentSpec spec;
  spec.problem = ProblemKind::NlsTanh;
  spec.data = file;
  spec.eps = 1e-3;
  spec.seed = 3;
  spec.max_iters = 500;
  std::map<Preset, RunReport> runs;
  for (Preset p : {Preset::Full, Preset::InexactFullEval, Preset::InexactSubEval}) {
    spec.variant = p;
    spec.out = dir / to_string(p);
    runs[p] = run_experiment(spec).runs.front();
  }
  const RunReport& full = runs[Preset::Full];
  const double f0 = full.records.front().f_value;
  double f_best = f0;
  for (const auto& rec : full.records) f_best = std::min(f_best, rec.f_value);
  const double threshold = f0 - 0.9 * (f0 - f_best);
  const auto p_full = props_to_reach(full, threshold);
  const auto p_fe = props_to_reach(runs[Preset::InexactFullEval], threshold);
  const auto p_se = props_to_reach(runs[Preset::InexactSubEval], threshold);
  auto show = [](const std::optional<std::uint64_t>& p) { return p ? std::to_string(*p) : std::string("never"); };
  const bool pass = p_full && p_fe && p_se && *p_fe < *p_full && *p_se < *p_full;
  return {pass, fmt::format("props to reach f <= {:.6g}: full {}, inexact-full-eval {}, inexact-sub-eval {}", threshold,
                            show(p_full), show(p_fe), show(p_se))};
}

Outcome criterion10() {
  ExperimentSpec spec;
  spec.problem = ProblemKind::NlsWelsch;
  spec.variant = Preset::InexactSubEval;
  spec.rows = 2000;
  spec.dim = 10;
  spec.eps = 1e-3;
  spec.repeats = 3;
  spec.audit = true;
  spec.out = scratch("determinism_a");
  const auto a = run_experiment(spec);
  spec.out = scratch("determinism_b");
  const auto b = run_experiment(spec);
  int differing = 0;
  for (std::size_t r = 0; r < a.csv_files.size(); ++r)
    if (slurp(a.csv_files[r]) != slurp(b.csv_files[r])) ++differing;
  const bool agg_same = slurp(a.aggregate_file) == slurp(b.aggregate_file);
  return {differing == 0 && agg_same && a.csv_files.size() == 3,
          fmt::format("{} of {} CSVs differ, aggregate {}", differing, a.csv_files.size(), agg_same ? "identical" : "differs")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"capped CG solution contract", criterion1},
      {"capped CG negative-curvature contract", criterion2},
      {"eigen-oracle certificate rate", criterion3},
      {"NLS derivatives against finite differences", criterion4},
      {"line-search driver monotonicity and floors", criterion5},
      {"fixed-step driver floors and bound", criterion6},
      {"sample-size concentration", criterion7},
      {"propagation accounting", criterion8},
      {"inexact presets reach the loss threshold sooner", criterion9},
      {"determinism", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    if (!o.pass) ++failures;
    std::cout << fmt::format("{} {:2d} {}: {}", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail) << std::endl;
  }
  return failures;
}
