// Acceptance checks.  One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "wlsir/wlsir.hpp"

using namespace wlsir;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// 1 ------------------------------------------------------------------------
Outcome unit_roundoff_table() {
  const struct {
    FpFormat f;
    double want;
  } rows[] = {{fp16, 4.88e-4}, {fp32, 5.96e-8}, {fp64, 1.11e-16}};
  bool ok = true;
  std::string d;
  for (const auto& r : rows) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2e", unit_roundoff(r.f));
    ok = ok && std::stod(buf) == r.want;
    d += std::string(format_name(r.f)) + "=" + buf + " ";
  }
  return {ok, d};
}

// 2 ------------------------------------------------------------------------
Outcome table2_pattern() {
  ExperimentConfig c;
  c.experiment = ExperimentKind::table2;
  const CsvTable t = run_table2(c).table;
  double amin = INFINITY, amax = 0, smax = 0, lmax = 0;
  bool finite = true;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double a = t.value(r, "kappa_aug"), s = t.value(r, "kappa_split"),
                 l = t.value(r, "kappa_left");
    finite = finite && std::isfinite(a) && std::isfinite(s) && std::isfinite(l);
    amin = std::min(amin, a);
    amax = std::max(amax, a);
    smax = std::max(smax, s);
    lmax = std::max(lmax, l);
  }
  const double span = std::log10(amax / amin);
  const bool ok_span = span >= 20.0;
  const bool ok_split = smax < 1e2;
  const bool ok_left = std::fabs(std::log10(lmax) - 22.0) <= 4.0;
  return {finite && t.rows.size() == 9 && ok_span && ok_split && ok_left,
          fmt("kappa_aug span %.1f decades; max split %.3g; worst left %.3g", span, smax, lmax) +
              (ok_left ? "" : " (outside 1e18..1e26)")};
}

// 3 ------------------------------------------------------------------------
Outcome exact_qr_identity() {
  WlsProblem p = make_problem(gen_randsvd(50, 10, 10.0, 1), 2);
  p.D.setOnes();
  const AugmentedSystem s = build_augmented(p);
  const double k = static_cast<double>(
      kappa_left_preconditioned(s.op, house_qr(p.A, fp64), p.D, p.alpha));
  return {k <= 1 + 1e-8, fmt("kappa = 1 + %.2e", k - 1)};
}

// 4 ------------------------------------------------------------------------
Outcome spectrum_clustering() {
  const WlsProblem p = make_problem(gen_randsvd(20, 5, 10.0, 3), 4);
  const AugmentedSystem s = build_augmented(p);
  const BlockSplitPrecond sp(p, fp64, fp64, fp64);
  const HighMatrix op = sp.preconditioned_operator(s.op);
  Eigen::SelfAdjointEigenSolver<HighMatrix> es((op + op.transpose()) / 2);
  std::vector<double> ev;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    ev.push_back(static_cast<double>(es.eigenvalues()(i)));
  std::sort(ev.begin(), ev.end());
  std::vector<double> distinct;
  for (double e : ev)
    if (distinct.empty() || e - distinct.back() > 1e-6) distinct.push_back(e);
  const double r5 = std::sqrt(5.0);
  const double want[] = {(1 - r5) / 2, 1.0, (1 + r5) / 2};
  double worst = 0;
  bool ok = distinct.size() == 3;
  for (double e : ev) {
    double d = INFINITY;
    for (double w : want) d = std::min(d, std::fabs(e - w));
    worst = std::max(worst, d);
  }
  ok = ok && worst <= 1e-8;

  Preconditioning pc;
  pc.left = [&](const Vector& v) { return sp.apply(v, Side::left); };
  pc.right = [&](const Vector& v) { return sp.apply(v, Side::right); };
  KrylovConfig c;
  c.precond_mode = PrecondMode::split;
  const KrylovResult r = fgmres(dense_op(s.op), pc, s.rhs, c);
  ok = ok && r.trace.converged && r.trace.iterations <= 4;
  return {ok, fmt("%.0f distinct eigenvalues, max deviation %.2e, FGMRES iterations %.0f",
                  static_cast<double>(distinct.size()), worst,
                  static_cast<double>(r.trace.iterations))};
}

// 5 ------------------------------------------------------------------------
Outcome bound_validity() {
  Rng rng(2024);
  const FpFormat fmts[] = {fp16, fp32, fp64};
  int cases = 0, held = 0, rho_held = 0, skipped = 0;
  for (int k = 0; cases < 200 && k < 1000; ++k) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform() * 7);
    const Eigen::Index m = n + 4 + static_cast<Eigen::Index>(rng.uniform() * 50);
    const double cond = std::pow(10.0, 3.0 * rng.uniform());
    const double decades = 8.0 * rng.uniform();
    const FpFormat f = fmts[k % 3];
    WlsProblem p = make_problem(gen_randsvd(m, n, cond, 7000 + static_cast<std::uint64_t>(k)),
                                9000 + static_cast<std::uint64_t>(k));
    for (Eigen::Index i = 0; i < m; ++i) p.D(i) = std::pow(10.0, decades * rng.uniform());
    try {
      const QrFactors q = house_qr(p.A, f);
      const LeftBound b = bound_left(p.A, p.D, q);
      const double meas = static_cast<double>(
          kappa_left_preconditioned(build_augmented(p).op, q, p.D, p.alpha));
      ++cases;
      if (b.bound_measured_e >= meas) ++held;
      if (b.rho <= b.sqrt_kappa_d * (1 + 1e-12)) ++rho_held;
    } catch (const Error&) {
      ++skipped;
    }
  }
  const double frac = cases ? static_cast<double>(held) / cases : 0.0;
  return {cases == 200 && frac >= 0.95 && rho_held == cases,
          fmt("bound held in %.1f%% of %.0f cases; rho <= sqrt(kappa2(D)) in %.0f",
              100 * frac, static_cast<double>(cases), static_cast<double>(rho_held)) +
              (skipped ? " (" + std::to_string(skipped) + " factorization failures redrawn)" : "")};
}

// 6 ------------------------------------------------------------------------
Outcome refinement_convergence() {
  const Matrix a0 = gen_randsvd(100, 10, 1e2, 1);
  const PrecisionConfig pc = PrecisionConfig::make(fp16, fp32, fp64);
  KrylovConfig kc;
  kc.rel_tol = 1e-6;
  bool ok = true;
  std::string d;
  for (int j : {1, 2}) {
    const WlsProblem p = make_problem(row_scale(a0, j, ScaleDirection::inverse), 2);
    const double kd = kappa_diag(p.D);
    ok = ok && kd <= 1e4;
    const RefinementResult l = solve_wlsir(p, pc, Method::fgmres_left, kc);
    const RefinementResult s = solve_wlsir(p, pc, Method::fgmres_split, kc);
    ok = ok && l.converged && l.iterations <= 10 && *l.ferr_vs_oracle <= 1e-6 && s.converged;
    d += fmt("kD=%.1e left: %.0f steps", kd, l.iterations) +
         fmt(" ferr %.1e; split: %.0f steps; ", *l.ferr_vs_oracle, s.iterations);
  }
  return {ok, d};
}

// 7 ------------------------------------------------------------------------
Outcome qr_backward_error() {
  bool ok = true;
  std::string d;
  for (const FpFormat& f : {fp16, fp32, fp64}) {
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
      Rng r(500 + static_cast<std::uint64_t>(k));
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(r.uniform() * 9);
      const Eigen::Index m = n + static_cast<Eigen::Index>(r.uniform() * 60);
      const double cond = std::pow(10.0, 3.0 * r.uniform());
      const Matrix a = gen_randsvd(m, n, cond, 600 + static_cast<std::uint64_t>(k));
      const QrFactors q = house_qr(a, f);
      const double be = static_cast<double>(
          (to_high(a) - to_high(q.Q) * to_high(q.R)).norm() / to_high(a).norm());
      const double ratio = be / (static_cast<double>(m * n) * f.unit_roundoff());
      worst = std::max(worst, ratio);
    }
    ok = ok && worst <= 10.0;
    d += std::string(format_name(f)) + fmt(" max c=%.3f ", worst);
  }
  return {ok, d};
}

// 8 ------------------------------------------------------------------------
Outcome solver_oracle_equivalence() {
  double worst_err = 0, worst_arn = 0;
  for (int k = 0; k < 10; ++k) {
    const Eigen::Index n = 2 + k % 4;
    const Eigen::Index m = n + 2 + 2 * k;  // dimension 6 .. 30
    WlsProblem p = make_problem(gen_randsvd(m, n, 10.0 + 10 * k, 80 + k), 90 + k);
    const AugmentedSystem s = build_augmented(p);
    KrylovConfig c;
    c.keep_basis = true;
    const KrylovResult r = fgmres(dense_op(s.op), {}, s.rhs, c);
    const Vector ref = oracle_solve(s);
    worst_err = std::max(worst_err, (r.x - ref).norm() / ref.norm());
    worst_arn = std::max(worst_arn, arnoldi_check(dense_op(s.op), r));
  }
  return {worst_err <= 1e-10 && worst_arn <= 1e-12,
          fmt("max rel error %.2e, max Arnoldi residual %.2e", worst_err, worst_arn)};
}

// 9 ------------------------------------------------------------------------
Outcome gate_transitions() {
  ExperimentConfig c;
  c.experiment = ExperimentKind::fig1;
  c.working = fp32;
  const CsvTable t = run_fig1(c).table;
  const auto transition = [&](const std::string& uf) {
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      if (t.text(r, "u_f") == uf && t.text(r, "gate") == "0") return t.value(r, "kappa_D");
    return static_cast<double>(INFINITY);
  };
  const auto first_above = [&](double level) {
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      if (t.value(r, "kappa_D") > level) return t.value(r, "kappa_D");
    return static_cast<double>(INFINITY);
  };
  const double half_at = transition("half"), single_at = transition("single");
  const double half_want = first_above(1e6), single_want = first_above(1e10);
  const auto near = [](double a, double b) {
    return std::isfinite(a) && std::fabs(std::log10(a / b)) <= 2.0;
  };
  const bool ok = near(half_at, half_want) && near(single_at, single_want);
  return {ok, fmt("half gate false from kappa(D)=%.2e (target %.2e); ", half_at, half_want) +
                  fmt("single from %.2e (target %.2e)", single_at, single_want)};
}

// 10 -----------------------------------------------------------------------
Outcome determinism() {
  std::vector<ExperimentConfig> cfgs(3);
  cfgs[0].experiment = ExperimentKind::fig1;
  cfgs[1].experiment = ExperimentKind::table2;
  cfgs[2].experiment = ExperimentKind::suitesparse;
  cfgs[2].matrix_path = std::string(WLSIR_TEST_DATA) + "/synthetic_rect.mtx";
  bool ok = true;
  for (auto& c : cfgs) {
    c.seed = 7;
    ok = ok && run_experiment(c).table.str() == run_experiment(c).table.str();
  }
  return {ok, "fig1, table2 and suitesparse reruns compared byte for byte"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks = {
      {"unit roundoff table", unit_roundoff_table},
      {"condition numbers of both preconditioners", table2_pattern},
      {"exact QR gives identity preconditioning", exact_qr_identity},
      {"split spectrum clustering", spectrum_clustering},
      {"left bound validity", bound_validity},
      {"mixed-precision refinement convergence", refinement_convergence},
      {"QR backward error", qr_backward_error},
      {"FGMRES matches direct solve", solver_oracle_equivalence},
      {"convergence gate transitions", gate_transitions},
      {"deterministic reruns", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", i + 1, checks[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, checks.size());
  return failures;
}
