#include <gtest/gtest.h>

#include <sstream>

#include "wlsir/refinement.hpp"

using namespace wlsir;

namespace {

WlsProblem fig_problem(int j, std::uint64_t seed = 1) {
  const Matrix a = row_scale(gen_randsvd(100, 10, 1e2, seed), j, ScaleDirection::inverse);
  return make_problem(a, seed + 1);
}

KrylovConfig inner() {
  KrylovConfig c;
  c.rel_tol = 1e-6;
  return c;
}

double y_mismatch(const WlsProblem& p, const RefinementResult& r) {
  const HighVector y = to_high(p.D).asDiagonal() *
                       (to_high(p.b) - to_high(p.A) * to_high(r.x));
  return static_cast<double>((to_high(r.y) - y).cwiseAbs().maxCoeff() /
                             y.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(FerrEstimate, IdentityAndDiagonal) {
  AugmentedSystem s;
  s.op = Matrix::Identity(3, 3);
  const PrecisionConfig pc = PrecisionConfig::make(fp16, fp32, fp64);
  EXPECT_EQ(ferr_estimate(s, Vector::Ones(3), pc), fp64.unit_roundoff() + fp32.unit_roundoff());
  s.op.diagonal() << 1, 1e6, -3;
  EXPECT_EQ(ferr_estimate(s, (Vector(3) << 1, 2, 3).finished(), pc),
            fp64.unit_roundoff() + fp32.unit_roundoff());
}

TEST(SolveWlsir, HalfSingleDoubleAllMethodsConverge) {
  const WlsProblem p = fig_problem(1);
  const PrecisionConfig pc = PrecisionConfig::make(fp16, fp32, fp64);
  for (Method m : {Method::lsir, Method::fgmres_left, Method::fgmres_split}) {
    const RefinementResult r = solve_wlsir(p, pc, m, inner());
    EXPECT_TRUE(r.converged) << method_name(m);
    EXPECT_LE(r.iterations, 10) << method_name(m);
    ASSERT_TRUE(r.ferr_vs_oracle.has_value());
    EXPECT_LE(*r.ferr_vs_oracle, 1e-6) << method_name(m);
    EXPECT_EQ(static_cast<int>(r.history.size()), r.iterations);
    EXPECT_LE(r.history.back().rel_correction,
              std::sqrt(110.0) * fp32.unit_roundoff());
  }
}

TEST(SolveWlsir, UnitWeightsFgmresLeft) {
  WlsProblem p = make_problem(gen_randsvd(100, 10, 1e2, 3), 4);
  p.D.setOnes();
  const RefinementResult r =
      solve_wlsir(p, PrecisionConfig::make(fp16, fp32, fp64), Method::fgmres_left, inner());
  EXPECT_TRUE(r.converged);
  EXPECT_LE(*r.ferr_vs_oracle, 1e-6);
}

TEST(SolveWlsir, EstimateBoundsForwardError) {
  const PrecisionConfig pc = PrecisionConfig::make(fp16, fp32, fp64);
  for (int j : {1, 2}) {
    const WlsProblem p = fig_problem(j, 5);
    const RefinementResult r = solve_wlsir(p, pc, Method::fgmres_left, inner());
    ASSERT_TRUE(r.converged);
    EXPECT_LE(*r.ferr_aug_vs_oracle, 100 * r.ferr_estimate);
  }
}

TEST(SolveWlsir, ResidualDecreasesOnConvergedRun) {
  const WlsProblem p = fig_problem(2, 7);
  const RefinementResult r = solve_wlsir(p, PrecisionConfig::make(fp32, fp64, fp128r),
                                         Method::fgmres_left, inner());
  ASSERT_TRUE(r.converged);
  for (std::size_t i = 1; i < r.history.size(); ++i)
    EXPECT_LE(r.history[i].aug_residual_inf, r.history[i - 1].aug_residual_inf);
}

TEST(SolveWlsir, DoubleMethodsAgree) {
  const WlsProblem p = make_problem(gen_randsvd(40, 6, 10.0, 8), 9);
  const PrecisionConfig pc{fp64, fp64, fp64, fp64};
  const RefinementResult a = solve_wlsir(p, pc, Method::lsir, inner());
  const RefinementResult b = solve_wlsir(p, pc, Method::fgmres_left, inner());
  EXPECT_LE((a.x - b.x).cwiseAbs().maxCoeff() / a.x.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SolveWlsir, ExactStartStopsAfterOneCorrection) {
  const WlsProblem p = make_problem(gen_randsvd(30, 4, 10.0, 10), 11);
  const RefinementResult r =
      solve_wlsir(p, {fp64, fp64, fp128r, fp64}, Method::lsir, inner());
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(SolveWlsir, ConsistentSystem) {
  WlsProblem p = make_problem(gen_randsvd(30, 4, 10.0, 12), 13);
  const Vector xt = (Vector(4) << 1, -2, 0.5, 4).finished();
  p.A = round_matrix(p.A, fp32);
  // b = A x_true exactly representable: use a dyadic A.
  for (Eigen::Index k = 0; k < p.A.size(); ++k)
    p.A.data()[k] = std::ldexp(std::round(std::ldexp(p.A.data()[k], 8)), -8);
  p.b = p.A * xt;
  p.D = weight_for(p.A);
  p.alpha = default_alpha(p.A);
  const RefinementResult r =
      solve_wlsir(p, PrecisionConfig::make(fp16, fp32, fp64), Method::fgmres_left, inner());
  EXPECT_TRUE(r.converged);
  EXPECT_LE((r.x - xt).cwiseAbs().maxCoeff(), 10 * fp32.unit_roundoff() * 4);
  EXPECT_LE(r.y.cwiseAbs().maxCoeff(), 1e-4 * p.D.maxCoeff());
}

TEST(SolveWlsir, YConsistency) {
  const WlsProblem p = make_problem(gen_randsvd(40, 5, 10.0, 14), 15);
  const RefinementResult r =
      solve_wlsir(p, PrecisionConfig::make(fp32, fp64, fp128r), Method::fgmres_split, inner());
  ASSERT_TRUE(r.converged);
  EXPECT_LE(y_mismatch(p, r), 1e3 * fp64.unit_roundoff());
}

TEST(SolveWlsir, CompensatedApplication) {
  const WlsProblem p = fig_problem(2, 16);
  RefinementOptions o;
  o.compensated_apply = true;
  const RefinementResult r = solve_wlsir(p, PrecisionConfig::make(fp16, fp32, fp64),
                                         Method::fgmres_split, inner(), o);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(*r.ferr_vs_oracle, 1e-6);
}

TEST(SolveWlsir, HalfOverflowInInitialSolveFallsBackToZero) {
  // The solution has entries near 1e6, beyond the half range.
  WlsProblem p = make_problem(gen_randsvd(40, 4, 10.0, 17), 18);
  p.b *= 1e6;
  for (Method m : {Method::lsir, Method::fgmres_left, Method::fgmres_split}) {
    const RefinementResult r =
        solve_wlsir(p, PrecisionConfig::make(fp16, fp32, fp64), m, inner());
    EXPECT_TRUE(r.initial_overflow) << method_name(m);
    EXPECT_TRUE(r.converged) << method_name(m);
    EXPECT_LE(*r.ferr_vs_oracle, 1e-6) << method_name(m);
  }
}

TEST(SolveWlsir, InvalidPrecisionOrder) {
  const WlsProblem p = fig_problem(1);
  EXPECT_THROW(solve_wlsir(p, {fp64, fp16, fp64, fp16}, Method::lsir, inner()), Error);
}

TEST(SolveWlsir, HistoryJsonl) {
  const WlsProblem p = fig_problem(1);
  const RefinementResult r =
      solve_wlsir(p, PrecisionConfig::make(fp32, fp64, fp128r), Method::fgmres_left, inner());
  std::ostringstream os;
  r.write_jsonl(os);
  const std::string s = os.str();
  EXPECT_EQ(static_cast<int>(std::count(s.begin(), s.end(), '\n')), r.iterations);
  EXPECT_NE(s.find("\"step\":1,"), std::string::npos);
}
