// SPDX-License-Identifier: Apache-2.0
//
// Experiment drivers: condition numbers of the preconditioned augmented
// systems versus the conditioning of the weights, as CSV tables and SVG
// line charts.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "wlsir/augmented.hpp"
#include "wlsir/densela.hpp"
#include "wlsir/fpsim.hpp"
#include "wlsir/matrix_market.hpp"
#include "wlsir/problems.hpp"

namespace wlsir {

enum class ExperimentKind { fig1, table2, suitesparse };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::fig1;
  std::uint64_t seed = 1;
  std::vector<int> scalings{1, 2, 4, 6, 8, 10, 12, 14, 16};
  std::vector<FpFormat> factor_precisions{fp16, fp32, fp64};
  std::optional<FpFormat> working;  ///< default: single for fig1, else double
  FpFormat table2_factor = fp32;
  std::optional<ScaleDirection> direction;  ///< default: forward for suitesparse, else inverse
  std::optional<WeightRule> weights;        ///< default: weighted
  std::string matrix_path;
  std::string output_dir = ".";
  bool plot = false;

  FpFormat working_precision() const {
    if (working) return *working;
    return experiment == ExperimentKind::fig1 ? fp32 : fp64;
  }

  ScaleDirection scale_direction() const {
    if (direction) return *direction;
    return experiment == ExperimentKind::suitesparse ? ScaleDirection::forward
                                                     : ScaleDirection::inverse;
  }
  WeightRule weight_rule() const { return weights.value_or(WeightRule::weighted); }

  void validate() const {
    if (scalings.empty())
      throw Error(ErrorCode::invalid_argument, "scaling set must be nonempty");
    for (int j : scalings)
      if (j < 1) throw Error(ErrorCode::invalid_argument, "scalings must be >= 1");
    if (factor_precisions.empty())
      throw Error(ErrorCode::invalid_argument, "precision set must be nonempty");
    if (experiment == ExperimentKind::suitesparse && matrix_path.empty())
      throw Error(ErrorCode::invalid_argument, "suitesparse needs --matrix");
  }
};

// ---------------------------------------------------------------------------
// CSV

inline std::string scaling_meta(const ExperimentConfig& cfg) {
  std::string s = cfg.scale_direction() == ScaleDirection::inverse
                      ? "scaling=inverse (A = S^-1 A')"
                      : "scaling=forward (A = S A')";
  s += cfg.weight_rule() == WeightRule::weighted ? " weights=weighted (D = 1/rowmax^2)"
                                                 : " weights=scaled (D = 1/rowmax)";
  return s;
}

inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> meta;  ///< written as "# " lines
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int failed_cells = 0;

  void write(std::ostream& os) const {
    for (const auto& m : meta) os << "# " << m << '\n';
    write_row(os, header);
    for (const auto& r : rows) write_row(os, r);
  }

  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error(ErrorCode::invalid_argument, "no column '" + name + "'");
  }

  double value(std::size_t row, const std::string& name) const {
    const std::string& s = rows.at(row).at(column(name));
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    return std::stod(s);
  }

  const std::string& text(std::size_t row, const std::string& name) const {
    return rows.at(row).at(column(name));
  }

 private:
  static void write_row(std::ostream& os, const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
};

inline std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

// ---------------------------------------------------------------------------
// SVG log-log charts

struct PlotSeries {
  std::string label;
  std::string color;
  std::string dash;  ///< stroke-dasharray, empty for solid
  std::vector<std::pair<double, double>> points;
};

inline std::string render_loglog_svg(const std::string& title,
                                     const std::string& xlabel,
                                     const std::string& ylabel,
                                     const std::vector<PlotSeries>& series) {
  double xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (!(x > 0 && y > 0 && std::isfinite(x) && std::isfinite(y))) continue;
      xmin = std::min(xmin, std::log10(x));
      xmax = std::max(xmax, std::log10(x));
      ymin = std::min(ymin, std::log10(y));
      ymax = std::max(ymax, std::log10(y));
    }
  if (xmin > xmax) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
  xmin = std::floor(xmin); xmax = std::ceil(xmax);
  ymin = std::floor(ymin); ymax = std::ceil(ymax);
  if (xmax == xmin) xmax += 1;
  if (ymax == ymin) ymax += 1;

  const double w = 640, h = 480, l = 70, r = 170, t = 40, b = 60;
  const auto px = [&](double x) { return l + (std::log10(x) - xmin) / (xmax - xmin) * (w - l - r); };
  const auto py = [&](double y) { return h - b - (std::log10(y) - ymin) / (ymax - ymin) * (h - t - b); };
  std::ostringstream os;
  char buf[160];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">"
     << title << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                l, t, w - l - r, h - t - b);
  os << buf;
  const int xstep = std::max(1, static_cast<int>((xmax - xmin) / 8));
  for (int e = static_cast<int>(xmin); e <= static_cast<int>(xmax); e += xstep) {
    const double x = px(std::pow(10.0, e));
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">1e%d</text>\n", x,
                  h - b + 15, e);
    os << buf;
  }
  const int ystep = std::max(1, static_cast<int>((ymax - ymin) / 8));
  for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); e += ystep) {
    const double y = py(std::pow(10.0, e));
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">1e%d</text>\n", l - 5,
                  y + 4, e);
    os << buf;
  }
  os << "<text x=\"" << (l + (w - l - r) / 2) << "\" y=\"" << h - 20
     << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text x=\"15\" y=\"" << (t + (h - t - b) / 2) << "\" transform=\"rotate(-90 15 "
     << (t + (h - t - b) / 2) << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  int idx = 0;
  for (const auto& s : series) {
    std::string pts;
    for (auto [x, y] : s.points) {
      if (!(x > 0 && y > 0 && std::isfinite(x) && std::isfinite(y))) continue;
      std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(x), py(y));
      pts += buf;
    }
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (!s.dash.empty()) os << " stroke-dasharray=\"" << s.dash << "\"";
    os << " points=\"" << pts << "\"/>\n";
    const double ly = t + 10 + 16 * idx++;
    os << "<line x1=\"" << w - r + 10 << "\" y1=\"" << ly << "\" x2=\"" << w - r + 35
       << "\" y2=\"" << ly << "\" stroke=\"" << s.color << "\"";
    if (!s.dash.empty()) os << " stroke-dasharray=\"" << s.dash << "\"";
    os << "/>\n<text x=\"" << w - r + 40 << "\" y=\"" << ly + 4 << "\">" << s.label
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline const char* precision_color(const FpFormat& f) {
  switch (f.name) {
    case FormatName::half: return "red";
    case FormatName::single: return "green";
    default: return "blue";
  }
}

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentOutput {
  CsvTable table;
  std::vector<std::pair<std::string, std::string>> svgs;  ///< (file name, content)
};

namespace detail {

inline std::string gate_str(bool g) { return g ? "1" : "0"; }

inline std::vector<std::string> common_meta(const ExperimentConfig& cfg,
                                            const std::string& name) {
  std::string js, ufs;
  for (int j : cfg.scalings) js += (js.empty() ? "" : " ") + std::to_string(j);
  for (const auto& f : cfg.factor_precisions)
    ufs += (ufs.empty() ? "" : " ") + std::string(format_name(f));
  return {"experiment=" + name, "seed=" + std::to_string(cfg.seed),
          "working_precision=" + std::string(format_name(cfg.working_precision())),
          "scalings=" + js, "factor_precisions=" + ufs};
}

}  // namespace detail

/// A' = randsvd(100, 10, 1e2); for each j, A = S^{-1} A', D row-equilibrates
/// A, alpha = sigma_min(A)/sqrt(2); for each u_f the left QR preconditioner,
/// its measured kappa_inf(M_l^{-1} A~) and the condition bounds.
inline ExperimentOutput run_fig1(const ExperimentConfig& cfg) {
  cfg.validate();
  const FpFormat u = cfg.working_precision();
  const Matrix a0 = gen_randsvd(100, 10, 1e2, cfg.seed);
  ExperimentOutput out;
  CsvTable& t = out.table;
  t.meta = detail::common_meta(cfg, "fig1");
  t.meta.push_back("matrix=randsvd(100,10,1e2) " + scaling_meta(cfg));
  t.header = {"seed", "j", "kappa_D", "u_f", "u", "preconditioner", "kappa_aug",
              "kappa_precond", "bound_rho", "bound_sqrt_kd", "bound_measured_E",
              "rho", "sqrt_kappa2_D", "inv_u", "gate", "status"};
  std::vector<PlotSeries> series;
  for (const auto& uf : cfg.factor_precisions) {
    PlotSeries meas{std::string("M_l ") + std::string(format_name(uf)),
                    precision_color(uf), "", {}};
    PlotSeries bnd{std::string("bound ") + std::string(format_name(uf)),
                   precision_color(uf), "2,3", {}};
    series.push_back(meas);
    series.push_back(bnd);
  }
  PlotSeries aug{"kappa(A~)", "black", "8,4", {}};
  PlotSeries invu{"1/u", "black", "1,3", {}};

  for (int j : cfg.scalings) {
    const Matrix a = row_scale(a0, j, cfg.scale_direction());
    WlsProblem p = make_problem(a, cfg.seed + 1, {}, cfg.weight_rule());
    p.meta = {ProblemSource::randsvd, cfg.seed, j};
    const double kd = kappa_diag(p.D);
    double kaug = std::numeric_limits<double>::quiet_NaN();
    std::string aug_status = "ok";
    AugmentedSystem s;
    try {
      s = build_augmented(p);
      kaug = static_cast<double>(kappa_inf(s.op));
    } catch (const std::exception& e) {
      aug_status = sanitize(e.what());
    }
    aug.points.emplace_back(kd, kaug);
    invu.points.emplace_back(kd, 1.0 / u.unit_roundoff());
    for (std::size_t f = 0; f < cfg.factor_precisions.size(); ++f) {
      const FpFormat uf = cfg.factor_precisions[f];
      const double nan = std::numeric_limits<double>::quiet_NaN();
      double kl = nan, brho = nan, bkd = nan, be = nan, rho = nan, skd = nan;
      std::string status = aug_status;
      if (status == "ok") {
        try {
          const QrFactors qr = house_qr(p.A, uf);
          kl = static_cast<double>(kappa_left_preconditioned(s.op, qr, p.D, p.alpha));
          const LeftBound lb = bound_left(p.A, p.D, qr);
          brho = lb.bound;
          bkd = lb.bound_sqrt_kd;
          be = lb.bound_measured_e;
          rho = lb.rho;
          skd = lb.sqrt_kappa_d;
        } catch (const std::exception& e) {
          status = sanitize(e.what());
        }
      }
      if (status != "ok") ++t.failed_cells;
      series[2 * f].points.emplace_back(kd, kl);
      series[2 * f + 1].points.emplace_back(kd, brho);
      const bool gate = status == "ok" && convergence_gate(kl, u.unit_roundoff());
      t.rows.push_back({std::to_string(cfg.seed), std::to_string(j), fmt_num(kd),
                        std::string(format_name(uf)), std::string(format_name(u)),
                        "left", fmt_num(kaug), fmt_num(kl), fmt_num(brho),
                        fmt_num(bkd), fmt_num(be), fmt_num(rho), fmt_num(skd),
                        fmt_num(1.0 / u.unit_roundoff()), detail::gate_str(gate),
                        status});
    }
  }
  if (cfg.plot) {
    series.push_back(aug);
    series.push_back(invu);
    out.svgs.emplace_back("fig1.svg",
                          render_loglog_svg("kappa_inf(M_l^-1 A~) vs kappa_inf(D)",
                                            "kappa_inf(D)", "condition number", series));
  }
  return out;
}

/// Same problem family as run_fig1; one row per scaling with both
/// preconditioners factored in cfg.table2_factor.
inline ExperimentOutput run_table2(const ExperimentConfig& cfg) {
  cfg.validate();
  const FpFormat u = cfg.working_precision();
  const FpFormat uf = cfg.table2_factor;
  const Matrix a0 = gen_randsvd(100, 10, 1e2, cfg.seed);
  ExperimentOutput out;
  CsvTable& t = out.table;
  t.meta = detail::common_meta(cfg, "table2");
  t.meta.push_back("matrix=randsvd(100,10,1e2) " + scaling_meta(cfg));
  t.meta.push_back("preconditioner_factor_precision=" + std::string(format_name(uf)));
  // kappa_L is kappa_inf of the split factor L with M_b = L L^T.
  t.header = {"seed", "j", "kappa_D", "u_f", "u", "preconditioner", "kappa2_A",
              "kappa_aug", "kappa_left", "kappa_split", "kappa_L",
              "bound_kinf_split", "bound_ferr_left", "bound_ferr_split",
              "gate_left", "gate_split", "status"};
  for (int j : cfg.scalings) {
    const Matrix a = row_scale(a0, j, cfg.scale_direction());
    WlsProblem p = make_problem(a, cfg.seed + 1, {}, cfg.weight_rule());
    p.meta = {ProblemSource::randsvd, cfg.seed, j};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double k2 = nan;
    BoundReport br;
    br.kappa_aug = br.kappa_left = br.kappa_split = br.kappa_split_factor = nan;
    br.bound_kinf_split = br.bound_ferr_left = br.bound_ferr_fgmres = nan;
    std::string status = "ok";
    try {
      k2 = static_cast<double>(kappa_two(p.A));
      br = evaluate_bounds(p, uf, u);
    } catch (const std::exception& e) {
      status = sanitize(e.what());
      ++t.failed_cells;
    }
    const bool ok = status == "ok";
    t.rows.push_back(
        {std::to_string(cfg.seed), std::to_string(j), fmt_num(kappa_diag(p.D)),
         std::string(format_name(uf)), std::string(format_name(u)), "left|split",
         fmt_num(k2), fmt_num(br.kappa_aug), fmt_num(br.kappa_left),
         fmt_num(br.kappa_split), fmt_num(br.kappa_split_factor),
         fmt_num(br.bound_kinf_split), fmt_num(br.bound_ferr_left),
         fmt_num(br.bound_ferr_fgmres),
         detail::gate_str(ok && convergence_gate(br.kappa_left, u.unit_roundoff())),
         detail::gate_str(ok && br.bound_ferr_fgmres < 1.0), status});
  }
  return out;
}

/// Matrix Market input A'; A = S A' for each j.  For each u_f and both
/// preconditioner families: kappa_inf of the preconditioner (M_l, or the
/// split factor L) and of the preconditioned system.
inline ExperimentOutput run_suitesparse(const ExperimentConfig& cfg) {
  cfg.validate();
  const FpFormat u = cfg.working_precision();
  const MatrixMarketFile mm = read_matrix_market_file(cfg.matrix_path);
  const Matrix& a0 = mm.matrix;
  if (a0.rows() < a0.cols())
    throw Error(ErrorCode::invalid_shape, "suitesparse: matrix must have m >= n");
  const std::string name = std::filesystem::path(cfg.matrix_path).stem().string();
  ExperimentOutput out;
  CsvTable& t = out.table;
  t.meta = detail::common_meta(cfg, "suitesparse");
  t.meta.push_back("matrix=" + name + " " + scaling_meta(cfg));
  double k2 = std::numeric_limits<double>::quiet_NaN();
  try {
    k2 = static_cast<double>(kappa_two(a0));
  } catch (const std::exception&) {
  }
  t.meta.push_back("m=" + std::to_string(a0.rows()) + " n=" + std::to_string(a0.cols()) +
                   " nnz=" + std::to_string(mm.nnz()) + " kappa2=" + fmt_num(k2));
  t.header = {"seed", "j", "kappa_D", "u_f", "u", "preconditioner", "kappa_aug",
              "kappa_precond_factor", "kappa_precond_system", "bound_ferr",
              "gate_system", "gate_factor", "status"};

  std::vector<PlotSeries> factor_series, system_series;
  for (const auto& uf : cfg.factor_precisions) {
    for (const char* fam : {"M_l", "M_b"}) {
      const std::string label = std::string(fam) + " " + std::string(format_name(uf));
      const std::string dash = std::string(fam) == "M_l" ? "" : "6,3";
      factor_series.push_back({label, precision_color(uf), dash, {}});
      system_series.push_back({label, precision_color(uf), dash, {}});
    }
  }
  PlotSeries aug{"kappa(A~)", "black", "8,4", {}};
  PlotSeries invu{"1/u", "black", "1,3", {}};

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int j : cfg.scalings) {
    const Matrix a = row_scale(a0, j, cfg.scale_direction());
    std::string base_status = "ok";
    WlsProblem p;
    AugmentedSystem s;
    double kd = nan, kaug = nan;
    try {
      p = make_problem(a, cfg.seed + 1, {}, cfg.weight_rule());
      p.meta = {ProblemSource::file, cfg.seed, j};
      kd = kappa_diag(p.D);
      s = build_augmented(p);
      kaug = static_cast<double>(kappa_inf(s.op));
    } catch (const std::exception& e) {
      base_status = sanitize(e.what());
    }
    aug.points.emplace_back(kd, kaug);
    invu.points.emplace_back(kd, 1.0 / u.unit_roundoff());
    for (std::size_t f = 0; f < cfg.factor_precisions.size(); ++f) {
      const FpFormat uf = cfg.factor_precisions[f];
      for (int fam = 0; fam < 2; ++fam) {
        double kf = nan, ks = nan, bf = nan;
        std::string status = base_status;
        if (status == "ok") {
          try {
            if (fam == 0) {
              const QrFactors qr = house_qr(p.A, uf);
              kf = static_cast<double>(kappa_inf(assemble_left_preconditioner(qr, p.D, p.alpha)));
              ks = static_cast<double>(kappa_left_preconditioned(s.op, qr, p.D, p.alpha));
              bf = bound_ferr_fgmres_left(ks, u.unit_roundoff());
            } else {
              const BlockSplitPrecond bs(p, uf, fp64, fp64);
              kf = static_cast<double>(kappa_inf(bs.assemble_factor()));
              ks = static_cast<double>(kappa_inf(bs.preconditioned_operator(s.op)));
              bf = bound_ferr_fgmres(ks, kf, u.unit_roundoff());
            }
          } catch (const std::exception& e) {
            status = sanitize(e.what());
          }
        }
        if (status != "ok") ++t.failed_cells;
        factor_series[2 * f + fam].points.emplace_back(kd, kf);
        system_series[2 * f + fam].points.emplace_back(kd, ks);
        const bool ok = status == "ok";
        t.rows.push_back({std::to_string(cfg.seed), std::to_string(j), fmt_num(kd),
                          std::string(format_name(uf)), std::string(format_name(u)),
                          fam == 0 ? "left" : "split", fmt_num(kaug), fmt_num(kf),
                          fmt_num(ks), fmt_num(bf),
                          detail::gate_str(ok && convergence_gate(ks, u.unit_roundoff())),
                          detail::gate_str(ok && convergence_gate(kf, u.unit_roundoff())),
                          status});
      }
    }
  }
  if (cfg.plot) {
    factor_series.push_back(invu);
    system_series.push_back(aug);
    system_series.push_back(invu);
    out.svgs.emplace_back(name + "_preconditioners.svg",
                          render_loglog_svg(name + ": kappa_inf of preconditioners",
                                            "kappa_inf(D)", "condition number",
                                            factor_series));
    out.svgs.emplace_back(name + "_systems.svg",
                          render_loglog_svg(name + ": kappa_inf of preconditioned systems",
                                            "kappa_inf(D)", "condition number",
                                            system_series));
  }
  return out;
}

inline ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::fig1: return run_fig1(cfg);
    case ExperimentKind::table2: return run_table2(cfg);
    case ExperimentKind::suitesparse: return run_suitesparse(cfg);
  }
  return {};
}

inline std::string experiment_file_stem(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::fig1: return "fig1";
    case ExperimentKind::table2: return "table2";
    case ExperimentKind::suitesparse:
      return "suitesparse_" + std::filesystem::path(cfg.matrix_path).stem().string();
  }
  return "experiment";
}

/// Writes <stem>.csv and any SVGs into cfg.output_dir; returns the paths.
inline std::vector<std::string> write_experiment(const ExperimentConfig& cfg,
                                                 const ExperimentOutput& out) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  std::vector<std::string> paths;
  const fs::path csv = fs::path(cfg.output_dir) / (experiment_file_stem(cfg) + ".csv");
  {
    std::ofstream os(csv);
    if (!os) throw Error(ErrorCode::io_error, "cannot write " + csv.string());
    out.table.write(os);
  }
  paths.push_back(csv.string());
  for (const auto& [file, content] : out.svgs) {
    const fs::path p = fs::path(cfg.output_dir) / file;
    std::ofstream os(p);
    if (!os) throw Error(ErrorCode::io_error, "cannot write " + p.string());
    os << content;
    paths.push_back(p.string());
  }
  return paths;
}

}  // namespace wlsir
