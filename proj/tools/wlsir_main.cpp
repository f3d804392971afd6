// SPDX-License-Identifier: Apache-2.0
//
// wlsir fig1|table2|suitesparse [options]
//
// Exit status: 0 on success, 2 when some cells failed (recorded as NaN rows),
// 1 on a fatal error.

#include <CLI11.hpp>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "wlsir/experiments.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-precision weighted least-squares preconditioning experiments"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string uf_list = "half,single,double";
  std::string u_name;
  std::string scalings = "1,2,4,6,8,10,12,14,16";
  std::string matrix;
  std::string out_dir = ".";
  std::string table2_uf = "single";
  bool plot = false;
  std::string direction;
  std::string weights;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--uf", uf_list, "factorization precisions (comma list)");
    sub->add_option("--u", u_name, "working precision: single|double");
    sub->add_option("--scalings", scalings, "scaling exponents j (comma list)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--plot", plot, "also write SVG plots");
    sub->add_option("--direction", direction, "row scaling: inverse (S^-1 A') or forward (S A')")
        ->check(CLI::IsMember({"inverse", "forward"}));
    sub->add_option("--weights", weights,
                    "weighted: D^(1/2)A rows have max 1; scaled: D A rows have max 1")
        ->check(CLI::IsMember({"weighted", "scaled"}));
  };
  CLI::App* fig1 = app.add_subcommand("fig1", "kappa(M_l^-1 A~) and bounds vs kappa(D)");
  CLI::App* table2 = app.add_subcommand("table2", "condition numbers of both preconditioners");
  CLI::App* ss = app.add_subcommand(
      "suitesparse",
      "Matrix Market input; ash958 and robot24c1_mat5 are available from "
      "https://sparse.tamu.edu (HB/ash958, Rommes/robot24c1_mat5)");
  add_common(fig1);
  add_common(table2);
  add_common(ss);
  table2->add_option("--factor", table2_uf, "preconditioner factorization precision");
  ss->add_option("--matrix", matrix, "path to a .mtx file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    wlsir::ExperimentConfig cfg;
    if (app.got_subcommand(fig1)) cfg.experiment = wlsir::ExperimentKind::fig1;
    else if (app.got_subcommand(table2)) cfg.experiment = wlsir::ExperimentKind::table2;
    else cfg.experiment = wlsir::ExperimentKind::suitesparse;
    cfg.seed = seed;
    cfg.factor_precisions.clear();
    for (const auto& s : split_list(uf_list))
      cfg.factor_precisions.push_back(wlsir::parse_format(s));
    if (!u_name.empty()) cfg.working = wlsir::parse_format(u_name);
    cfg.scalings.clear();
    for (const auto& s : split_list(scalings)) cfg.scalings.push_back(std::stoi(s));
    cfg.table2_factor = wlsir::parse_format(table2_uf);
    cfg.matrix_path = matrix;
    cfg.output_dir = out_dir;
    cfg.plot = plot;
    if (!direction.empty())
      cfg.direction = direction == "inverse" ? wlsir::ScaleDirection::inverse
                                             : wlsir::ScaleDirection::forward;
    if (!weights.empty())
      cfg.weights = weights == "weighted" ? wlsir::WeightRule::weighted
                                          : wlsir::WeightRule::scaled;

    const wlsir::ExperimentOutput out = wlsir::run_experiment(cfg);
    for (const auto& p : wlsir::write_experiment(cfg, out)) std::cout << p << '\n';
    if (out.table.failed_cells > 0) {
      std::cerr << out.table.failed_cells << " cell(s) failed; see status column\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "wlsir: " << e.what() << '\n';
    return 1;
  }
}
