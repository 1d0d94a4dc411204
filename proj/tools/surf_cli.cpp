// surf: command-line front end for ridge estimation runs and experiments.
//
// Exit codes: 0 success, 1 usage error, 2 runtime or data error.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "surf/experiments.hpp"
#include "surf/io.hpp"
#include "surf/ridge.hpp"
#include "surf/synth.hpp"

namespace {

using namespace surf;

void add_surf_flags(CLI::App *cmd, SurfConfig &cfg, std::optional<double> &bandwidth) {
  cmd->add_option("--d", cfg.d, "Ridge dimension")->capture_default_str();
  cmd->add_option("--bandwidth", bandwidth, "Kernel bandwidth (default: Silverman)");
  cmd->add_option("--threshold", cfg.threshold_frac,
                  "Denoise below this fraction of the max mesh density")
      ->capture_default_str();
  cmd->add_flag("--log,!--no-log", cfg.use_log, "Run SCMS on log density (default on)");
  cmd->add_option("--step-tol", cfg.step_tol)->capture_default_str();
  cmd->add_option("--grad-tol", cfg.grad_tol)->capture_default_str();
  cmd->add_option("--max-iter", cfg.max_iter)->capture_default_str();
}

std::string dump(const Json &j) { return j.dump(2) + "\n"; }

ManifoldSpec circle_at_origin(double r) {
  return ManifoldSpec::circle(Vector::Zero(2), r);
}

Vector parse_point(const std::string &text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    v.push_back(std::stod(tok));
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Density ridge estimation with subspace-constrained mean shift"};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);

  // generate
  auto *gen = app.add_subcommand("generate", "Sample a synthetic point cloud");
  std::string model_name;
  double gen_r = 3, gen_sigma = 0.5, gen_eta = 1, gen_clutter = 0.2, gen_a = 0;
  Eigen::Index gen_n = 1000;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_out = "points";
  bool gen_header = false;
  gen->add_option("--model", model_name, "circle | cosmic-web")
      ->required()
      ->check(CLI::IsMember({"circle", "cosmic-web"}));
  gen->add_option("--r", gen_r, "Circle radius")->capture_default_str();
  gen->add_option("--sigma", gen_sigma, "Noise scale")->capture_default_str();
  gen->add_option("--eta", gen_eta, "Signal fraction (circle)")->capture_default_str();
  gen->add_option("--clutter", gen_clutter, "Clutter fraction (cosmic-web)")->capture_default_str();
  gen->add_option("--weight-a", gen_a, "Circle weight 1 + a cos(theta)")->capture_default_str();
  gen->add_option("--n", gen_n, "Sample size")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->required();
  gen->add_option("--out", gen_out, "Output prefix (<out>.csv, <out>.manifest.json)")
      ->capture_default_str();
  gen->add_flag("--header", gen_header, "Write an x0,x1,... header row");

  // surf
  auto *surf_cmd = app.add_subcommand("surf", "Estimate a ridge from a point CSV");
  std::string surf_in, surf_mesh, surf_out = "ridge";
  SurfConfig surf_cfg;
  std::optional<double> surf_bw;
  surf_cmd->add_option("input", surf_in, "Point CSV")->required();
  add_surf_flags(surf_cmd, surf_cfg, surf_bw);
  surf_cmd->add_option("--mesh", surf_mesh, "Mesh CSV (default: the data)");
  surf_cmd->add_option("--out", surf_out, "Output prefix (<out>.csv, <out>.json)")
      ->capture_default_str();

  // eval-density
  auto *evd = app.add_subcommand("eval-density", "Print density derivatives as JSON");
  std::string evd_data, evd_model, evd_points;
  std::optional<double> evd_bw;
  std::vector<std::string> evd_at;
  bool evd_log = false, evd_hprime = false;
  evd->add_option("data", evd_data, "Point CSV for a kde model");
  evd->add_option("--model", evd_model, "Model JSON (mixture, or kde with data)");
  evd->add_option("--bandwidth", evd_bw, "Kernel bandwidth (default: Silverman)");
  evd->add_option("--at", evd_at, "Query point, comma separated (repeatable)");
  evd->add_option("--points", evd_points, "CSV of query points");
  evd->add_flag("--log", evd_log, "Derivatives of log p");
  evd->add_flag("--hprime", evd_hprime, "Include the Hessian derivative");

  // hausdorff
  auto *haus = app.add_subcommand("hausdorff", "Hausdorff distance between two CSVs");
  std::string haus_a, haus_b;
  haus->add_option("a", haus_a)->required();
  haus->add_option("b", haus_b)->required();

  // rate
  auto *rate = app.add_subcommand("rate", "Ridge error against sample size");
  std::vector<Eigen::Index> rate_grid{500, 2000, 8000};
  int rate_reps = 5;
  double rate_r = 3, rate_sigma = 0.5, rate_eta = 1;
  std::optional<std::uint64_t> rate_seed;
  std::string rate_ref = "oracle", rate_mesh = "probes", rate_out = "rate.json", rate_csv;
  RateOptions rate_opts;
  std::optional<double> rate_delta;
  SurfConfig rate_cfg;
  rate_cfg.threshold_frac = 0.25;
  std::optional<double> rate_bw;
  bool rate_timing = false;
  rate->add_option("--n-grid", rate_grid)->delimiter(',')->capture_default_str();
  rate->add_option("--replications", rate_reps)->capture_default_str();
  rate->add_option("--r", rate_r)->capture_default_str();
  rate->add_option("--sigma", rate_sigma)->capture_default_str();
  rate->add_option("--eta", rate_eta)->capture_default_str();
  rate->add_option("--seed", rate_seed, "Base seed")->required();
  rate->add_option("--reference", rate_ref, "oracle | manifold")
      ->check(CLI::IsMember({"oracle", "manifold"}))
      ->capture_default_str();
  rate->add_option("--mesh", rate_mesh, "probes | data")
      ->check(CLI::IsMember({"probes", "data"}))
      ->capture_default_str();
  rate->add_option("--probes", rate_opts.probe_count)->capture_default_str();
  rate->add_option("--oracle-m", rate_opts.oracle_components)->capture_default_str();
  rate->add_option("--delta", rate_delta, "Restriction radius around the reference");
  add_surf_flags(rate, rate_cfg, rate_bw);
  rate->add_option("--out", rate_out)->capture_default_str();
  rate->add_option("--csv", rate_csv, "Also write one CSV row per cell");
  rate->add_flag("--timing", rate_timing, "Include per-cell runtimes");

  // bias
  auto *bias = app.add_subcommand("bias", "Surrogate ridge bias against sigma");
  std::vector<double> bias_grid{0.4, 0.2, 0.1};
  double bias_r = 3;
  Eigen::Index bias_m = 2048;
  int bias_d = 1;
  bool bias_log = true, bias_timing = false;
  BiasOptions bias_opts;
  std::string bias_out = "bias.json", bias_csv;
  bias->add_option("--sigma-grid", bias_grid)->delimiter(',')->capture_default_str();
  bias->add_option("--r", bias_r)->capture_default_str();
  bias->add_option("--m", bias_m, "Quadrature components")->capture_default_str();
  bias->add_option("--d", bias_d)->capture_default_str();
  bias->add_flag("--log,!--no-log", bias_log);
  bias->add_option("--probes", bias_opts.probe_count)->capture_default_str();
  bias->add_option("--weight-a", bias_opts.weight.cosine_amplitude)->capture_default_str();
  bias->add_option("--out", bias_out)->capture_default_str();
  bias->add_option("--csv", bias_csv);
  bias->add_flag("--timing", bias_timing);

  // sweep
  auto *sweep = app.add_subcommand("sweep", "Bandwidth sweep on a point CSV");
  std::string sweep_in, sweep_out = "sweep.json", sweep_csv;
  std::vector<double> sweep_h, sweep_factors{2, 1, 0.5, 0.25, 0.125};
  double sweep_eps = 0.15;
  std::optional<double> sweep_r;
  SurfConfig sweep_cfg;
  sweep_cfg.threshold_frac = 0.25;
  std::optional<double> sweep_bw;
  bool sweep_timing = false;
  sweep->add_option("input", sweep_in, "Point CSV")->required();
  sweep->add_option("--h-grid", sweep_h, "Absolute bandwidths")->delimiter(',');
  sweep->add_option("--h-factors", sweep_factors, "Multiples of the Silverman bandwidth")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--eps", sweep_eps, "Dilation radius for component counts")
      ->capture_default_str();
  sweep->add_option("--r", sweep_r, "Ground-truth circle radius (centered at origin)");
  add_surf_flags(sweep, sweep_cfg, sweep_bw);
  sweep->add_option("--out", sweep_out)->capture_default_str();
  sweep->add_option("--csv", sweep_csv);
  sweep->add_flag("--timing", sweep_timing);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      HiddenManifoldModel model{circle_at_origin(1), {}, gen_sigma, gen_eta, {}, *gen_seed};
      if (model_name == "circle") {
        model.manifold = circle_at_origin(gen_r);
        model.weight.cosine_amplitude = gen_a;
        model.box = bounding_box(model.manifold, std::max(4 * gen_sigma, 1.0));
      } else {
        auto web = cosmic_web(*gen_seed, 1, default_cosmic_web_layout(), gen_sigma, gen_clutter);
        model = web.model;
      }
      const auto pts = sample(model, gen_n, threads);
      write_points_csv(gen_out + ".csv", pts, gen_header);
      Json manifest{{"generator", model_name}, {"n", gen_n}, {"model", hidden_model_to_json(model)}};
      write_text_file(gen_out + ".manifest.json", dump(manifest));
    } else if (*surf_cmd) {
      surf_cfg.bandwidth = surf_bw;
      const auto data = read_points_csv(surf_in);
      std::optional<PointCloud> mesh;
      if (!surf_mesh.empty())
        mesh = read_points_csv(surf_mesh);
      const auto est = surf::surf(data, surf_cfg, mesh, threads);
      write_points_csv(surf_out + ".csv", est.ridge_points);
      auto side = ridge_to_json(est);
      side["input"] = surf_in;
      side["mesh"] = surf_mesh.empty() ? Json(nullptr) : Json(surf_mesh);
      side["model"] = {{"kind", "kde"}, {"bandwidth", *est.config.bandwidth},
                       {"n", data.size()}, {"dim", data.dim()}};
      write_text_file(surf_out + ".json", dump(side));
    } else if (*evd) {
      std::optional<PointCloud> data;
      if (!evd_data.empty())
        data = read_points_csv(evd_data);
      std::optional<DensityModel> model;
      if (!evd_model.empty()) {
        std::ifstream in(evd_model);
        if (!in)
          throw DataError("cannot open " + evd_model);
        model = model_from_json(Json::parse(in), data);
      } else if (data) {
        model = DensityModel::kde(*data, evd_bw ? *evd_bw : silverman_bandwidth(*data));
      } else {
        std::cerr << "eval-density: give a data CSV or --model\n";
        return 1;
      }
      std::vector<Vector> queries;
      for (const auto &s : evd_at)
        queries.push_back(parse_point(s));
      if (!evd_points.empty()) {
        const auto q = read_points_csv(evd_points);
        for (Eigen::Index i = 0; i < q.size(); ++i)
          queries.emplace_back(q.point(i));
      }
      if (queries.empty()) {
        std::cerr << "eval-density: no query points (use --at or --points)\n";
        return 1;
      }
      Json out{{"model", model_to_json(*model)}, {"log", evd_log}, {"results", Json::array()}};
      for (const auto &x : queries) {
        if (x.size() != model->dim())
          throw DomainError("query point dimension does not match the model");
        const auto info = evd_log ? model->log_eval(x, evd_hprime) : model->eval(x, evd_hprime);
        out["results"].push_back(local_info_to_json(x, info));
      }
      std::cout << dump(out);
    } else if (*haus) {
      const auto a = read_points_csv(haus_a);
      const auto b = read_points_csv(haus_b);
      std::cout << format_double(hausdorff(a, b)) << "\n";
    } else if (*rate) {
      rate_cfg.bandwidth = rate_bw;
      HiddenManifoldModel model{circle_at_origin(rate_r), {}, rate_sigma, rate_eta,
                                bounding_box(circle_at_origin(rate_r),
                                             std::max(4 * rate_sigma, 1.0)),
                                *rate_seed};
      rate_opts.reference =
          rate_ref == "oracle" ? RateReference::oracle_ridge : RateReference::manifold;
      rate_opts.mesh = rate_mesh == "probes" ? RateMesh::probes : RateMesh::data;
      rate_opts.delta_restrict = rate_delta;
      rate_opts.threads = threads;
      const auto report = rate_experiment(rate_grid, rate_reps, model, rate_cfg, rate_opts);
      write_text_file(rate_out, dump(report.to_json(rate_timing)));
      if (!rate_csv.empty())
        write_text_file(rate_csv, report.to_csv(rate_timing));
    } else if (*bias) {
      bias_opts.threads = threads;
      const auto report =
          bias_experiment(bias_grid, circle_at_origin(bias_r), bias_m, bias_d, bias_log, bias_opts);
      write_text_file(bias_out, dump(report.to_json(bias_timing)));
      if (!bias_csv.empty())
        write_text_file(bias_csv, report.to_csv(bias_timing));
    } else if (*sweep) {
      const auto data = read_points_csv(sweep_in);
      std::vector<double> grid = sweep_h;
      const double h_ref = silverman_bandwidth(data);
      if (grid.empty())
        for (double f : sweep_factors)
          grid.push_back(f * h_ref);
      SweepOptions opts;
      opts.threads = threads;
      if (sweep_r)
        opts.truth = circle_at_origin(*sweep_r);
      auto report = bandwidth_sweep(grid, data, sweep_cfg, sweep_eps, opts);
      report.config["input"] = sweep_in;
      report.config["silverman_bandwidth"] = h_ref;
      write_text_file(sweep_out, dump(report.to_json(sweep_timing)));
      if (!sweep_csv.empty())
        write_text_file(sweep_csv, report.to_csv(sweep_timing));
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
