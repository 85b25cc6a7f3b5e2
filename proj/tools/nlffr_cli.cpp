#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlffr/errors.hpp"
#include "nlffr/inference.hpp"
#include "nlffr/io.hpp"
#include "nlffr/parallel.hpp"
#include "nlffr/regression.hpp"
#include "nlffr/sim.hpp"

namespace {

using nlffr::io::format_double;

struct FitArgs {
  std::string data;
  std::string config;
  std::string model;
  std::string report;
};

struct PredictArgs {
  std::string model;
  std::string newx;
  std::string out;
  int grid_size = 101;
  double alpha = 0.05;
  bool pointwise = false;
  bool band = false;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
};

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::string reps;
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    nlffr::io::write_file(path, text);
  }
}

std::string default_report_path(const std::string& model_path) { return model_path + ".report.json"; }

std::string default_reps_path(const std::string& out) {
  const std::string ext = ".csv";
  if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0) {
    return out.substr(0, out.size() - ext.size()) + "_reps.csv";
  }
  return out + "_reps.csv";
}

int cmd_fit(const FitArgs& a) {
  nlffr::FitConfig config = nlffr::default_fit_config(nlffr::TimeKernelKind::GaussianRBF);
  if (!a.config.empty()) config = nlffr::io::read_run_config_file(a.config).fit;
  auto data = nlffr::io::read_long_csv_file(a.data);
  nlffr::io::pair_by_subject(data);
  const auto model = nlffr::fit(data.x, data.y, config);
  nlffr::io::save_model(model, a.model);
  nlffr::io::write_file(a.report.empty() ? default_report_path(a.model) : a.report,
                        nlffr::io::fit_report_json(model));
  return 0;
}

int cmd_predict(const PredictArgs& a) {
  if (a.grid_size < 2) throw nlffr::ValidationError("--grid-size must be at least 2");
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw nlffr::ValidationError("--alpha must lie in (0, 1)");
  const auto model = nlffr::io::load_model(a.model);
  const auto data = nlffr::io::read_long_csv_file(a.newx);
  if (data.x.empty()) throw nlffr::ValidationError(a.newx + ": no covariate rows (variable x)");

  std::vector<double> grid(static_cast<std::size_t>(a.grid_size));
  for (int g = 0; g < a.grid_size; ++g) grid[g] = static_cast<double>(g) / (a.grid_size - 1);

  std::ostringstream out;
  out << "subject_id,t,y_hat";
  if (a.pointwise) out << ",pw_lo,pw_hi";
  if (a.band) out << ",band_lo,band_hi";
  out << "\n";

  if (a.pointwise || a.band) {
    const nlffr::BandBuilder builder(model, grid, a.alpha, a.n_paths, a.seed);
    for (const auto& x0 : data.x) {
      const auto r = builder(x0);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto i = static_cast<Eigen::Index>(g);
        out << x0.subject_id << ',' << format_double(grid[g]) << ',' << format_double(r.center(i));
        if (a.pointwise) {
          out << ',' << format_double(r.center(i) - r.pointwise_halfwidth(i)) << ','
              << format_double(r.center(i) + r.pointwise_halfwidth(i));
        }
        if (a.band) {
          out << ',' << format_double(r.center(i) - r.band_halfwidth) << ','
              << format_double(r.center(i) + r.band_halfwidth);
        }
        out << "\n";
      }
    }
  } else {
    const nlffr::GridPredictor predictor(model, grid);
    for (const auto& x0 : data.x) {
      const Eigen::VectorXd yhat = predictor(x0);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        out << x0.subject_id << ',' << format_double(grid[g]) << ','
            << format_double(yhat(static_cast<Eigen::Index>(g))) << "\n";
      }
    }
  }
  emit(a.out, out.str());
  return 0;
}

int cmd_simulate(const SimulateArgs& a) {
  const auto scenarios = nlffr::io::read_scenarios_file(a.scenario);
  std::vector<nlffr::sim::ScenarioResult> results;
  for (const auto& cfg : scenarios) results.push_back(nlffr::sim::run_scenario(cfg));
  nlffr::io::write_file(a.out, nlffr::io::scenario_summary_csv(results));
  nlffr::io::write_file(a.reps.empty() ? default_reps_path(a.out) : a.reps,
                        nlffr::io::scenario_reps_csv(results));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear function-on-function regression"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Maximum worker threads (default: all cores)")->check(CLI::NonNegativeNumber);

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model from long-format curve data");
  fit_cmd->add_option("--data", fit_args.data, "CSV with subject_id,variable,t,value")->required();
  fit_cmd->add_option("--config", fit_args.config, "JSON run config");
  fit_cmd->add_option("--model", fit_args.model, "Output model artifact")->required();
  fit_cmd->add_option("--report", fit_args.report, "Output fit report (default: <model>.report.json)");

  PredictArgs pred_args;
  auto* pred_cmd = app.add_subcommand("predict", "Predict response curves for new covariates");
  pred_cmd->add_option("--model", pred_args.model, "Model artifact")->required();
  pred_cmd->add_option("--newx", pred_args.newx, "CSV with covariate rows")->required();
  pred_cmd->add_option("--grid-size", pred_args.grid_size, "Equally spaced points on [0,1]");
  pred_cmd->add_option("--alpha", pred_args.alpha, "Significance level");
  pred_cmd->add_flag("--pointwise", pred_args.pointwise, "Add pointwise interval columns");
  pred_cmd->add_flag("--band", pred_args.band, "Add simultaneous band columns");
  pred_cmd->add_option("--n-paths", pred_args.n_paths, "Gaussian paths for the band quantile");
  pred_cmd->add_option("--seed", pred_args.seed, "Seed for the band quantile");
  pred_cmd->add_option("--out", pred_args.out, "Output CSV (default: stdout)");

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Run simulation scenarios");
  sim_cmd->add_option("--scenario", sim_args.scenario, "JSON scenario config")->required();
  sim_cmd->add_option("--out", sim_args.out, "Summary CSV")->required();
  sim_cmd->add_option("--reps", sim_args.reps, "Per-replication CSV (default: <out>_reps.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    nlffr::set_num_threads(threads);
    if (*fit_cmd) return cmd_fit(fit_args);
    if (*pred_cmd) return cmd_predict(pred_args);
    if (*sim_cmd) return cmd_simulate(sim_args);
  } catch (const nlffr::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlffr::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const nlffr::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
