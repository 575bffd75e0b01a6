#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "svc/dataio.hpp"
#include "svc/dataset.hpp"
#include "svc/gibbs.hpp"
#include "svc/knots.hpp"
#include "svc/simlab.hpp"

namespace svc {

namespace cli_detail {

struct DataFlags {
  std::string path;
  ColumnSpec spec;
  std::string missing_token = "NA";
};

inline void add_data_flags(CLI::App* cmd, DataFlags& flags, bool covariate_flags = true) {
  cmd->add_option("--data", flags.path, "input CSV file")->required();
  cmd->add_option("--x-col", flags.spec.x, "name of the first coordinate column");
  cmd->add_option("--y-col", flags.spec.y, "name of the second coordinate column");
  cmd->add_option("--response", flags.spec.response, "name of the response column");
  if (covariate_flags) {
    cmd->add_option("--covariates", flags.spec.covariates,
                    "covariate column names (default: every remaining column)")
        ->delimiter(',');
    cmd->add_flag("--add-intercept", flags.spec.add_intercept,
                  "prepend an all-ones intercept column");
  }
  cmd->add_option("--missing-token", flags.missing_token, "token marking a missing value");
}

inline std::vector<double> broadcast(std::vector<double> values, Eigen::Index p,
                                     const std::string& flag) {
  if (values.size() == 1 && p > 1) {
    values.assign(static_cast<std::size_t>(p), values.front());
  }
  if (static_cast<Eigen::Index>(values.size()) != p) {
    throw ConfigError(flag + ": expected 1 or " + std::to_string(p) + " values, got " +
                      std::to_string(values.size()));
  }
  return values;
}

inline Matrix read_surface_mean(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("'" + path.string() + "': empty file");
  }
  const auto header = detail::split_csv_line(line);
  std::vector<std::size_t> mean_cols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j].rfind("w_mean_", 0) == 0) {
      mean_cols.push_back(j);
    }
  }
  if (mean_cols.empty()) {
    throw SchemaError("'" + path.string() + "': no w_mean_* columns");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) {
      continue;
    }
    const auto cells = detail::split_csv_line(line);
    std::vector<double> row;
    row.reserve(mean_cols.size());
    for (const std::size_t j : mean_cols) {
      row.push_back(detail::parse_cell(cells.at(j), "NA", rows.size() + 1, header[j]));
    }
    rows.push_back(std::move(row));
  }
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(mean_cols.size()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return out;
}

inline void write_simulation_data_csv(const SyntheticData& synth,
                                      const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  const Eigen::Index p = synth.data.p();
  out << "x,y,Y";
  for (Eigen::Index r = 1; r < p; ++r) {
    out << ",X" << (r + 1);
  }
  for (Eigen::Index r = 0; r < p; ++r) {
    out << ",w_true_" << (r + 1);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < synth.data.n(); ++i) {
    out << detail::format_full(synth.data.coords(i, 0)) << ','
        << detail::format_full(synth.data.coords(i, 1)) << ','
        << detail::format_full(synth.data.y(i));
    for (Eigen::Index r = 1; r < p; ++r) {
      out << ',' << detail::format_full(synth.data.x(i, r));
    }
    for (Eigen::Index r = 0; r < p; ++r) {
      out << ',' << detail::format_full(synth.true_w(i, r));
    }
    out << '\n';
  }
}

inline void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "coefficient,bias,rmse\n";
  for (std::size_t r = 0; r < report.bias.size(); ++r) {
    out << (r + 1) << ',' << detail::format_full(report.bias[r]) << ','
        << detail::format_full(report.rmse[r]) << '\n';
  }
}

}  // namespace cli_detail

/// Command line front end. Subcommands: fit, knots, simulate, predict,
/// summarize. Flags take precedence over a key=value configuration file
/// (--config), which takes precedence over the built-in defaults.
inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Bayesian spatially varying coefficient regression via subset-GP Gibbs sampling"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file");

  // ---- fit ----------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler on a CSV dataset");
  cli_detail::DataFlags fit_data;
  cli_detail::add_data_flags(fit, fit_data);
  std::string knots_path;
  int knot_k = 0;
  std::vector<double> phi_lower;
  std::vector<double> phi_upper;
  std::string fit_out;
  std::int64_t write_stride = 1;
  RunConfig run;
  std::vector<double> sigma_prior_shape{0.001};
  std::vector<double> sigma_prior_scale{0.001};
  double tau_prior_shape = 0.001;
  double tau_prior_scale = 0.001;
  bool freeze_adapt = false;
  fit->add_option("--knots-data", knots_path, "CSV with knot rows (same columns as --data)");
  fit->add_option("--k", knot_k, "auto-select knots: every k-th coordinate per axis");
  fit->add_option("--phi-lower", phi_lower, "lower bound(s) for the phi uniform priors")
      ->required()
      ->delimiter(',');
  fit->add_option("--phi-upper", phi_upper, "upper bound(s) for the phi uniform priors")
      ->required()
      ->delimiter(',');
  fit->add_option("--mcmc", run.mcmc, "number of MCMC iterations");
  fit->add_option("--burn-in", run.burn_in, "iterations discarded before summaries");
  fit->add_option("--thin", run.thin, "store every thin-th iteration");
  fit->add_option("--seed", run.seed, "random seed");
  fit->add_option("--out", fit_out, "output directory")->required();
  fit->add_option("--write-stride", write_stride, "write every stride-th stored draw");
  fit->add_option("--tausq-start", run.tausq_start, "starting value for tau^2");
  fit->add_option("--sigmasq-start", run.sigmasq_start, "starting value(s) for sigma_r^2")
      ->delimiter(',');
  fit->add_option("--phi-start", run.phi_start,
                  "starting value(s) for phi_r (default: bound midpoints)")
      ->delimiter(',');
  fit->add_option("--sigma-prior-shape", sigma_prior_shape,
                  "inverse-gamma shape(s) for the sigma_r^2 priors")
      ->delimiter(',');
  fit->add_option("--sigma-prior-scale", sigma_prior_scale,
                  "inverse-gamma scale(s) for the sigma_r^2 priors")
      ->delimiter(',');
  fit->add_option("--tau-prior-shape", tau_prior_shape, "inverse-gamma shape for the tau^2 prior");
  fit->add_option("--tau-prior-scale", tau_prior_scale, "inverse-gamma scale for the tau^2 prior");
  fit->add_option("--target-accept", run.target_accept, "RAM target acceptance rate");
  fit->add_option("--proposal-sd", run.proposal_sd_start, "starting proposal standard deviation");
  fit->add_flag("--store-surfaces", run.store_surfaces,
                "store full interpolated surfaces every stored iteration");
  fit->add_flag("--freeze-adapt-after-burnin", freeze_adapt,
                "stop RAM adaptation once burn-in ends");

  // ---- knots --------------------------------------------------------
  auto* knots_cmd = app.add_subcommand("knots", "select knots and write them to a CSV");
  cli_detail::DataFlags knots_data;
  cli_detail::add_data_flags(knots_cmd, knots_data);
  int knots_k = 1;
  std::string knots_out;
  knots_cmd->add_option("--k", knots_k, "keep every k-th distinct coordinate per axis")->required();
  knots_cmd->add_option("--out", knots_out, "output CSV path")->required();

  // ---- simulate -----------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "replicate the synthetic-grid experiment");
  SimDesign design;
  ExperimentConfig exp;
  exp.chain.mcmc = 3000;
  exp.chain.burn_in = 2000;
  std::string sim_out;
  std::string sim_write_data;
  bool sim_data_only = false;
  sim->add_option("--side", design.side, "grid side length (locations = side^2)");
  sim->add_option("--replications", design.replications, "number of replications");
  sim->add_option("--seed", design.seed, "master seed");
  sim->add_option("--mcmc", exp.chain.mcmc, "iterations per replication");
  sim->add_option("--burn-in", exp.chain.burn_in, "burn-in per replication");
  sim->add_option("--k", exp.knot_k, "simpleknots thinning parameter");
  sim->add_option("--phi-lower", exp.phi_lower, "lower phi bound for fitting");
  sim->add_option("--phi-upper", exp.phi_upper, "upper phi bound for fitting");
  sim->add_option("--threads", exp.threads, "worker threads over replications");
  sim->add_option("--out", sim_out, "output directory for metrics");
  sim->add_option("--write-data", sim_write_data,
                  "write the first replication's dataset (with truth columns) to this CSV");
  sim->add_flag("--data-only", sim_data_only, "only write the dataset, skip the experiment");

  // ---- predict ------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "posterior-mean response predictions");
  cli_detail::DataFlags pred_data;
  cli_detail::add_data_flags(predict, pred_data);
  std::string surfaces_path;
  std::string pred_out;
  predict->add_option("--surfaces", surfaces_path, "surface_mean.csv written by fit")->required();
  predict->add_option("--out", pred_out, "output CSV path")->required();

  // ---- summarize ----------------------------------------------------
  auto* summ = app.add_subcommand("summarize", "posterior summaries from a samples directory");
  std::string summ_dir;
  std::int64_t summ_burn_in = 0;
  std::string summ_out;
  summ->add_option("--samples", summ_dir, "directory written by fit")->required();
  summ->add_option("--burn-in", summ_burn_in, "iterations to discard");
  summ->add_option("--out", summ_out, "output CSV path (default: <samples>/summary.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (fit->parsed()) {
      run.adapt_entire_chain = !freeze_adapt;
      const DatasetLoad loaded = load_csv_dataset(fit_data.path, fit_data.spec,
                                                  fit_data.missing_token);
      const Dataset& data = loaded.data;
      std::cout << "loaded " << loaded.report.rows << " rows, p = " << data.p() << " ("
                << loaded.report.missing_response << " missing responses, "
                << loaded.report.missing_covariates << " rows with missing covariates)\n";

      KnotSet knots;
      Eigen::Index knots_removed = 0;
      if (!knots_path.empty()) {
        const DatasetLoad knot_load = load_csv_dataset(knots_path, fit_data.spec,
                                                       fit_data.missing_token);
        FilterResult filtered = filter_complete(knotset_from_dataset(knot_load.data));
        knots = std::move(filtered.knots);
        knots_removed = filtered.removed;
      } else if (knot_k > 0) {
        FilterResult filtered = filter_complete(simpleknots(data, knot_k));
        knots = std::move(filtered.knots);
        knots_removed = filtered.removed;
      } else {
        if (data.n() > 500) {
          std::cerr << "warning: no knots requested; running a full GP with n = " << data.n()
                    << " locations will be slow\n";
        }
        FilterResult filtered = filter_complete(knotset_from_dataset(data));
        knots = std::move(filtered.knots);
        knots_removed = filtered.removed;
      }
      std::cout << "knots: " << knots.size() << " (" << knots_removed
                << " removed as incomplete)\n";

      const Eigen::Index p = data.p();
      PriorSpec priors;
      const auto lower = cli_detail::broadcast(phi_lower, p, "--phi-lower");
      const auto upper = cli_detail::broadcast(phi_upper, p, "--phi-upper");
      const auto ig_shape = cli_detail::broadcast(sigma_prior_shape, p, "--sigma-prior-shape");
      const auto ig_scale = cli_detail::broadcast(sigma_prior_scale, p, "--sigma-prior-scale");
      for (Eigen::Index r = 0; r < p; ++r) {
        const auto ru = static_cast<std::size_t>(r);
        priors.phi_bounds.emplace_back(lower[ru], upper[ru]);
        priors.sigmasq.push_back(InverseGammaPrior{ig_shape[ru], ig_scale[ru]});
      }
      priors.tausq = InverseGammaPrior{tau_prior_shape, tau_prior_scale};
      if (!run.sigmasq_start.empty()) {
        run.sigmasq_start = cli_detail::broadcast(run.sigmasq_start, p, "--sigmasq-start");
      }
      if (!run.phi_start.empty()) {
        run.phi_start = cli_detail::broadcast(run.phi_start, p, "--phi-start");
      }

      const PosteriorSamples samples = run_chain(data, knots, priors, run);

      std::string extra = "data=" + fit_data.path + ";k=" + std::to_string(knot_k);
      for (Eigen::Index r = 0; r < p; ++r) {
        const auto ru = static_cast<std::size_t>(r);
        extra += ";phi_bounds=" + detail::format_full(lower[ru]) + ":" +
                 detail::format_full(upper[ru]);
      }
      const Manifest manifest = write_samples(samples, fit_out, write_stride,
                                              config_fingerprint(run, extra), &data.coords);
      const SummaryTable table = summarize(samples, run.burn_in);
      write_summary_csv(table, std::filesystem::path(fit_out) / "summary.csv");
      const PredictionResult pred = predict_response(samples.surface_mean, data);
      write_predictions_csv(data, pred, std::filesystem::path(fit_out) / "predictions.csv",
                            fit_data.missing_token);
      for (const auto& entry : manifest.entries) {
        std::cout << entry.file << ": " << entry.shape << '\n';
      }
      std::cout << "summary.csv: " << table.rows.size() << " parameters\n";
      std::cout << "predictions.csv: " << pred.predicted << " predicted, " << pred.missing
                << " missing\n";
      for (Eigen::Index r = 0; r < p; ++r) {
        std::cout << "phi_" << (r + 1) << " acceptance rate: "
                  << *table.rows[static_cast<std::size_t>(r)].accept_rate << '\n';
      }
      return 0;
    }

    if (knots_cmd->parsed()) {
      const DatasetLoad loaded = load_csv_dataset(knots_data.path, knots_data.spec,
                                                  knots_data.missing_token);
      const FilterResult filtered = filter_complete(simpleknots(loaded.data, knots_k));
      write_knots_csv(filtered.knots, loaded.data.covariate_names, loaded.data.response_name,
                      knots_out, knots_data.missing_token);
      std::cout << "wrote " << filtered.knots.size() << " knots to " << knots_out << " ("
                << filtered.removed << " removed as incomplete)\n";
      return 0;
    }

    if (sim->parsed()) {
      design.validate();
      if (!sim_write_data.empty()) {
        Rng rng = Rng::derive(design.seed, 0);
        const SyntheticData synth = generate_synthetic(design, rng);
        cli_detail::write_simulation_data_csv(synth, sim_write_data);
        std::cout << "wrote " << synth.data.n() << " locations to " << sim_write_data << '\n';
        if (sim_data_only) {
          return 0;
        }
      }
      if (sim_out.empty()) {
        throw ConfigError("simulate: --out is required unless --data-only is set");
      }
      const MetricsReport report = run_experiment(design, exp);
      std::filesystem::create_directories(sim_out);
      cli_detail::write_metrics_csv(report, std::filesystem::path(sim_out) / "metrics.csv");
      {
        auto txt = detail::open_out(std::filesystem::path(sim_out) / "report.txt");
        txt << "replications: " << report.replications << '\n';
        txt << "mean fit seconds: " << report.mean_fit_seconds << '\n';
        for (std::size_t r = 0; r < report.bias.size(); ++r) {
          txt << "w_" << (r + 1) << " bias " << report.bias[r] << " rmse " << report.rmse[r]
              << '\n';
        }
      }
      for (std::size_t r = 0; r < report.bias.size(); ++r) {
        std::cout << "w_" << (r + 1) << ": bias " << report.bias[r] << ", rmse " << report.rmse[r]
                  << '\n';
      }
      std::cout << "mean fit seconds: " << report.mean_fit_seconds << '\n';
      return 0;
    }

    if (predict->parsed()) {
      const DatasetLoad loaded = load_csv_dataset(pred_data.path, pred_data.spec,
                                                  pred_data.missing_token);
      const Matrix mean_w = cli_detail::read_surface_mean(surfaces_path);
      const PredictionResult pred = predict_response(mean_w, loaded.data);
      write_predictions_csv(loaded.data, pred, pred_out, pred_data.missing_token);
      std::cout << "predicted " << pred.predicted << " locations (" << pred.missing
                << " missing covariates) -> " << pred_out << '\n';
      return 0;
    }

    if (summ->parsed()) {
      const PosteriorSamples samples = read_samples(summ_dir);
      const SummaryTable table = summarize(samples, summ_burn_in);
      const std::filesystem::path out_path =
          summ_out.empty() ? std::filesystem::path(summ_dir) / "summary.csv"
                           : std::filesystem::path(summ_out);
      write_summary_csv(table, out_path);
      std::cout << "wrote " << table.rows.size() << " parameter summaries to " << out_path.string()
                << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace svc
