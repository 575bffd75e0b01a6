#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "svc/dataset.hpp"
#include "svc/errors.hpp"
#include "svc/gibbs.hpp"
#include "svc/knots.hpp"

namespace svc {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cells.push_back(trim(cell));
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back("");
  }
  return cells;
}

/// Full-precision decimal formatting; 17 significant digits round-trip a
/// double exactly.
inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_cell(const std::string& cell, const std::string& missing_token,
                         std::size_t row, const std::string& column) {
  if (cell == missing_token || cell.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') {
    throw InvalidInputError("unparseable cell '" + cell + "' at data row " + std::to_string(row) +
                            ", column '" + column + "'");
  }
  return v;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

/// Which columns of a CSV feed the model. An empty covariate list selects
/// every column that is not a coordinate and not the response.
struct ColumnSpec {
  std::string x = "x";
  std::string y = "y";
  std::string response = "Y";
  std::vector<std::string> covariates;
  bool add_intercept = false;
};

struct CsvLoadReport {
  Eigen::Index rows = 0;
  Eigen::Index missing_response = 0;
  Eigen::Index missing_covariates = 0;
};

struct DatasetLoad {
  Dataset data;
  CsvLoadReport report;
};

/// Reads a header-first CSV into a Dataset. The configured missing token
/// maps to a missing entry for the response and covariates; coordinates
/// must parse to finite numbers.
inline DatasetLoad load_csv_dataset(const std::filesystem::path& path, const ColumnSpec& spec,
                                    const std::string& missing_token = "NA") {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("'" + path.string() + "': empty file");
  }
  const std::vector<std::string> header = detail::split_csv_line(line);

  const auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw SchemaError("'" + path.string() + "': missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t xi = column_index(spec.x);
  const std::size_t yi = column_index(spec.y);
  const std::size_t ri = column_index(spec.response);

  std::vector<std::string> covariate_names = spec.covariates;
  if (covariate_names.empty()) {
    for (const auto& name : header) {
      if (name != spec.x && name != spec.y && name != spec.response) {
        covariate_names.push_back(name);
      }
    }
  }
  if (covariate_names.empty() && !spec.add_intercept) {
    throw SchemaError("'" + path.string() + "': no covariate columns");
  }
  std::vector<std::size_t> cov_idx;
  cov_idx.reserve(covariate_names.size());
  for (const auto& name : covariate_names) {
    cov_idx.push_back(column_index(name));
  }

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    ++row_number;
    if (detail::trim(line).empty()) {
      continue;
    }
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw SchemaError("'" + path.string() + "': row " + std::to_string(row_number) + " has " +
                        std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(header.size()));
    }
    std::vector<double> parsed(2 + 1 + cov_idx.size());
    parsed[0] = detail::parse_cell(cells[xi], missing_token, row_number, spec.x);
    parsed[1] = detail::parse_cell(cells[yi], missing_token, row_number, spec.y);
    parsed[2] = detail::parse_cell(cells[ri], missing_token, row_number, spec.response);
    for (std::size_t j = 0; j < cov_idx.size(); ++j) {
      parsed[3 + j] = detail::parse_cell(cells[cov_idx[j]], missing_token, row_number,
                                         covariate_names[j]);
    }
    if (!std::isfinite(parsed[0]) || !std::isfinite(parsed[1])) {
      throw InvalidInputError("'" + path.string() + "': non-finite coordinate at data row " +
                              std::to_string(row_number));
    }
    rows.push_back(std::move(parsed));
  }
  if (rows.empty()) {
    throw SchemaError("'" + path.string() + "': no data rows");
  }

  DatasetLoad out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p_file = static_cast<Eigen::Index>(cov_idx.size());
  const Eigen::Index p = p_file + (spec.add_intercept ? 1 : 0);
  out.data.y.resize(n);
  out.data.x.resize(n, p);
  out.data.coords.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    out.data.coords(i, 0) = r[0];
    out.data.coords(i, 1) = r[1];
    out.data.y(i) = r[2];
    if (spec.add_intercept) {
      out.data.x(i, 0) = 1.0;
    }
    for (Eigen::Index j = 0; j < p_file; ++j) {
      out.data.x(i, j + (spec.add_intercept ? 1 : 0)) = r[3 + static_cast<std::size_t>(j)];
    }
    if (is_missing(out.data.y(i))) {
      ++out.report.missing_response;
    }
    if (!out.data.x.row(i).allFinite()) {
      ++out.report.missing_covariates;
    }
  }
  out.report.rows = n;
  out.data.response_name = spec.response;
  if (spec.add_intercept) {
    out.data.covariate_names.emplace_back("intercept");
  }
  for (const auto& name : covariate_names) {
    out.data.covariate_names.push_back(name);
  }
  out.data.validate();
  return out;
}

struct ManifestEntry {
  std::string file;
  std::string shape;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::int64_t mcmc = 0;
  std::int64_t burn_in = 0;
  Eigen::Index written_rows = 0;
};

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  return out;
}

}  // namespace detail

/// Writes one CSV per parameter group plus manifest.txt. Knot and surface
/// draws go out in long format (iteration, location_index, coefficient,
/// value). stride keeps every stride-th stored row. Values are written with
/// 17 significant digits so a read-back reproduces them exactly.
inline Manifest write_samples(const PosteriorSamples& samples, const std::filesystem::path& out_dir,
                              std::int64_t stride = 1, const std::string& config_hash = "",
                              const Matrix* coords = nullptr) {
  if (stride < 1) {
    throw ConfigError("write_samples: stride must be at least 1");
  }
  std::filesystem::create_directories(out_dir);
  Manifest manifest;
  manifest.seed = samples.seed;
  manifest.config_hash = config_hash;
  manifest.mcmc = samples.mcmc;
  manifest.burn_in = samples.burn_in;

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < samples.stored(); ++i) {
    if ((i + 1) % stride == 0) {
      keep.push_back(i);
    }
  }
  manifest.written_rows = static_cast<Eigen::Index>(keep.size());
  const Eigen::Index p = samples.phi_draws.cols();

  const auto write_wide = [&](const std::string& file, const Matrix& draws,
                              const std::string& prefix) {
    auto out = detail::open_out(out_dir / file);
    out << "iteration";
    for (Eigen::Index r = 0; r < draws.cols(); ++r) {
      out << ',' << prefix;
      if (draws.cols() > 1) {
        out << '_' << (r + 1);
      }
    }
    out << '\n';
    for (const Eigen::Index i : keep) {
      out << samples.iterations[static_cast<std::size_t>(i)];
      for (Eigen::Index r = 0; r < draws.cols(); ++r) {
        out << ',' << detail::format_full(draws(i, r));
      }
      out << '\n';
    }
    manifest.entries.push_back({file, std::to_string(keep.size()) + " x " +
                                          std::to_string(draws.cols())});
  };

  write_wide("phi_samples.csv", samples.phi_draws, "phi");
  write_wide("sigmasq_samples.csv", samples.sigmasq_draws, "sigmasq");
  write_wide("tausq_samples.csv", samples.tausq_draws, "tausq");

  {
    auto out = detail::open_out(out_dir / "phi_acceptance.csv");
    out << "iteration";
    for (Eigen::Index r = 0; r < p; ++r) {
      out << ",accept_" << (r + 1);
    }
    out << '\n';
    for (const Eigen::Index i : keep) {
      out << samples.iterations[static_cast<std::size_t>(i)];
      for (Eigen::Index r = 0; r < p; ++r) {
        out << ',' << samples.phi_accept(i, r);
      }
      out << '\n';
    }
    manifest.entries.push_back({"phi_acceptance.csv",
                                std::to_string(keep.size()) + " x " + std::to_string(p)});
  }

  const auto write_long = [&](const std::string& file, const std::vector<Matrix>& draws) {
    auto out = detail::open_out(out_dir / file);
    out << "iteration,location_index,coefficient,value\n";
    for (const Eigen::Index i : keep) {
      const Matrix& draw = draws[static_cast<std::size_t>(i)];
      for (Eigen::Index r = 0; r < draw.cols(); ++r) {
        for (Eigen::Index loc = 0; loc < draw.rows(); ++loc) {
          out << samples.iterations[static_cast<std::size_t>(i)] << ',' << (loc + 1) << ','
              << (r + 1) << ',' << detail::format_full(draw(loc, r)) << '\n';
        }
      }
    }
    const Eigen::Index rows = draws.empty() ? 0 : draws.front().rows();
    const Eigen::Index cols = draws.empty() ? 0 : draws.front().cols();
    manifest.entries.push_back({file, std::to_string(keep.size()) + " x " + std::to_string(rows) +
                                          " x " + std::to_string(cols)});
  };

  write_long("w_knot_samples.csv", samples.w_knot_draws);
  if (!samples.w_surface_draws.empty()) {
    write_long("w_samples.csv", samples.w_surface_draws);
  }

  if (samples.surface_mean.size() > 0) {
    auto out = detail::open_out(out_dir / "surface_mean.csv");
    const Matrix var = samples.surface_variance();
    out << "location_index";
    if (coords != nullptr) {
      out << ",x,y";
    }
    for (Eigen::Index r = 0; r < samples.surface_mean.cols(); ++r) {
      out << ",w_mean_" << (r + 1);
    }
    for (Eigen::Index r = 0; r < samples.surface_mean.cols(); ++r) {
      out << ",w_var_" << (r + 1);
    }
    out << '\n';
    for (Eigen::Index i = 0; i < samples.surface_mean.rows(); ++i) {
      out << (i + 1);
      if (coords != nullptr) {
        out << ',' << detail::format_full((*coords)(i, 0)) << ','
            << detail::format_full((*coords)(i, 1));
      }
      for (Eigen::Index r = 0; r < samples.surface_mean.cols(); ++r) {
        out << ',' << detail::format_full(samples.surface_mean(i, r));
      }
      for (Eigen::Index r = 0; r < samples.surface_mean.cols(); ++r) {
        out << ',' << detail::format_full(var(i, r));
      }
      out << '\n';
    }
    manifest.entries.push_back({"surface_mean.csv",
                                std::to_string(samples.surface_mean.rows()) + " x " +
                                    std::to_string(samples.surface_mean.cols())});
  }

  {
    auto out = detail::open_out(out_dir / "manifest.txt");
    out << "seed: " << manifest.seed << '\n';
    out << "config_hash: " << manifest.config_hash << '\n';
    out << "mcmc: " << manifest.mcmc << '\n';
    out << "burn_in: " << manifest.burn_in << '\n';
    out << "written_rows: " << manifest.written_rows << '\n';
    for (const auto& entry : manifest.entries) {
      out << entry.file << ": " << entry.shape << '\n';
    }
  }
  return manifest;
}

namespace detail {

inline Matrix read_wide_csv(const std::filesystem::path& path,
                            std::vector<std::int64_t>* iterations) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("'" + path.string() + "': empty file");
  }
  const auto header = split_csv_line(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      continue;
    }
    const auto cells = split_csv_line(line);
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) {
      row.push_back(parse_cell(cell, "NA", rows.size() + 1, "value"));
    }
    rows.push_back(std::move(row));
  }
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size()) - 1);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (iterations != nullptr) {
      iterations->push_back(static_cast<std::int64_t>(row[0]));
    }
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      out(i, j) = row[static_cast<std::size_t>(j) + 1];
    }
  }
  return out;
}

}  // namespace detail

/// Reads the CSVs produced by write_samples back into a PosteriorSamples.
/// Only the files present in the directory are restored.
inline PosteriorSamples read_samples(const std::filesystem::path& dir) {
  PosteriorSamples samples;
  samples.phi_draws = detail::read_wide_csv(dir / "phi_samples.csv", &samples.iterations);
  samples.sigmasq_draws = detail::read_wide_csv(dir / "sigmasq_samples.csv", nullptr);
  samples.tausq_draws = detail::read_wide_csv(dir / "tausq_samples.csv", nullptr);
  const Matrix accept = detail::read_wide_csv(dir / "phi_acceptance.csv", nullptr);
  samples.phi_accept = accept.cast<int>();
  samples.mcmc = samples.iterations.empty() ? 0 : samples.iterations.back();

  const auto read_long = [&](const std::filesystem::path& path, std::vector<Matrix>* into) {
    std::ifstream in(path);
    if (!in) {
      return;
    }
    std::string line;
    std::getline(in, line);  // header
    // (iteration, location, coefficient) -> value, iteration-major order
    std::vector<std::int64_t> iters;
    Eigen::Index max_loc = 0;
    Eigen::Index max_coef = 0;
    struct LongRow {
      std::int64_t iter;
      Eigen::Index loc;
      Eigen::Index coef;
      double value;
    };
    std::vector<LongRow> rows;
    while (std::getline(in, line)) {
      if (detail::trim(line).empty()) {
        continue;
      }
      const auto cells = detail::split_csv_line(line);
      if (cells.size() != 4) {
        throw SchemaError("'" + path.string() + "': expected 4 columns");
      }
      LongRow row{};
      row.iter = std::stoll(cells[0]);
      row.loc = static_cast<Eigen::Index>(std::stoll(cells[1])) - 1;
      row.coef = static_cast<Eigen::Index>(std::stoll(cells[2])) - 1;
      row.value = detail::parse_cell(cells[3], "NA", rows.size() + 1, "value");
      max_loc = std::max(max_loc, row.loc + 1);
      max_coef = std::max(max_coef, row.coef + 1);
      if (iters.empty() || iters.back() != row.iter) {
        iters.push_back(row.iter);
      }
      rows.push_back(row);
    }
    into->assign(iters.size(), Matrix::Zero(max_loc, max_coef));
    std::size_t block = 0;
    for (const auto& row : rows) {
      while (iters[block] != row.iter) {
        ++block;
      }
      (*into)[block](row.loc, row.coef) = row.value;
    }
  };

  read_long(dir / "w_knot_samples.csv", &samples.w_knot_draws);
  read_long(dir / "w_samples.csv", &samples.w_surface_draws);
  return samples;
}

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q500 = 0.0;
  double q975 = 0.0;
  std::optional<double> accept_rate;  // phi rows only
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
};

namespace detail {

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) {
    throw ConfigError("quantile of an empty chain");
  }
  if (sorted.size() == 1) {
    return sorted.front();
  }
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) {
    return sorted.back();
  }
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline SummaryRow summarize_chain(const std::string& name, std::vector<double> values) {
  SummaryRow row;
  row.name = name;
  const auto count = static_cast<double>(values.size());
  double sum = 0.0;
  for (const double v : values) {
    sum += v;
  }
  row.mean = sum / count;
  double ss = 0.0;
  for (const double v : values) {
    ss += (v - row.mean) * (v - row.mean);
  }
  row.sd = values.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  std::sort(values.begin(), values.end());
  row.q025 = quantile_sorted(values, 0.025);
  row.q500 = quantile_sorted(values, 0.5);
  row.q975 = quantile_sorted(values, 0.975);
  return row;
}

}  // namespace detail

/// Posterior summaries over the stored draws with iteration number above
/// burn_in: mean, standard deviation, 2.5/50/97.5 percent quantiles, and the
/// empirical acceptance rate for each phi_r.
inline SummaryTable summarize(const PosteriorSamples& samples, std::int64_t burn_in) {
  if (samples.stored() == 0) {
    throw ConfigError("summarize: no stored draws");
  }
  if (burn_in >= samples.iterations.back()) {
    throw ConfigError("summarize: burn-in " + std::to_string(burn_in) +
                      " leaves no draws (last stored iteration is " +
                      std::to_string(samples.iterations.back()) + ")");
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < samples.stored(); ++i) {
    if (samples.iterations[static_cast<std::size_t>(i)] > burn_in) {
      keep.push_back(i);
    }
  }

  const auto column = [&](const Matrix& draws, Eigen::Index r) {
    std::vector<double> values;
    values.reserve(keep.size());
    for (const Eigen::Index i : keep) {
      values.push_back(draws(i, r));
    }
    return values;
  };

  SummaryTable table;
  const Eigen::Index p = samples.phi_draws.cols();
  for (Eigen::Index r = 0; r < p; ++r) {
    SummaryRow row = detail::summarize_chain("phi_" + std::to_string(r + 1),
                                             column(samples.phi_draws, r));
    double accepted = 0.0;
    for (const Eigen::Index i : keep) {
      accepted += samples.phi_accept(i, r);
    }
    row.accept_rate = accepted / static_cast<double>(keep.size());
    table.rows.push_back(std::move(row));
  }
  for (Eigen::Index r = 0; r < p; ++r) {
    table.rows.push_back(detail::summarize_chain("sigmasq_" + std::to_string(r + 1),
                                                 column(samples.sigmasq_draws, r)));
  }
  table.rows.push_back(detail::summarize_chain("tausq", column(samples.tausq_draws, 0)));

  if (!samples.w_knot_draws.empty()) {
    const Eigen::Index m = samples.w_knot_draws.front().rows();
    for (Eigen::Index r = 0; r < samples.w_knot_draws.front().cols(); ++r) {
      for (Eigen::Index loc = 0; loc < m; ++loc) {
        std::vector<double> values;
        values.reserve(keep.size());
        for (const Eigen::Index i : keep) {
          values.push_back(samples.w_knot_draws[static_cast<std::size_t>(i)](loc, r));
        }
        table.rows.push_back(detail::summarize_chain(
            "w_" + std::to_string(r + 1) + ".knot_" + std::to_string(loc + 1), std::move(values)));
      }
    }
  }
  return table;
}

inline void write_summary_csv(const SummaryTable& table, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "parameter,mean,sd,q025,q500,q975,accept_rate\n";
  for (const auto& row : table.rows) {
    out << row.name << ',' << detail::format_full(row.mean) << ',' << detail::format_full(row.sd)
        << ',' << detail::format_full(row.q025) << ',' << detail::format_full(row.q500) << ','
        << detail::format_full(row.q975) << ',';
    if (row.accept_rate.has_value()) {
      out << detail::format_full(*row.accept_rate);
    } else {
      out << "NA";
    }
    out << '\n';
  }
}

struct PredictionResult {
  Vector y_hat;  // NaN where any covariate is missing
  Eigen::Index predicted = 0;
  Eigen::Index missing = 0;
};

/// Posterior-mean response: Yhat(s) = sum_r X_r(s) wbar_r(s) at every
/// location with complete covariates, regardless of whether the response was
/// observed there; locations with a missing covariate yield a missing
/// prediction.
inline PredictionResult predict_response(const Matrix& mean_w, const Dataset& data) {
  if (mean_w.rows() != data.n() || mean_w.cols() != data.p()) {
    throw DimensionError("predict_response: surface matrix must be n x p");
  }
  PredictionResult out;
  out.y_hat.resize(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (!data.x.row(i).allFinite()) {
      out.y_hat(i) = std::numeric_limits<double>::quiet_NaN();
      ++out.missing;
      continue;
    }
    out.y_hat(i) = data.x.row(i).dot(mean_w.row(i));
    ++out.predicted;
  }
  return out;
}

inline void write_predictions_csv(const Dataset& data, const PredictionResult& pred,
                                  const std::filesystem::path& path,
                                  const std::string& missing_token = "NA") {
  auto out = detail::open_out(path);
  out << "location_index,x,y,y_observed,y_predicted\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << (i + 1) << ',' << detail::format_full(data.coords(i, 0)) << ','
        << detail::format_full(data.coords(i, 1)) << ',';
    if (is_missing(data.y(i))) {
      out << missing_token;
    } else {
      out << detail::format_full(data.y(i));
    }
    out << ',';
    if (is_missing(pred.y_hat(i))) {
      out << missing_token;
    } else {
      out << detail::format_full(pred.y_hat(i));
    }
    out << '\n';
  }
}

/// Writes a knot set in the same column layout the loader expects.
inline void write_knots_csv(const KnotSet& knots, const std::vector<std::string>& covariate_names,
                            const std::string& response_name, const std::filesystem::path& path,
                            const std::string& missing_token = "NA") {
  auto out = detail::open_out(path);
  out << "x,y," << response_name;
  for (Eigen::Index r = 0; r < knots.p(); ++r) {
    if (static_cast<std::size_t>(r) < covariate_names.size()) {
      out << ',' << covariate_names[static_cast<std::size_t>(r)];
    } else {
      out << ",X" << (r + 1);
    }
  }
  out << '\n';
  const auto cell = [&](double v) {
    return is_missing(v) ? missing_token : detail::format_full(v);
  };
  for (Eigen::Index i = 0; i < knots.size(); ++i) {
    out << detail::format_full(knots.coords(i, 0)) << ',' << detail::format_full(knots.coords(i, 1))
        << ',' << cell(knots.y(i));
    for (Eigen::Index r = 0; r < knots.p(); ++r) {
      out << ',' << cell(knots.x(i, r));
    }
    out << '\n';
  }
}

/// Stable fingerprint of a run configuration, recorded in the manifest so
/// that identical invocations produce identical outputs.
inline std::string config_fingerprint(const RunConfig& config, const std::string& extra = "") {
  std::string s;
  s += "mcmc=" + std::to_string(config.mcmc);
  s += ";burn_in=" + std::to_string(config.burn_in);
  s += ";thin=" + std::to_string(config.thin);
  s += ";seed=" + std::to_string(config.seed);
  s += ";tausq_start=" + detail::format_full(config.tausq_start);
  for (const double v : config.sigmasq_start) {
    s += ";sigmasq_start=" + detail::format_full(v);
  }
  for (const double v : config.phi_start) {
    s += ";phi_start=" + detail::format_full(v);
  }
  s += ";proposal_sd=" + detail::format_full(config.proposal_sd_start);
  s += ";target_accept=" + detail::format_full(config.target_accept);
  s += ";adapt_entire_chain=" + std::to_string(config.adapt_entire_chain ? 1 : 0);
  s += ";store_surfaces=" + std::to_string(config.store_surfaces ? 1 : 0);
  s += ";" + extra;
  return detail::hex64(detail::fnv1a64(s));
}

}  // namespace svc
