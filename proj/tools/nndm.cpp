// Command-line interface: fit/evaluate NN-DM density models, run the
// benchmark and coverage harnesses, and classify with per-class densities.
// Every artifact embeds the resolved configuration, so a run can be
// reproduced from its outputs plus the input files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "nndm/nndm.hpp"
#include "nndm/version.hpp"

using ordered_json = nlohmann::ordered_json;

namespace {

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error(tmp + ": cannot open for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error(tmp + ": write failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error(path + ": rename failed");
  }
}

std::string config_comment(const ordered_json& echo) {
  return "# config: " + echo.dump() + "\n";
}

struct CommonOptions {
  std::uint64_t seed = 0;
  int threads = 0;
  int k = 0;
  double delta0sq = std::numeric_limits<double>::quiet_NaN();
  bool cv = false;
  std::string cv_grid_spec;  // "lo:hi:count"
  double alpha = std::numeric_limits<double>::quiet_NaN();
  bool alpha_auto = false;
  double nu0 = 0.001;
  double gamma0 = std::numeric_limits<double>::quiet_NaN();
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--seed", opt.seed, "root RNG seed");
  cmd->add_option("--threads", opt.threads, "worker threads (default: NNDM_THREADS or all)");
  cmd->add_option("--k", opt.k, "number of neighbors (default: rule of thumb)");
  cmd->add_option("--delta0sq", opt.delta0sq, "prior scale delta0^2");
  cmd->add_flag("--cv-delta0", opt.cv, "select delta0^2 by leave-one-out cross-validation");
  cmd->add_option("--cv-grid", opt.cv_grid_spec, "CV grid as lo:hi:count (default 1e-3:1e2:25)");
  cmd->add_option("--alpha", opt.alpha, "Dirichlet concentration alpha");
  cmd->add_flag("--alpha-auto", opt.alpha_auto, "choose alpha by the data-driven rule");
  cmd->add_option("--nu0", opt.nu0, "prior precision nu0");
  cmd->add_option("--gamma0", opt.gamma0, "prior shape gamma0 (default: p)");
}

std::vector<double> parse_cv_grid(const std::string& spec) {
  if (spec.empty()) return nndm::default_delta0_grid();
  double lo, hi;
  int count;
  char c1, c2;
  std::istringstream ss(spec);
  if (!(ss >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':')
    throw nndm::invalid_parameter("--cv-grid expects lo:hi:count");
  return nndm::default_delta0_grid(count, lo, hi);
}

nndm::FitOptions to_fit_options(const CommonOptions& opt) {
  nndm::FitOptions fit;
  fit.k = opt.k;
  fit.delta0sq = opt.delta0sq;
  fit.cv = opt.cv;
  if (opt.cv) fit.cv_grid = parse_cv_grid(opt.cv_grid_spec);
  fit.alpha = opt.alpha;
  fit.alpha_rule = opt.alpha_auto;
  fit.nu0 = opt.nu0;
  fit.gamma0 = opt.gamma0;
  fit.seed = opt.seed;
  return fit;
}

ordered_json echo_common(const std::string& command, const CommonOptions& opt) {
  ordered_json echo;
  echo["command"] = command;
  echo["version"] = nndm::kVersionString;
  echo["seed"] = opt.seed;
  echo["threads"] = nndm::thread_count();
  echo["k"] = opt.k;
  if (!std::isnan(opt.delta0sq)) echo["delta0sq"] = opt.delta0sq;
  echo["cv_delta0"] = opt.cv;
  if (opt.cv) echo["cv_grid"] = opt.cv_grid_spec.empty() ? "1e-3:1e2:25" : opt.cv_grid_spec;
  if (!std::isnan(opt.alpha)) echo["alpha"] = opt.alpha;
  echo["alpha_auto"] = opt.alpha_auto;
  echo["nu0"] = opt.nu0;
  if (!std::isnan(opt.gamma0)) echo["gamma0"] = opt.gamma0;
  return echo;
}

ordered_json model_summary(const nndm::FittedModel& model) {
  ordered_json j;
  j["n"] = model.n();
  j["p"] = model.p();
  j["k"] = model.hyper().k;
  j["nu0"] = model.hyper().nu0;
  j["gamma0"] = model.hyper().gamma0;
  j["delta0sq"] = model.hyper().delta0sq;
  j["delta0sq_source"] = nndm::to_string(model.provenance().delta0sq_source);
  j["alpha"] = model.hyper().alpha;
  j["alpha_source"] = nndm::to_string(model.provenance().alpha_source);
  j["seed"] = model.provenance().seed;
  return j;
}

Eigen::MatrixXd load_grid(const std::string& grid_path, const std::string& auto_spec,
                          const std::string& input_path, Eigen::Index p) {
  if (!grid_path.empty()) {
    const nndm::CsvTable table = nndm::read_csv_file(grid_path);
    if (table.values.cols() != p)
      throw nndm::invalid_parameter("grid file has " + std::to_string(table.values.cols()) +
                                    " columns, model expects " + std::to_string(p));
    return table.values;
  }
  if (auto_spec.empty()) throw nndm::invalid_parameter("need --grid or --grid-auto");
  if (p != 1) throw nndm::invalid_parameter("--grid-auto is univariate only; use --grid");
  double lo = 0.0, hi = 0.0;
  long steps = 0;
  char c1, c2;
  std::istringstream ss(auto_spec);
  if (ss >> lo >> c1 >> hi >> c2 >> steps && c1 == ':' && c2 == ':') {
    if (steps < 2 || !(hi > lo)) throw nndm::invalid_parameter("--grid-auto expects lo:hi:steps");
  } else {
    // single number: steps only; bounds = data range +/- 3 sample standard deviations
    std::istringstream ss2(auto_spec);
    if (!(ss2 >> steps) || steps < 2)
      throw nndm::invalid_parameter("--grid-auto expects lo:hi:steps or a step count");
    if (input_path.empty())
      throw nndm::invalid_parameter("--grid-auto with a bare step count needs --input data");
    const nndm::CsvTable data = nndm::read_csv_file(input_path);
    if (data.values.cols() != 1) throw nndm::invalid_parameter("--grid-auto needs univariate data");
    const double mean = data.values.col(0).mean();
    const double sd = std::sqrt((data.values.col(0).array() - mean).square().sum() /
                                static_cast<double>(data.values.rows() - 1));
    lo = data.values.col(0).minCoeff() - 3.0 * sd;
    hi = data.values.col(0).maxCoeff() + 3.0 * sd;
  }
  Eigen::MatrixXd grid(steps, 1);
  for (long i = 0; i < steps; ++i)
    grid(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  return grid;
}

// ---------------------------------------------------------------------------

int cmd_fit(const CommonOptions& common, const std::string& input, const std::string& model_path,
            const std::string& report_path) {
  const nndm::CsvTable table = nndm::read_csv_file(input);
  const nndm::Dataset data(table.values);
  const nndm::FittedModel model = nndm::fit(data, to_fit_options(common));

  std::ostringstream model_text;
  nndm::save_model(model, model_text);
  write_file_atomic(model_path, model_text.str());

  ordered_json echo = echo_common("fit", common);
  echo["input"] = input;
  ordered_json report;
  report["config"] = echo;
  report["model"] = model_summary(model);
  if (model.cv_result()) {
    ordered_json cv;
    cv["grid"] = model.cv_result()->grid;
    cv["scores"] = model.cv_result()->scores;
    cv["best"] = model.cv_result()->best;
    cv["excluded"] = model.cv_result()->excluded;
    report["cv"] = cv;
    if (model.cv_result()->excluded > 0)
      std::cerr << "warning: " << model.cv_result()->excluded
                << " CV candidate(s) excluded for non-finite scores\n";
  }
  if (!report_path.empty()) write_file_atomic(report_path, report.dump(2) + "\n");
  std::cout << "fit: n=" << model.n() << " p=" << model.p() << " k=" << model.hyper().k
            << " delta0sq=" << model.hyper().delta0sq << " alpha=" << model.hyper().alpha << "\n";
  return 0;
}

int cmd_density(const CommonOptions& common, const std::string& model_path,
                const std::string& grid_path, const std::string& auto_spec,
                const std::string& input_path, long draws, double level,
                const std::string& out_path) {
  const nndm::FittedModel model = nndm::load_model_file(model_path);
  const Eigen::MatrixXd grid = load_grid(grid_path, auto_spec, input_path, model.p());
  const nndm::DensityTable table = nndm::density_on_grid(model, grid, draws, level, common.seed);

  ordered_json echo = echo_common("density", common);
  echo["model"] = model_path;
  echo["draws"] = draws;
  echo["level"] = level;

  std::ostringstream out;
  out << config_comment(echo);
  for (Eigen::Index j = 0; j < model.p(); ++j) out << "x" << (j + 1) << ",";
  out << "mean";
  if (table.band) out << ",lo,hi";
  out << "\n";
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.p(); ++j) out << nndm::format_double(grid(i, j)) << ",";
    out << nndm::format_double(table.mean[i]);
    if (table.band)
      out << "," << nndm::format_double(table.band->lo[i]) << ","
          << nndm::format_double(table.band->hi[i]);
    out << "\n";
  }
  write_file_atomic(out_path, out.str());
  std::cout << "density: " << grid.rows() << " grid points -> " << out_path << "\n";
  return 0;
}

int cmd_sample(const CommonOptions& common, const std::string& model_path,
               const std::string& grid_path, const std::string& auto_spec,
               const std::string& input_path, long draws, const std::string& out_path) {
  if (draws < 1) throw nndm::invalid_parameter("sample: need --draws >= 1");
  const nndm::FittedModel model = nndm::load_model_file(model_path);
  const Eigen::MatrixXd grid = load_grid(grid_path, auto_spec, input_path, model.p());
  const std::vector<nndm::DensityDraw> samples = nndm::sample_draws(model, draws, common.seed);

  ordered_json echo = echo_common("sample", common);
  echo["model"] = model_path;
  echo["draws"] = draws;

  std::ostringstream out;
  out << config_comment(echo);
  out << "draw";
  for (Eigen::Index j = 0; j < model.p(); ++j) out << ",x" << (j + 1);
  out << ",value\n";
  for (std::size_t t = 0; t < samples.size(); ++t) {
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
      out << t;
      for (Eigen::Index j = 0; j < model.p(); ++j)
        out << ',' << nndm::format_double(grid(i, j));
      out << ',' << nndm::format_double(samples[t].density(grid.row(i).transpose())) << "\n";
    }
  }
  write_file_atomic(out_path, out.str());
  std::cout << "sample: " << draws << " draws on " << grid.rows() << " points -> " << out_path
            << "\n";
  return 0;
}

int cmd_cv(const CommonOptions& common, const std::string& input, const std::string& out_path,
           const std::string& csv_path) {
  const nndm::CsvTable table = nndm::read_csv_file(input);
  const nndm::Dataset data(table.values);
  nndm::Hyperparameters base = nndm::default_hyperparameters(data.n(), data.p());
  if (!std::isnan(common.nu0)) base.nu0 = common.nu0;
  if (!std::isnan(common.gamma0)) base.gamma0 = common.gamma0;
  const int k = common.k != 0 ? common.k : base.k;
  const nndm::CvResult cv = nndm::cv_delta0(data, k, base, parse_cv_grid(common.cv_grid_spec));

  ordered_json echo = echo_common("cv", common);
  echo["input"] = input;
  ordered_json report;
  report["config"] = echo;
  report["k"] = k;
  report["grid"] = cv.grid;
  report["scores"] = cv.scores;
  report["best"] = cv.best;
  report["excluded"] = cv.excluded;
  write_file_atomic(out_path, report.dump(2) + "\n");
  if (!csv_path.empty()) {
    std::ostringstream out;
    out << config_comment(echo);
    out << "delta0sq,loo_log_likelihood\n";
    for (std::size_t c = 0; c < cv.grid.size(); ++c)
      out << nndm::format_double(cv.grid[c]) << ',' << nndm::format_double(cv.scores[c]) << "\n";
    write_file_atomic(csv_path, out.str());
  }
  if (cv.excluded > 0)
    std::cerr << "warning: " << cv.excluded << " CV candidate(s) excluded\n";
  std::cout << "cv: best delta0sq = " << cv.best << " -> " << out_path << "\n";
  return 0;
}

int cmd_classify(const CommonOptions& common, const std::string& train_path,
                 const std::string& test_path, const std::string& label_col, double prior1,
                 bool standardize, long draws, const std::string& predictions_path,
                 const std::string& metrics_path) {
  const nndm::CsvTable train = nndm::read_csv_file(train_path);
  const nndm::CsvTable test = nndm::read_csv_file(test_path);

  Eigen::Index label_idx = train.values.cols() - 1;
  if (!label_col.empty()) {
    if (!train.header.empty() && train.column(label_col) >= 0) {
      label_idx = train.column(label_col);
    } else {
      try {
        label_idx = std::stol(label_col);
      } catch (...) {
        throw nndm::invalid_parameter("label column '" + label_col + "' not found");
      }
    }
  }
  if (label_idx < 0 || label_idx >= train.values.cols())
    throw nndm::invalid_parameter("label column index out of range");

  const auto split = [&](const nndm::CsvTable& t, bool need_labels, Eigen::MatrixXd& x,
                         std::vector<int>& y) {
    const bool has_labels = t.values.cols() == train.values.cols();
    if (need_labels && !has_labels)
      throw nndm::invalid_data("test file lacks the label column");
    const Eigen::Index pf = train.values.cols() - 1;
    if (!has_labels && t.values.cols() != pf)
      throw nndm::invalid_parameter("feature count mismatch between train and test");
    x.resize(t.values.rows(), pf);
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < t.values.cols(); ++j) {
      if (has_labels && j == label_idx) continue;
      x.col(c++) = t.values.col(j);
    }
    if (has_labels) {
      y.resize(t.values.rows());
      for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
        const double v = t.values(i, label_idx);
        if (v != 0.0 && v != 1.0)
          throw nndm::invalid_data("labels must be binary 0/1");
        y[i] = static_cast<int>(v);
      }
    }
  };

  Eigen::MatrixXd x_train, x_test;
  std::vector<int> y_train, y_test;
  split(train, true, x_train, y_train);
  split(test, false, x_test, y_test);

  nndm::ClassifierOptions options;
  options.fit = to_fit_options(common);
  options.prior1 = prior1;
  options.standardize = standardize;
  const nndm::ClassifierModel model = nndm::fit_classifier(nndm::Dataset(x_train), y_train, options);

  std::vector<double> prob_mean(x_test.rows());
  std::vector<int> extrapolated(x_test.rows(), 0);
  for (Eigen::Index i = 0; i < x_test.rows(); ++i) {
    const nndm::ClassProbability pr = nndm::predict_proba_mean(model, x_test.row(i).transpose());
    prob_mean[i] = pr.prob1;
    extrapolated[i] = pr.extrapolated ? 1 : 0;
  }

  ordered_json echo = echo_common("classify", common);
  echo["train"] = train_path;
  echo["test"] = test_path;
  echo["standardize"] = standardize;
  echo["draws"] = draws;
  if (!std::isnan(prior1)) echo["prior1"] = prior1;

  std::ostringstream pred;
  pred << config_comment(echo);
  pred << "prob1,extrapolated\n";
  for (Eigen::Index i = 0; i < x_test.rows(); ++i)
    pred << nndm::format_double(prob_mean[i]) << ',' << extrapolated[i] << "\n";
  write_file_atomic(predictions_path, pred.str());

  Eigen::MatrixXd prob_draws;
  if (draws > 0) prob_draws = nndm::predict_proba_draws(model, x_test, draws, common.seed);

  if (!metrics_path.empty()) {
    if (y_test.empty())
      throw nndm::invalid_data("metrics requested but the test file has no labels");
    long tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_test.size(); ++i) {
      const bool hat = prob_mean[i] > 0.5;
      if (hat && y_test[i] == 1) ++tp;
      if (hat && y_test[i] == 0) ++fp;
      if (!hat && y_test[i] == 1) ++fn;
      if (!hat && y_test[i] == 0) ++tn;
    }
    const nndm::RocCurve roc = nndm::roc_auc(prob_mean, y_test);
    ordered_json metrics;
    metrics["config"] = echo;
    metrics["priors"] = {model.prior0, model.prior1};
    metrics["sensitivity"] = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    metrics["specificity"] = tn + fp > 0 ? static_cast<double>(tn) / (tn + fp) : 0.0;
    metrics["auc"] = roc.auc;
    {
      Eigen::MatrixXd mean_row(1, x_test.rows());
      for (Eigen::Index i = 0; i < x_test.rows(); ++i) mean_row(0, i) = prob_mean[i];
      metrics["brier_mean_prob"] = nndm::brier_score(mean_row, y_test).mean;
    }
    if (draws > 0) metrics["brier_mc_mean"] = nndm::brier_score(prob_draws, y_test).mean;
    metrics["extrapolated_points"] =
        std::accumulate(extrapolated.begin(), extrapolated.end(), 0);
    write_file_atomic(metrics_path, metrics.dump(2) + "\n");
  }

  if (draws > 0) {
    std::ostringstream dd;
    dd << config_comment(echo);
    dd << "draw,point,prob1\n";
    for (Eigen::Index t = 0; t < prob_draws.rows(); ++t)
      for (Eigen::Index i = 0; i < prob_draws.cols(); ++i)
        dd << t << ',' << i << ',' << nndm::format_double(prob_draws(t, i)) << "\n";
    write_file_atomic(predictions_path + ".draws.csv", dd.str());
  }
  std::cout << "classify: " << x_test.rows() << " test points -> " << predictions_path << "\n";
  return 0;
}

int cmd_bench(const CommonOptions& common, const std::string& density_name, int p, int n, int n_t,
              int reps, const std::string& csv_path, const std::string& json_path) {
  const nndm::TestDensity density = nndm::make_test_density(density_name, p);
  const nndm::FitOptions fit = to_fit_options(common);
  const nndm::L1Report report = nndm::l1_error(density, fit, n, n_t, reps, common.seed);

  ordered_json echo = echo_common("bench", common);
  echo["density"] = density_name;
  echo["p"] = p;
  echo["n"] = n;
  echo["nt"] = n_t;
  echo["reps"] = reps;

  ordered_json j;
  j["config"] = echo;
  j["mean_l1"] = report.mean;
  j["replicates"] = report.replicates;
  ordered_json failures = ordered_json::array();
  for (int i = 0; i < reps; ++i)
    if (!report.failures[i].empty()) failures.push_back({{"replicate", i}, {"error", report.failures[i]}});
  j["failures"] = failures;
  if (!json_path.empty()) write_file_atomic(json_path, j.dump(2) + "\n");

  if (!csv_path.empty()) {
    std::ostringstream out;
    out << config_comment(echo);
    out << "replicate,l1\n";
    for (int i = 0; i < reps; ++i)
      out << i << ',' << nndm::format_double(report.replicates[i]) << "\n";
    write_file_atomic(csv_path, out.str());
  }
  std::cout << "bench " << density_name << " p=" << p << " n=" << n << ": mean L1 = "
            << report.mean << "\n";
  return 0;
}

int cmd_coverage(const CommonOptions& common, const std::string& density_name, int p, int n,
                 int n_t, int reps, double level, long draws, const std::string& csv_path,
                 const std::string& json_path) {
  const nndm::TestDensity density = nndm::make_test_density(density_name, p);
  nndm::FitOptions fit = to_fit_options(common);
  const nndm::CoverageReport report =
      nndm::coverage_experiment(density, fit, n, n_t, reps, level, draws, common.seed);

  ordered_json echo = echo_common("coverage", common);
  echo["density"] = density_name;
  echo["p"] = p;
  echo["n"] = n;
  echo["nt"] = n_t;
  echo["reps"] = reps;
  echo["level"] = level;
  echo["draws"] = draws;

  ordered_json j;
  j["config"] = echo;
  j["avg_coverage"] = report.avg_coverage;
  j["avg_length"] = report.avg_length;
  j["replicate_coverage"] = report.replicate_coverage;
  j["replicate_length"] = report.replicate_length;
  if (!json_path.empty()) write_file_atomic(json_path, j.dump(2) + "\n");

  if (!csv_path.empty()) {
    std::ostringstream out;
    out << config_comment(echo);
    out << "replicate,coverage,length\n";
    for (int i = 0; i < reps; ++i)
      out << i << ',' << nndm::format_double(report.replicate_coverage[i]) << ','
          << nndm::format_double(report.replicate_length[i]) << "\n";
    write_file_atomic(csv_path, out.str());
  }
  std::cout << "coverage " << density_name << ": avg coverage = " << report.avg_coverage
            << ", avg length = " << report.avg_length << "\n";
  return 0;
}

int cmd_ksweep(const CommonOptions& common, const std::string& density_name, int p, int n, int n_t,
               const std::string& k_list, int reps, const std::string& csv_path) {
  const nndm::TestDensity density = nndm::make_test_density(density_name, p);
  std::vector<int> ks;
  {
    std::istringstream ss(k_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) ks.push_back(std::stoi(tok));
  }
  const nndm::FitOptions fit = to_fit_options(common);
  const std::vector<nndm::KSweepRow> rows = nndm::k_sweep(density, fit, n, n_t, ks, reps, common.seed);

  ordered_json echo = echo_common("k-sweep", common);
  echo["density"] = density_name;
  echo["p"] = p;
  echo["n"] = n;
  echo["nt"] = n_t;
  echo["k_list"] = k_list;
  echo["reps"] = reps;

  std::ostringstream out;
  out << config_comment(echo);
  out << "k,mean_oosll,floored\n";
  for (const nndm::KSweepRow& row : rows)
    out << row.k << ',' << nndm::format_double(row.mean_oosll) << ',' << row.floored << "\n";
  write_file_atomic(csv_path, out.str());
  std::cout << "k-sweep " << density_name << ": " << rows.size() << " rows -> " << csv_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nearest neighbor-Dirichlet mixture density estimation"};
  app.require_subcommand(1);

  CommonOptions common;
  int exit_code = 0;
  const auto run = [&](auto&& fn) {
    try {
      if (common.threads > 0) nndm::set_thread_count(common.threads);
      exit_code = fn();
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      exit_code = 1;
    }
  };

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a density model from a CSV of observations");
  std::string input, model_path, report_path;
  add_common_flags(fit_cmd, common);
  fit_cmd->add_option("--input", input, "training data CSV")->required();
  fit_cmd->add_option("--model", model_path, "output model file")->required();
  fit_cmd->add_option("--report", report_path, "output JSON fit report");
  fit_cmd->callback([&] { run([&] { return cmd_fit(common, input, model_path, report_path); }); });

  // density
  auto* density_cmd = app.add_subcommand("density", "evaluate mean density and credible band on a grid");
  std::string grid_path, grid_auto, density_out, density_input;
  long density_draws = 0;
  double level = 0.95;
  add_common_flags(density_cmd, common);
  density_cmd->add_option("--model", model_path, "model file")->required();
  density_cmd->add_option("--grid", grid_path, "grid CSV (p columns)");
  density_cmd->add_option("--grid-auto", grid_auto, "lo:hi:steps, or steps (bounds from --input)");
  density_cmd->add_option("--input", density_input, "data CSV for automatic grid bounds");
  density_cmd->add_option("--draws", density_draws, "Monte Carlo draws for the band (0 = mean only)");
  density_cmd->add_option("--level", level, "credible level");
  density_cmd->add_option("--output", density_out, "output CSV")->required();
  density_cmd->callback([&] {
    run([&] {
      return cmd_density(common, model_path, grid_path, grid_auto, density_input, density_draws,
                         level, density_out);
    });
  });

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "evaluate pseudo-posterior draws on a grid");
  std::string sample_out;
  long sample_draws_count = 100;
  add_common_flags(sample_cmd, common);
  sample_cmd->add_option("--model", model_path, "model file")->required();
  sample_cmd->add_option("--grid", grid_path, "grid CSV (p columns)");
  sample_cmd->add_option("--grid-auto", grid_auto, "lo:hi:steps, or steps (bounds from --input)");
  sample_cmd->add_option("--input", density_input, "data CSV for automatic grid bounds");
  sample_cmd->add_option("--draws", sample_draws_count, "number of draws");
  sample_cmd->add_option("--output", sample_out, "output CSV")->required();
  sample_cmd->callback([&] {
    run([&] {
      return cmd_sample(common, model_path, grid_path, grid_auto, density_input,
                        sample_draws_count, sample_out);
    });
  });

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "cross-validate delta0sq on a dataset");
  std::string cv_out, cv_csv;
  add_common_flags(cv_cmd, common);
  cv_cmd->add_option("--input", input, "data CSV")->required();
  cv_cmd->add_option("--output", cv_out, "output JSON")->required();
  cv_cmd->add_option("--csv", cv_csv, "score table CSV");
  cv_cmd->callback([&] { run([&] { return cmd_cv(common, input, cv_out, cv_csv); }); });

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "two-class density-based classification");
  std::string train_path, test_path, label_col, predictions_path, metrics_path;
  double prior1 = std::numeric_limits<double>::quiet_NaN();
  bool standardize = false;
  long classify_draws = 0;
  add_common_flags(classify_cmd, common);
  classify_cmd->add_option("--train", train_path, "training CSV with label column")->required();
  classify_cmd->add_option("--test", test_path, "test CSV")->required();
  classify_cmd->add_option("--label-col", label_col, "label column name or index (default: last)");
  classify_cmd->add_option("--prior1", prior1, "class-1 prior (default: training prevalence)");
  classify_cmd->add_flag("--standardize", standardize, "center/scale features before fitting");
  classify_cmd->add_option("--draws", classify_draws, "probability draws per test point");
  classify_cmd->add_option("--predictions", predictions_path, "output predictions CSV")->required();
  classify_cmd->add_option("--metrics", metrics_path, "output metrics JSON");
  classify_cmd->callback([&] {
    run([&] {
      return cmd_classify(common, train_path, test_path, label_col, prior1, standardize,
                          classify_draws, predictions_path, metrics_path);
    });
  });

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "L1 benchmark against a synthetic density");
  std::string density_name = "gs", bench_csv, bench_json;
  int p = 1, n = 200, n_t = 500, reps = 20;
  add_common_flags(bench_cmd, common);
  bench_cmd->add_option("--density", density_name, "gs | mg | t | cw");
  bench_cmd->add_option("--p", p, "dimension");
  bench_cmd->add_option("--n", n, "training sample size");
  bench_cmd->add_option("--nt", n_t, "test sample size");
  bench_cmd->add_option("--reps", reps, "replicates");
  bench_cmd->add_option("--csv", bench_csv, "per-replicate CSV output");
  bench_cmd->add_option("--json", bench_json, "JSON report output");
  bench_cmd->callback([&] {
    run([&] { return cmd_bench(common, density_name, p, n, n_t, reps, bench_csv, bench_json); });
  });

  // coverage
  auto* coverage_cmd = app.add_subcommand("coverage", "frequentist coverage of credible intervals");
  std::string cov_csv, cov_json;
  long cov_draws = 1000;
  add_common_flags(coverage_cmd, common);
  coverage_cmd->add_option("--density", density_name, "gs | mg | t | cw");
  coverage_cmd->add_option("--p", p, "dimension");
  coverage_cmd->add_option("--n", n, "training sample size");
  coverage_cmd->add_option("--nt", n_t, "fixed test points");
  coverage_cmd->add_option("--reps", reps, "replicates");
  coverage_cmd->add_option("--level", level, "credible level");
  coverage_cmd->add_option("--draws", cov_draws, "Monte Carlo draws per replicate");
  coverage_cmd->add_option("--csv", cov_csv, "per-replicate CSV output");
  coverage_cmd->add_option("--json", cov_json, "JSON report output");
  coverage_cmd->callback([&] {
    run([&] {
      return cmd_coverage(common, density_name, p, n, n_t, reps, level, cov_draws, cov_csv,
                          cov_json);
    });
  });

  // k-sweep
  auto* ksweep_cmd = app.add_subcommand("k-sweep", "out-of-sample log-likelihood across k");
  std::string k_list = "5,10,15,20", ksweep_csv;
  add_common_flags(ksweep_cmd, common);
  ksweep_cmd->add_option("--density", density_name, "gs | mg | t | cw");
  ksweep_cmd->add_option("--p", p, "dimension");
  ksweep_cmd->add_option("--n", n, "training sample size");
  ksweep_cmd->add_option("--nt", n_t, "test sample size");
  ksweep_cmd->add_option("--k-list", k_list, "comma-separated k values");
  ksweep_cmd->add_option("--reps", reps, "replicates");
  ksweep_cmd->add_option("--csv", ksweep_csv, "output CSV")->required();
  ksweep_cmd->callback([&] {
    run([&] { return cmd_ksweep(common, density_name, p, n, n_t, k_list, reps, ksweep_csv); });
  });

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
