#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nndm/cv.hpp"
#include "nndm/dataset.hpp"
#include "nndm/errors.hpp"
#include "nndm/hyperparameters.hpp"
#include "nndm/io.hpp"
#include "nndm/neighbors.hpp"
#include "nndm/parallel.hpp"
#include "nndm/posterior.hpp"
#include "nndm/student_t.hpp"

namespace nndm {

enum class ValueSource { kDefault, kCv, kRule, kUser };

inline const char* to_string(ValueSource s) {
  switch (s) {
    case ValueSource::kDefault: return "default";
    case ValueSource::kCv: return "cv";
    case ValueSource::kRule: return "rule";
    case ValueSource::kUser: return "user";
  }
  return "default";
}

inline ValueSource value_source_from_string(const std::string& s) {
  if (s == "default") return ValueSource::kDefault;
  if (s == "cv") return ValueSource::kCv;
  if (s == "rule") return ValueSource::kRule;
  if (s == "user") return ValueSource::kUser;
  throw parse_error("unknown value source '" + s + "'");
}

struct Provenance {
  std::uint64_t seed = 0;
  ValueSource delta0sq_source = ValueSource::kDefault;
  ValueSource alpha_source = ValueSource::kDefault;
};

struct FitOptions {
  // 0 means "use the default rule for this n and p"
  int k = 0;
  // NaN + cv=false -> delta0sq = 1; cv=true -> cross-validated
  double delta0sq = std::numeric_limits<double>::quiet_NaN();
  bool cv = false;
  std::vector<double> cv_grid;  // empty -> default_delta0_grid()
  // NaN + alpha_rule=false -> alpha = 0; alpha_rule=true -> choose_alpha()
  double alpha = std::numeric_limits<double>::quiet_NaN();
  bool alpha_rule = false;
  // prior location/precision/shape; NaN or empty -> section defaults
  Eigen::VectorXd mu0;
  double nu0 = 0.001;
  double gamma0 = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
};

// The fitted pseudo-posterior: n neighborhood posteriors sharing one prior.
// Immutable once constructed; evaluation methods are const and thread-safe.
class FittedModel {
public:
  FittedModel() = default;
  FittedModel(Hyperparameters hyper, std::vector<NeighborhoodPosterior> posteriors,
              Eigen::Index n, Eigen::Index p, Provenance provenance, std::optional<CvResult> cv = {})
      : hyper_(std::move(hyper)),
        posteriors_(std::move(posteriors)),
        n_(n),
        p_(p),
        provenance_(provenance),
        cv_(std::move(cv)) {
    build_mean_mixture();
  }

  const Hyperparameters& hyper() const { return hyper_; }
  const std::vector<NeighborhoodPosterior>& posteriors() const { return posteriors_; }
  Eigen::Index n() const { return n_; }
  Eigen::Index p() const { return p_; }
  const Provenance& provenance() const { return provenance_; }
  const std::optional<CvResult>& cv_result() const { return cv_; }
  double t_df() const { return hyper_.gamma_n() - static_cast<double>(p_) + 1.0; }

  // Pseudo-posterior mean density: the equal-weight mixture of posterior
  // predictive t kernels, evaluated through the multivariate closed form.
  double mean_log_density(const Eigen::VectorXd& x) const {
    if (x.size() != p_) throw invalid_parameter("mean density: point has wrong dimension");
    std::vector<double> work = mean_mix_.make_workspace();
    return mean_mix_.logpdf(x.data(), work.data());
  }

  double mean_density(const Eigen::VectorXd& x) const { return std::exp(mean_log_density(x)); }

  // Univariate closed form (p = 1 only): mixture of location-scale t
  // densities with scale lambda_i = delta_i sqrt((nu_n + 1)/nu_n) and
  // gamma_n degrees of freedom. Kept as an independent route from the
  // multivariate evaluation path.
  double mean_density_univariate(double x) const {
    if (p_ != 1) throw invalid_parameter("mean_density_univariate requires p = 1");
    const double gamma_n = hyper_.gamma_n();
    const double nu_n = hyper_.nu_n();
    detail::RunningLogSum lse;
    for (const NeighborhoodPosterior& post : posteriors_) {
      const double lambda = std::sqrt(post.delta_sq() * (nu_n + 1.0) / nu_n);
      lse.add(t1_logpdf((x - post.mu[0]) / lambda, gamma_n) - std::log(lambda));
    }
    return std::exp(lse.value()) / static_cast<double>(n_);
  }

  // Access for the Monte Carlo machinery.
  const detail::PackedMixture& mean_mixture() const { return mean_mix_; }

private:
  void build_mean_mixture() {
    const int p = static_cast<int>(p_);
    const int count = static_cast<int>(posteriors_.size());
    const double df = t_df();
    mean_mix_.p = p;
    mean_mix_.count = count;
    mean_mix_.df = df;
    mean_mix_.loc.resize(static_cast<std::size_t>(count) * p);
    mean_mix_.factor.resize(static_cast<std::size_t>(count) * detail::PackedMixture::packed_size(p));
    mean_mix_.log_norm.resize(count);
    const double log_kernel_const = std::lgamma(0.5 * (df + p)) - std::lgamma(0.5 * df) -
                                    0.5 * p * (std::log(df) + kLogPi);
    const double log_weight = -std::log(static_cast<double>(count));
    for (int c = 0; c < count; ++c) {
      const NeighborhoodPosterior& post = posteriors_[c];
      const CholeskyFactor lam = post.lambda_chol();
      for (int r = 0; r < p; ++r) mean_mix_.loc[static_cast<std::size_t>(c) * p + r] = post.mu[r];
      double* f = mean_mix_.factor.data() +
                  static_cast<std::size_t>(c) * detail::PackedMixture::packed_size(p);
      int idx = 0;
      for (int r = 0; r < p; ++r)
        for (int cc = 0; cc <= r; ++cc) f[idx++] = lam.L(r, cc);
      mean_mix_.log_norm[c] = log_weight + log_kernel_const - 0.5 * lam.logdet;
    }
  }

  Hyperparameters hyper_;
  std::vector<NeighborhoodPosterior> posteriors_;
  Eigen::Index n_ = 0;
  Eigen::Index p_ = 0;
  Provenance provenance_;
  std::optional<CvResult> cv_;
  detail::PackedMixture mean_mix_;
};

// Algorithm steps 1 and 2 plus hyperparameter selection: neighborhoods,
// optional cross-validation of delta0sq, conjugate updates, optional
// data-driven alpha. Deterministic given (data, options).
inline FittedModel fit(const Dataset& data, const FitOptions& options = {}) {
  data.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();

  Hyperparameters hyper = default_hyperparameters(std::max<Eigen::Index>(n, 3), p);
  if (options.mu0.size() > 0) {
    if (options.mu0.size() != p) throw invalid_parameter("fit: mu0 has wrong dimension");
    hyper.mu0 = options.mu0;
  }
  if (!std::isnan(options.nu0)) hyper.nu0 = options.nu0;
  if (!std::isnan(options.gamma0)) hyper.gamma0 = options.gamma0;
  if (options.k != 0) hyper.k = options.k;
  if (n < std::max(3, hyper.k))
    throw invalid_parameter("fit: need n >= max(3, k)");

  Provenance prov;
  prov.seed = options.seed;

  std::optional<CvResult> cv_out;
  if (options.cv) {
    if (!std::isnan(options.delta0sq))
      throw invalid_parameter("fit: give either a delta0sq value or cv, not both");
    const std::vector<double> grid =
        options.cv_grid.empty() ? default_delta0_grid() : options.cv_grid;
    CvResult cv = cv_delta0(data, hyper.k, hyper, grid);
    hyper.delta0sq = cv.best;
    prov.delta0sq_source = ValueSource::kCv;
    cv_out = std::move(cv);
  } else if (!std::isnan(options.delta0sq)) {
    hyper.delta0sq = options.delta0sq;
    prov.delta0sq_source = ValueSource::kUser;
  }

  hyper.validate();
  const std::vector<Neighborhood> neighborhoods = build_neighborhoods(data, hyper.k);
  std::vector<NeighborhoodPosterior> posteriors(n);
  parallel_for(n, [&](std::int64_t i) { posteriors[i] = update_neighborhood(neighborhoods[i], hyper); });

  if (options.alpha_rule) {
    if (!std::isnan(options.alpha))
      throw invalid_parameter("fit: give either an alpha value or the alpha rule, not both");
    hyper.alpha = choose_alpha(data, hyper);
    prov.alpha_source = ValueSource::kRule;
  } else if (!std::isnan(options.alpha)) {
    hyper.alpha = options.alpha;
    prov.alpha_source = ValueSource::kUser;
  }

  return FittedModel(std::move(hyper), std::move(posteriors), n, p, prov, std::move(cv_out));
}

// ---------------------------------------------------------------------------
// Persistence: a versioned line-oriented text format. Every float is written
// in its shortest round-trip form, so save/load is lossless and a reloaded
// model evaluates identically.

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelMagic = "nndm-model";

inline void save_model(const FittedModel& model, std::ostream& out) {
  out << kModelMagic << ' ' << kModelFormatVersion << '\n';
  out << "n " << model.n() << '\n';
  out << "p " << model.p() << '\n';
  const Hyperparameters& h = model.hyper();
  out << "k " << h.k << '\n';
  out << "nu0 " << format_double(h.nu0) << '\n';
  out << "gamma0 " << format_double(h.gamma0) << '\n';
  out << "delta0sq " << format_double(h.delta0sq) << '\n';
  out << "alpha " << format_double(h.alpha) << '\n';
  out << "mu0";
  for (Eigen::Index j = 0; j < h.mu0.size(); ++j) out << ' ' << format_double(h.mu0[j]);
  out << '\n';
  const Provenance& prov = model.provenance();
  out << "seed " << prov.seed << '\n';
  out << "delta0sq_source " << to_string(prov.delta0sq_source) << '\n';
  out << "alpha_source " << to_string(prov.alpha_source) << '\n';
  for (const NeighborhoodPosterior& post : model.posteriors()) {
    out << "mu";
    for (Eigen::Index j = 0; j < post.mu.size(); ++j) out << ' ' << format_double(post.mu[j]);
    out << '\n';
    out << "psi";
    for (Eigen::Index r = 0; r < post.psi.rows(); ++r)
      for (Eigen::Index c = 0; c < post.psi.cols(); ++c) out << ' ' << format_double(post.psi(r, c));
    out << '\n';
  }
  out << "end\n";
}

inline void save_model(const FittedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error(path + ": cannot open for writing");
  save_model(model, out);
  out.flush();
  if (!out) throw parse_error(path + ": write failed");
}

namespace detail {

class LineReader {
public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Reads the next line and returns its keyword and value part.
  std::pair<std::string, std::string> next(const char* expected_key) {
    std::string line;
    const auto before = in_.tellg();
    if (!std::getline(in_, line))
      throw parse_error(std::string("model file truncated, expected '") + expected_key + "'",
                        before >= 0 ? static_cast<long long>(before) : -1);
    offset_ += static_cast<long long>(line.size()) + 1;
    const auto space = line.find(' ');
    std::string key = space == std::string::npos ? line : line.substr(0, space);
    std::string value = space == std::string::npos ? std::string() : line.substr(space + 1);
    if (key != expected_key)
      throw parse_error("model file: expected '" + std::string(expected_key) + "', got '" + key +
                            "'",
                        offset_ - static_cast<long long>(line.size()) - 1);
    return {std::move(key), std::move(value)};
  }

  long long offset() const { return offset_; }

private:
  std::istream& in_;
  long long offset_ = 0;
};

inline double parse_model_double(const std::string& s, const char* what, long long offset) {
  double v;
  if (!try_parse_double(s, v)) throw parse_error(std::string("model file: bad ") + what, offset);
  return v;
}

inline std::vector<double> parse_doubles(const std::string& s, std::size_t count, const char* what,
                                         long long offset) {
  std::vector<double> out;
  out.reserve(count);
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t end = s.find(' ', start);
    if (end == std::string::npos) end = s.size();
    double v;
    if (!try_parse_double(std::string_view(s).substr(start, end - start), v))
      throw parse_error(std::string("model file: bad ") + what, offset);
    out.push_back(v);
    start = end + 1;
  }
  if (out.size() != count)
    throw parse_error(std::string("model file: wrong number of values for ") + what, offset);
  return out;
}

}  // namespace detail

inline FittedModel load_model(std::istream& in) {
  detail::LineReader reader(in);
  auto [magic_key, version_str] = reader.next(kModelMagic);
  long long version = -1;
  try {
    version = std::stoll(version_str);
  } catch (...) {
    throw parse_error("model file: bad version field", 0);
  }
  if (version != kModelFormatVersion)
    throw parse_error("model file version " + std::to_string(version) +
                          " is not supported by this build (expected " +
                          std::to_string(kModelFormatVersion) + ")",
                      0);

  const auto read_count = [&](const char* key) {
    auto [k, v] = reader.next(key);
    const double parsed = detail::parse_model_double(v, key, reader.offset());
    if (parsed < 0 || parsed != std::floor(parsed))
      throw parse_error(std::string("model file: bad ") + key, reader.offset());
    return static_cast<Eigen::Index>(parsed);
  };

  const Eigen::Index n = read_count("n");
  const Eigen::Index p = read_count("p");
  if (n < 1 || p < 1) throw parse_error("model file: n and p must be positive", reader.offset());

  Hyperparameters hyper;
  hyper.k = static_cast<int>(read_count("k"));
  hyper.nu0 = detail::parse_model_double(reader.next("nu0").second, "nu0", reader.offset());
  hyper.gamma0 = detail::parse_model_double(reader.next("gamma0").second, "gamma0", reader.offset());
  hyper.delta0sq =
      detail::parse_model_double(reader.next("delta0sq").second, "delta0sq", reader.offset());
  hyper.alpha = detail::parse_model_double(reader.next("alpha").second, "alpha", reader.offset());
  const auto mu0 = detail::parse_doubles(reader.next("mu0").second, p, "mu0", reader.offset());
  hyper.mu0 = Eigen::Map<const Eigen::VectorXd>(mu0.data(), p);

  Provenance prov;
  {
    auto [k1, seed_str] = reader.next("seed");
    try {
      prov.seed = std::stoull(seed_str);
    } catch (...) {
      throw parse_error("model file: bad seed", reader.offset());
    }
    prov.delta0sq_source = value_source_from_string(reader.next("delta0sq_source").second);
    prov.alpha_source = value_source_from_string(reader.next("alpha_source").second);
  }

  std::vector<NeighborhoodPosterior> posteriors(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    NeighborhoodPosterior& post = posteriors[i];
    const auto mu = detail::parse_doubles(reader.next("mu").second, p, "mu", reader.offset());
    post.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), p);
    const auto psi = detail::parse_doubles(reader.next("psi").second, static_cast<std::size_t>(p) * p,
                                           "psi", reader.offset());
    post.psi = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        psi.data(), p, p);
    post.nu_n = hyper.nu_n();
    post.gamma_n = hyper.gamma_n();
    post.psi_chol = cholesky(post.psi);
    const double c =
        (post.nu_n + 1.0) / (post.nu_n * (post.gamma_n - static_cast<double>(p) + 1.0));
    post.lambda = c * post.psi;
  }
  reader.next("end");
  return FittedModel(std::move(hyper), std::move(posteriors), n, p, prov);
}

inline FittedModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error(path + ": cannot open file");
  return load_model(in);
}

}  // namespace nndm
