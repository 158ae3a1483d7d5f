#include "hdk/simulate.hpp"

#include <Eigen/QR>
#include <cmath>
#include <limits>

#include "hdk/errors.hpp"

namespace hdk {

namespace {

// Deterministic sign fix, as for fitted bases.
void fix_column_signs(Eigen::MatrixXd& basis) {
  for (int c = 0; c < basis.cols(); ++c) {
    int imax = 0;
    double amax = 0.0;
    for (int r = 0; r < basis.rows(); ++r) {
      double a = std::abs(basis(r, c));
      if (a > amax) {
        amax = a;
        imax = r;
      }
    }
    if (basis(imax, c) < 0.0) basis.col(c) = -basis.col(c);
  }
}

}  // namespace

Eigen::VectorXd SimConfig::default_eigvals(int p) {
  Eigen::VectorXd v(p);
  double lam = 10.0;
  for (int i = 0; i < p; ++i) {
    v[i] = lam;
    lam *= 0.8;
  }
  return v;
}

void SimConfig::validate() const {
  if (class_count < 1) throw ConfigError("class count must be >= 1");
  if (dim < 2) throw ConfigError("dimension must be >= 2");
  if (subspace_dim < 1 || subspace_dim >= dim)
    throw ConfigError("subspace dimension must satisfy 1 <= p < d");
  if (!(snr > 0.0)) throw ConfigError("snr must be > 0");
  if (n_train < 1 || n_test < 1) throw ConfigError("sample counts must be >= 1");
  if (!(noise_floor > 0.0)) throw ConfigError("noise floor must be > 0");
  Eigen::VectorXd ev = signal_eigvals.size() ? signal_eigvals
                                             : default_eigvals(subspace_dim);
  if (ev.size() != subspace_dim)
    throw ConfigError("eigenvalue profile length must equal the subspace dimension");
  for (int i = 0; i < ev.size(); ++i) {
    if (!(ev[i] > noise_floor))
      throw ConfigError("signal eigenvalues must exceed the noise floor");
    if (i > 0 && !(ev[i] < ev[i - 1]))
      throw ConfigError("signal eigenvalues must be strictly decreasing");
  }
  if (fixed_alpha.size()) {
    if (fixed_alpha.size() != class_count)
      throw ConfigError("fixed alpha length must equal the class count");
    for (int i = 0; i < fixed_alpha.size(); ++i)
      if (!(fixed_alpha[i] >= 0.0)) throw ConfigError("alpha entries must be >= 0");
    if (std::abs(fixed_alpha.sum() - 1.0) > 1e-9)
      throw ConfigError("fixed alpha must sum to 1");
  }
}

GroundTruthModel make_ground_truth(const SimConfig& config) {
  config.validate();
  const int d = config.dim;
  const int p = config.subspace_dim;
  Eigen::VectorXd eigvals = config.signal_eigvals.size()
                                ? config.signal_eigvals
                                : SimConfig::default_eigvals(p);

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> bump_count(3, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> amp(0.2, 1.0);
  std::uniform_real_distribution<double> width(0.05, 0.2);
  std::normal_distribution<double> gauss(0.0, 1.0);

  GroundTruthModel model;
  for (int c = 0; c < config.class_count; ++c) {
    // smooth reflectance-like curve: a few Gaussian bumps over [0,1]
    int nb = bump_count(rng);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (int b = 0; b < nb; ++b) {
      double a = amp(rng), center = unit(rng), w = width(rng);
      for (int k = 0; k < d; ++k) {
        double t = d > 1 ? static_cast<double>(k) / (d - 1) : 0.0;
        double u = (t - center) / w;
        mean[k] += a * std::exp(-0.5 * u * u);
      }
    }
    Eigen::MatrixXd raw(d, p);
    for (int j = 0; j < p; ++j)
      for (int i = 0; i < d; ++i) raw(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, p);
    fix_column_signs(Q);

    model.means.push_back(std::move(mean));
    model.bases.push_back(std::move(Q));
    model.eigvals.push_back(eigvals);
    model.noise_floors.push_back(config.noise_floor);
  }
  return model;
}

SimBatch sample_mixture(const GroundTruthModel& model, const SimConfig& config,
                        int count, std::mt19937_64& rng) {
  config.validate();
  const int d = model.dim();
  const int nc = model.class_count();
  if (nc != config.class_count || d != config.dim)
    throw ConfigError("ground truth and config disagree");
  if (count < 1) throw ConfigError("sample count must be >= 1");

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  Eigen::MatrixXd signals(count, d);
  std::vector<long long> raw_labels(count);

  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd alpha(nc);
    if (config.fixed_alpha.size()) {
      alpha = config.fixed_alpha;
    } else {
      for (int c = 0; c < nc; ++c) alpha[c] = expo(rng);
      alpha /= alpha.sum();
    }
    int label = 0;
    for (int c = 1; c < nc; ++c)
      if (alpha[c] > alpha[label]) label = c;  // lowest index wins ties
    raw_labels[s] = label + 1;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    for (int c = 0; c < nc; ++c) {
      const auto& Q = model.bases[c];
      const auto& lam = model.eigvals[c];
      const int p = static_cast<int>(lam.size());
      Eigen::VectorXd xi_p(p);
      for (int i = 0; i < p; ++i) xi_p[i] = gauss(rng) * std::sqrt(lam[i]);
      Eigen::VectorXd xi_d(d);
      for (int i = 0; i < d; ++i) xi_d[i] = gauss(rng);
      // signal part in the subspace, isotropic floor in its complement
      Eigen::VectorXd draw = model.means[c] + Q * xi_p +
                             std::sqrt(model.noise_floors[c]) *
                                 (xi_d - Q * (Q.transpose() * xi_d));
      x += alpha[c] * draw;
    }
    signals.row(s) = x;
  }

  // Noise calibrated on this batch so the realized SNR matches the target:
  // SNR = mean_j |signal_j - mean(signal)|^2 / d / eps^2.
  Eigen::RowVectorXd sig_mean = signals.colwise().mean();
  double power = (signals.rowwise() - sig_mean).squaredNorm() /
                 (static_cast<double>(count) * d);

  SimBatch batch;
  if (std::isinf(config.snr)) {
    batch.epsilon_sq = 0.0;
    batch.realized_snr = std::numeric_limits<double>::infinity();
  } else {
    batch.epsilon_sq = power / config.snr;
    batch.realized_snr = batch.epsilon_sq > 0.0
                             ? power / batch.epsilon_sq
                             : std::numeric_limits<double>::infinity();
  }

  batch.data.features = signals;
  if (batch.epsilon_sq > 0.0) {
    double eps = std::sqrt(batch.epsilon_sq);
    for (int s = 0; s < count; ++s)
      for (int k = 0; k < d; ++k) batch.data.features(s, k) += eps * gauss(rng);
  }

  batch.data.labels.assign(raw_labels.size(), 0);
  batch.data.original_labels.clear();
  for (int c = 1; c <= nc; ++c) batch.data.original_labels.push_back(c);
  for (size_t i = 0; i < raw_labels.size(); ++i)
    batch.data.labels[i] = static_cast<int>(raw_labels[i]);
  return batch;
}

SimBatch sample_mixture(const GroundTruthModel& model, const SimConfig& config,
                        int count) {
  std::mt19937_64 rng(config.seed * 0x9e3779b97f4a7c15ULL + 1);
  return sample_mixture(model, config, count, rng);
}

SimConfig scenario_config(const std::string& name, unsigned long long seed) {
  SimConfig cfg;
  cfg.seed = seed;
  if (name == "sim2" || name == "sim3" || name == "sim4") {
    cfg.class_count = name == "sim2" ? 2 : (name == "sim3" ? 3 : 4);
    cfg.dim = 413;
    cfg.subspace_dim = 10;
    cfg.snr = 1.0;
    cfg.n_train = 1000;
    cfg.n_test = 1500;
  } else if (name == "sim-desk") {
    cfg.class_count = 2;
    cfg.dim = 100;
    cfg.subspace_dim = 5;
    cfg.snr = 1.0;
    cfg.n_train = 200;
    cfg.n_test = 500;
  } else {
    throw ConfigError("unknown scenario '" + name +
                      "' (expected sim2, sim3, sim4 or sim-desk)");
  }
  return cfg;
}

Scenario paper_scenario(const std::string& name, unsigned long long seed) {
  Scenario sc;
  sc.config = scenario_config(name, seed);
  sc.model = make_ground_truth(sc.config);
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  sc.train = sample_mixture(sc.model, sc.config, sc.config.n_train, rng);
  sc.test = sample_mixture(sc.model, sc.config, sc.config.n_test, rng);
  return sc;
}

}  // namespace hdk
