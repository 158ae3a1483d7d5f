#include "hdk/tune.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "hdk/errors.hpp"

namespace hdk {

namespace {

Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& A) {
  Eigen::VectorXd nrm = A.rowwise().squaredNorm();
  Eigen::MatrixXd D = -2.0 * (A * A.transpose());
  D.colwise() += nrm;
  D.rowwise() += nrm.transpose();
  D.diagonal().setZero();
  return D.cwiseMax(0.0);
}

Eigen::MatrixXd coordinate_sqdist(const Eigen::VectorXd& v) {
  Eigen::MatrixXd D(v.size(), v.size());
  for (int i = 0; i < v.size(); ++i)
    for (int j = 0; j < v.size(); ++j) {
      double diff = v[i] - v[j];
      D(i, j) = diff * diff;
    }
  return D;
}

constexpr double kLogBound = 300.0;  // keeps exp(+-v) comfortably finite

}  // namespace

std::string stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::GradientTol: return "gradient-tol";
    case StopReason::RelativeTTol: return "relative-T-tol";
    case StopReason::MaxIter: return "max-iter";
    case StopReason::LineSearchFailure: return "line-search-failure";
  }
  return "?";
}

RadiusMargin radius_margin(const GramMatrix& ktilde, const Eigen::VectorXi& y,
                           double qp_tol, long long qp_max_iter,
                           const Eigen::VectorXd* warm_alpha,
                           const Eigen::VectorXd* warm_beta) {
  RadiusMargin rm;
  rm.svm = solve_svm_dual(ktilde, y, qp_tol, qp_max_iter, warm_alpha);
  rm.radius = solve_radius(ktilde, qp_tol, qp_max_iter, warm_beta);
  rm.margin_sq = rm.svm.margin_sq;
  rm.radius_sq = rm.radius.radius_sq;
  rm.T = rm.radius_sq * rm.margin_sq;
  return rm;
}

double radius_grad_c(const Eigen::VectorXd& beta, double C) {
  double s = 0.0;
  for (int i = 0; i < beta.size(); ++i) s += beta[i] * (beta[i] - 1.0);
  return s / (C * C);
}

double margin_grad_c(const Eigen::VectorXd& alpha, double C) {
  return alpha.squaredNorm() / (C * C);
}

Eigen::VectorXd grad_T(const GramMatrix& ktilde, const Eigen::VectorXi& y,
                       const KernelSpec& spec, double C, const SvmSolution& svm,
                       const RadiusSolution& radius, const Eigen::MatrixXd& train_X) {
  if (!svm.converged || !radius.converged)
    throw NumericError("grad_T needs converged QP solutions");
  const int n = ktilde.rows();
  if (train_X.rows() != n) throw DataError("grad_T: sample count mismatch");

  const double M2 = svm.margin_sq;
  const double R2 = radius.radius_sq;
  const Eigen::VectorXd ay =
      (svm.alpha.array() * y.cast<double>().array()).matrix();
  const Eigen::VectorXd& beta = radius.beta;

  const int m = spec.weight_count();
  Eigen::VectorXd g(m + 1);
  g[0] = radius_grad_c(beta, C) * M2 + R2 * margin_grad_c(svm.alpha, C);

  // dk/dsigma^2_l = dist_l^2 / (2 sigma^4_l) * k; the diagonal vanishes
  // with the distances, so the C^-1 term never contributes.
  const int p = spec.model ? spec.model->p_hat : 0;
  for (int ell = 1; ell <= m; ++ell) {
    const bool signal = spec.family != KernelFamily::Gaussian && ell <= p;
    Eigen::MatrixXd D;
    if (signal) {
      D = coordinate_sqdist(train_X * spec.model->basis.col(ell - 1));
    } else {
      D = pairwise_sqdist(train_X);
    }
    const double w = spec.weights[ell - 1];
    Eigen::MatrixXd dK =
        (0.5 * w * w) * D.cwiseProduct(ktilde.values);
    dK.diagonal().setZero();
    double dR = -beta.dot(dK * beta);
    double dM = -ay.dot(dK * ay);
    g[ell] = dR * M2 + R2 * dM;
  }
  return g;
}

TuningVector TuningVector::from_spec(const KernelSpec& spec, double C) {
  if (!(C > 0.0)) throw ConfigError("C must be > 0");
  TuningVector v;
  v.log_sigma_sq.resize(spec.weight_count());
  for (int i = 0; i < spec.weight_count(); ++i) {
    if (!(spec.weights[i] > 0.0))
      throw ConfigError("cannot tune a switched-off kernel direction");
    v.log_sigma_sq[i] = -std::log(spec.weights[i]);
  }
  v.log_C = std::log(C);
  return v;
}

KernelSpec TuningVector::to_spec(KernelFamily family,
                                 std::shared_ptr<const HddaClassModel> model) const {
  Eigen::VectorXd w(log_sigma_sq.size());
  for (int i = 0; i < w.size(); ++i) w[i] = std::exp(-log_sigma_sq[i]);
  return KernelSpec::from_weights(family, std::move(model), w);
}

double TuningVector::C() const { return std::exp(log_C); }

double median_sqdist(const Eigen::MatrixXd& X, unsigned long long seed,
                     int max_rows) {
  int n = static_cast<int>(X.rows());
  std::vector<int> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  if (n > max_rows) {
    std::mt19937_64 rng(seed);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(max_rows);
    n = max_rows;
  }
  std::vector<double> dists;
  dists.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      dists.push_back((X.row(rows[i]) - X.row(rows[j])).squaredNorm());
  if (dists.empty()) return 1.0;
  auto mid = dists.begin() + dists.size() / 2;
  std::nth_element(dists.begin(), mid, dists.end());
  return std::max(*mid, 1e-12);
}

KernelSpec initial_spec(KernelFamily family,
                        std::shared_ptr<const HddaClassModel> model,
                        const Eigen::MatrixXd& X, unsigned long long seed) {
  if (family == KernelFamily::Gaussian)
    return KernelSpec::gaussian(median_sqdist(X, seed));

  if (!model) throw ConfigError("Mahalanobis families need a class model");
  const int p = model->p_hat;
  const int n = static_cast<int>(X.rows());
  const double noise_scale = model->noise * model->dim;

  // rho scales the model-suggested bandwidths so the mean exponent over
  // sampled training pairs is -1.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  double acc = 0.0;
  int used = 0;
  for (int t = 0; t < 100; ++t) {
    int i = pick(rng), j = pick(rng);
    if (i == j) continue;
    Eigen::VectorXd delta = X.row(i) - X.row(j);
    Eigen::VectorXd proj = model->basis.transpose() * delta;
    double e = 0.0;
    for (int l = 0; l < p; ++l) e += proj[l] * proj[l] / model->eigvals[l];
    if (family == KernelFamily::HddaMahalanobis)
      e += delta.squaredNorm() / noise_scale;
    acc += 0.5 * e;
    ++used;
  }
  double rho = used > 0 ? acc / used : 1.0;
  if (!(rho > 0.0)) rho = 1.0;

  Eigen::VectorXd sigma_sq(family == KernelFamily::HddaMahalanobis ? p + 1 : p);
  for (int l = 0; l < p; ++l) sigma_sq[l] = model->eigvals[l] * rho;
  if (family == KernelFamily::HddaMahalanobis) sigma_sq[p] = noise_scale * rho;
  return family == KernelFamily::HddaMahalanobis ? KernelSpec::hdda(model, sigma_sq)
                                                 : KernelSpec::pca(model, sigma_sq);
}

namespace {

struct Probe {
  double T = std::numeric_limits<double>::quiet_NaN();
  RadiusMargin rm;
  KernelSpec spec;
};

Probe evaluate_point(const TuningVector& v, KernelFamily family,
                     const std::shared_ptr<const HddaClassModel>& model,
                     const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                     const TuneConfig& cfg, const Eigen::VectorXd* warm_a,
                     const Eigen::VectorXd* warm_b) {
  Probe pr;
  pr.spec = v.to_spec(family, model);
  GramMatrix kt = gram_regularized(pr.spec, X, v.C());
  pr.rm = radius_margin(kt, y, cfg.qp_tol, cfg.qp_max_iter, warm_a, warm_b);
  pr.T = pr.rm.T;
  return pr;
}

TuneResult descend(const TuningVector& start, KernelFamily family,
                   const std::shared_ptr<const HddaClassModel>& model,
                   const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                   const TuneConfig& cfg) {
  TuningVector v = start;
  Probe cur = evaluate_point(v, family, model, X, y, cfg, nullptr, nullptr);

  TuneResult result;
  result.best_T = cur.T;
  result.spec = cur.spec;
  result.C = v.C();

  auto record = [&](int iter, double step, double gnorm) {
    TuneRecord r;
    r.iteration = iter;
    r.T = cur.T;
    r.radius_sq = cur.rm.radius_sq;
    r.margin_sq = cur.rm.margin_sq;
    r.step = step;
    r.grad_norm = gnorm;
    r.log_sigma_sq = v.log_sigma_sq;
    r.log_C = v.log_C;
    result.trace.records.push_back(std::move(r));
  };
  auto consider_best = [&](const Probe& p, const TuningVector& at) {
    if (std::isfinite(p.T) && p.T < result.best_T) {
      result.best_T = p.T;
      result.spec = p.spec;
      result.C = at.C();
    }
  };
  record(0, 0.0, 0.0);

  std::deque<double> recent_changes;
  result.trace.reason = StopReason::MaxIter;

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    GramMatrix kt = gram_regularized(cur.spec, X, v.C());
    Eigen::VectorXd g =
        grad_T(kt, y, cur.spec, v.C(), cur.rm.svm, cur.rm.radius, X);

    // chain rule into log coordinates: d/dlog sigma^2 = sigma^2 * d/dsigma^2
    const int m = static_cast<int>(v.log_sigma_sq.size());
    Eigen::VectorXd glog(m + 1);
    for (int l = 0; l < m; ++l) glog[l] = std::exp(v.log_sigma_sq[l]) * g[l + 1];
    glog[m] = v.C() * g[0];
    double gnorm = glog.cwiseAbs().maxCoeff();
    if (gnorm < cfg.grad_tol) {
      result.trace.reason = StopReason::GradientTol;
      break;
    }

    double step = cfg.step0;
    bool accepted = false;
    TuningVector v_try;
    Probe probe;
    for (int h = 0; h <= cfg.max_halvings; ++h) {
      v_try = v;
      for (int l = 0; l < m; ++l)
        v_try.log_sigma_sq[l] =
            std::clamp(v.log_sigma_sq[l] - step * glog[l], -kLogBound, kLogBound);
      v_try.log_C = std::clamp(v.log_C - step * glog[m], -kLogBound, kLogBound);
      probe = evaluate_point(v_try, family, model, X, y, cfg,
                             &cur.rm.svm.alpha, &cur.rm.radius.beta);
      consider_best(probe, v_try);
      if (std::isfinite(probe.T) && probe.T < cur.T) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack;
    }
    if (!accepted) {
      result.trace.reason = StopReason::LineSearchFailure;
      break;
    }

    double rel_change = (cur.T - probe.T) / std::max(cur.T, 1e-300);
    v = v_try;
    cur = probe;
    record(iter, step, gnorm);

    recent_changes.push_back(rel_change);
    if (recent_changes.size() > 3) recent_changes.pop_front();
    if (recent_changes.size() == 3 &&
        *std::max_element(recent_changes.begin(), recent_changes.end()) <
            cfg.rel_tol) {
      result.trace.reason = StopReason::RelativeTTol;
      break;
    }
  }
  return result;
}

}  // namespace

TuneResult optimize(const Eigen::MatrixXd& train_X, const Eigen::VectorXi& y,
                    const KernelSpec& init_spec, double init_C,
                    const TuneConfig& config) {
  TuningVector v0 = TuningVector::from_spec(init_spec, init_C);
  std::shared_ptr<const HddaClassModel> model = init_spec.model;

  TuneResult best;
  for (int s = 0; s < std::max(1, config.multi_start); ++s) {
    TuningVector v = v0;
    if (s > 0) {
      std::mt19937_64 rng(config.seed + 0x9e3779b97f4a7c15ULL * s);
      std::normal_distribution<double> jitter(0.0, 0.5);
      for (int l = 0; l < v.log_sigma_sq.size(); ++l)
        v.log_sigma_sq[l] += jitter(rng);
      v.log_C += jitter(rng);
    }
    TuneResult r = descend(v, init_spec.family, model, train_X, y, config);
    if (s == 0 || r.best_T < best.best_T) best = std::move(r);
  }
  return best;
}

}  // namespace hdk
