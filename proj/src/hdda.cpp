#include "hdk/hdda.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "hdk/errors.hpp"

namespace hdk {

namespace {

// Deterministic sign convention: largest-magnitude component positive.
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

SpectrumEstimate estimate_spectrum(const Eigen::MatrixXd& samples, int m) {
  const int n = static_cast<int>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  if (n < 2) throw DataError("spectrum estimation needs at least 2 samples, got " +
                             std::to_string(n));
  if (m < 1) throw ConfigError("requested component count must be >= 1");

  SpectrumEstimate est;
  est.sample_count = n;
  est.mean = samples.colwise().mean();
  Eigen::MatrixXd centered = samples.rowwise() - est.mean.transpose();
  est.trace = centered.squaredNorm() / n;

  const int k = std::min({m, d, n});
  est.eigvals.resize(k);
  est.basis.resize(d, k);

  if (d <= n) {
    Eigen::MatrixXd cov = (centered.transpose() * centered) / n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    for (int i = 0; i < k; ++i) {
      est.eigvals[i] = std::max(0.0, eig.eigenvalues()[d - 1 - i]);
      est.basis.col(i) = eig.eigenvectors().col(d - 1 - i);
    }
  } else {
    // Gram trick: the n x n matrix of centered inner products shares its
    // nonzero spectrum with the covariance; u maps to q = X'u / |X'u|.
    Eigen::MatrixXd gram = (centered * centered.transpose()) / n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    for (int i = 0; i < k; ++i) {
      double lam = std::max(0.0, eig.eigenvalues()[n - 1 - i]);
      est.eigvals[i] = lam;
      Eigen::VectorXd q = centered.transpose() * eig.eigenvectors().col(n - 1 - i);
      double nrm = q.norm();
      if (nrm > 1e-150) {
        est.basis.col(i) = q / nrm;
      } else {
        est.basis.col(i).setZero();  // null direction of a zero eigenvalue
      }
    }
  }
  fix_column_signs(est.basis);
  return est;
}

ScreeResult scree_select(const Eigen::VectorXd& eigvals_desc, double s) {
  const int len = static_cast<int>(eigvals_desc.size());
  if (len < 2) throw ConfigError("scree test needs at least 2 eigenvalues");
  if (!(s > 0.0 && s < 1.0)) throw ConfigError("scree threshold must be in (0,1)");

  ScreeResult res;
  res.gaps.resize(len - 1);
  for (int i = 0; i < len - 1; ++i)
    res.gaps[i] = eigvals_desc[i] - eigvals_desc[i + 1];
  const double max_gap = res.gaps.maxCoeff();
  res.threshold = s * max_gap;

  if (max_gap <= 0.0) {
    res.degenerate = true;
    res.p_hat = 1;
    return res;
  }
  // Smallest i (1-based) with every later gap under the threshold,
  // i.e. one past the last gap that reaches it.
  int last_large = 0;
  for (int i = 0; i < len - 1; ++i)
    if (res.gaps[i] >= res.threshold) last_large = i + 1;
  res.p_hat = std::clamp(last_large + 1, 1, len - 1);
  return res;
}

double noise_estimate(double trace, double leading_sum, int d, int p,
                      double lambda1, bool* floored) {
  double b = (trace - leading_sum) / (d - p);
  double floor = std::max(1e-12, 1e-8 * lambda1);
  if (floored) *floored = b < floor;
  return std::max(b, floor);
}

HddaClassModel fit_hdda(const Eigen::MatrixXd& samples, double scree_s,
                        std::optional<int> p_override, int class_id) {
  const int n = static_cast<int>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  if (n < 3)
    throw DataError("class " + std::to_string(class_id) +
                    ": subspace fit needs at least 3 samples, got " +
                    std::to_string(n));

  SpectrumEstimate est = estimate_spectrum(samples, std::min(d, n));
  const double lam1 = est.eigvals.size() > 0 ? est.eigvals[0] : 0.0;
  if (lam1 <= 0.0)
    throw NumericError("class " + std::to_string(class_id) +
                       ": samples have zero variance, no subspace to fit");

  // Eigenvalues under 1e-12 * lambda_1 are numerical zeros and are kept
  // out of the gap computation.
  int positive = 0;
  while (positive < est.eigvals.size() && est.eigvals[positive] > 1e-12 * lam1)
    ++positive;

  HddaClassModel model;
  model.class_id = class_id;
  model.dim = d;
  model.mean = est.mean;
  model.sample_count = n;

  int p_hat;
  if (p_override) {
    p_hat = *p_override;
    if (p_hat < 1 || p_hat >= std::min(d, n))
      throw ConfigError("p_override " + std::to_string(p_hat) +
                        " outside [1, " + std::to_string(std::min(d, n) - 1) + "]");
    if (p_hat > positive)
      throw ConfigError("p_override " + std::to_string(p_hat) +
                        " exceeds the numerical rank " + std::to_string(positive));
  } else if (positive < 2) {
    p_hat = 1;
    model.degenerate_spectrum = true;
  } else {
    ScreeResult scree = scree_select(est.eigvals.head(positive), scree_s);
    p_hat = scree.p_hat;
    model.degenerate_spectrum = scree.degenerate;
  }

  model.p_hat = p_hat;
  model.eigvals = est.eigvals.head(p_hat);
  model.basis = est.basis.leftCols(p_hat);
  model.noise = noise_estimate(est.trace, model.eigvals.sum(), d, p_hat, lam1,
                               &model.noise_floored);
  return model;
}

double mahalanobis_sq(const HddaClassModel& model, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& z) {
  if (x.size() != model.dim || z.size() != model.dim)
    throw DataError("mahalanobis_sq: expected dimension " +
                    std::to_string(model.dim) + ", got " +
                    std::to_string(x.size()) + " and " + std::to_string(z.size()));
  Eigen::VectorXd delta = x - z;
  double acc = delta.squaredNorm() / model.noise;
  if (model.p_hat > 0) {
    Eigen::VectorXd proj = model.basis.transpose() * delta;
    for (int i = 0; i < model.p_hat; ++i)
      acc += (1.0 / model.eigvals[i] - 1.0 / model.noise) * proj[i] * proj[i];
  }
  return std::max(0.0, acc);
}

long long hdda_param_count(int d, int p) {
  if (p < 0 || p >= d) throw ConfigError("need 0 <= p < d");
  long long D = d, P = p;
  return D * (P + 1) + 1 - P * (P - 1) / 2;
}

long long full_param_count(int d) {
  long long D = d;
  return D * (D + 3) / 2;
}

}  // namespace hdk
