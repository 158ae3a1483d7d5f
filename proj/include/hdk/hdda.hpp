#pragma once

#include <Eigen/Core>
#include <optional>

namespace hdk {

/// Leading eigenpairs of a class sample covariance (1/n normalization)
/// plus its full trace. When d exceeds the sample count the computation
/// runs through the centered Gram matrix instead of the d x d covariance.
struct SpectrumEstimate {
  Eigen::VectorXd eigvals;  // descending, clamped at 0
  Eigen::MatrixXd basis;    // d x k, orthonormal columns
  double trace = 0.0;
  Eigen::VectorXd mean;
  int sample_count = 0;
};

SpectrumEstimate estimate_spectrum(const Eigen::MatrixXd& samples, int m);

struct ScreeResult {
  int p_hat = 1;
  bool degenerate = false;   // all gaps zero
  Eigen::VectorXd gaps;      // consecutive eigenvalue differences
  double threshold = 0.0;    // s * max gap
};

/// Cattell scree test: with gaps D_i = l_i - l_{i+1} and threshold
/// tau = s * max_i D_i, returns the smallest i such that D_j < tau for
/// all j >= i, clamped to [1, len-1]. This is the literal reading of the
/// rule; it tends to land one past the last large gap, so a mild
/// overestimate of the true dimension is expected behavior.
ScreeResult scree_select(const Eigen::VectorXd& eigvals_desc, double s);

/// Per-class parsimonious covariance model: p_hat leading eigenpairs and
/// a single noise level for the trailing d - p_hat directions. Only the
/// leading eigenpairs are ever stored.
struct HddaClassModel {
  int class_id = 0;
  int dim = 0;
  int p_hat = 0;
  Eigen::VectorXd eigvals;  // length p_hat, descending, > 0
  Eigen::MatrixXd basis;    // dim x p_hat, orthonormal columns
  double noise = 0.0;       // b, > 0
  Eigen::VectorXd mean;
  int sample_count = 0;
  bool noise_floored = false;
  bool degenerate_spectrum = false;
};

/// Noise level from the spectrum: (trace - sum of leading eigenvalues)
/// divided by d - p, floored at max(1e-12, 1e-8 * lambda_1).
double noise_estimate(double trace, double leading_sum, int d, int p,
                      double lambda1, bool* floored = nullptr);

HddaClassModel fit_hdda(const Eigen::MatrixXd& samples, double scree_s,
                        std::optional<int> p_override = std::nullopt,
                        int class_id = 0);

/// Squared Mahalanobis distance under the factored inverse:
/// sum_i (1/l_i - 1/b) |q_i'(x-z)|^2 + |x-z|^2 / b.
double mahalanobis_sq(const HddaClassModel& model, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& z);

/// Free parameters of the subspace model: d(p+1) + 1 - p(p-1)/2.
long long hdda_param_count(int d, int p);
/// Free parameters of an unconstrained Gaussian: d(d+3)/2.
long long full_param_count(int d);

}  // namespace hdk
