#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>

#include "hdk/hdda.hpp"

namespace hdk {

enum class KernelFamily { Gaussian, PcaMahalanobis, HddaMahalanobis };

std::string family_name(KernelFamily f);
KernelFamily family_from_name(const std::string& name);

/// One of three stationary kernel families. Bandwidths are stored as
/// inverse weights w = 1/sigma^2 so that sigma^2 = +inf is the exact
/// state w = 0 rather than an approximation.
///
///   Gaussian:          exp(-1/2 * w |x-z|^2),                weights = [w]
///   PcaMahalanobis:    exp(-1/2 * sum_i w_i |q_i'(x-z)|^2),  weights = [w_1..w_p]
///   HddaMahalanobis:   exp(-1/2 * (sum_i w_i |q_i'(x-z)|^2
///                                  + w_{p+1} |x-z|^2)),      weights = [w_1..w_{p+1}]
///
/// The Mahalanobis variants carry the class model providing the
/// projection basis q_i.
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  Eigen::VectorXd weights;
  std::shared_ptr<const HddaClassModel> model;  // null for Gaussian

  static KernelSpec gaussian(double sigma_sq);
  static KernelSpec pca(std::shared_ptr<const HddaClassModel> model,
                        const Eigen::VectorXd& sigma_sq);
  static KernelSpec hdda(std::shared_ptr<const HddaClassModel> model,
                         const Eigen::VectorXd& sigma_sq);
  static KernelSpec from_weights(KernelFamily family,
                                 std::shared_ptr<const HddaClassModel> model,
                                 const Eigen::VectorXd& weights);

  int weight_count() const { return static_cast<int>(weights.size()); }
  int p_hat() const { return model ? model->p_hat : 0; }
};

/// Matrix of pairwise kernel evaluations. Symmetric Grams are mirrored
/// from the upper triangle so K == K' holds exactly.
struct GramMatrix {
  Eigen::MatrixXd values;
  bool symmetric = false;
  std::optional<double> regularization_c;  // set for k~ = k + C^-1 * I

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
};

/// Kernel value in (0, 1]; exactly 1 when x == z. Exponents below -700
/// flush to 0.
double eval(const KernelSpec& spec, const Eigen::VectorXd& x,
            const Eigen::VectorXd& z);

/// Same quantity as eval for the Mahalanobis variants, computed as the
/// product of one Gaussian factor per subspace direction (plus the
/// full-space factor when the noise term is present). Kept as an
/// independent route for checking eval.
double product_form(const KernelSpec& spec, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& z);

GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& X);
GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& X,
                const Eigen::MatrixXd& Z);
/// k~ = k + C^-1 on the diagonal only.
GramMatrix gram_regularized(const KernelSpec& spec, const Eigen::MatrixXd& X,
                            double C);

/// Derivative of the kernel value with respect to sigma^2_ell
/// (1-based; ell = p_hat + 1 addresses the noise/Gaussian bandwidth):
/// dk/dsigma^2_ell = |distance term|^2 / (2 sigma^4_ell) * k.
double kernel_grad_sigma(const KernelSpec& spec, const Eigen::VectorXd& x_i,
                         const Eigen::VectorXd& x_j, int ell);

/// Metric tensor of the induced feature-space geometry at x (constant in
/// x for these kernels): Gaussian -> w I; HddaMahalanobis ->
/// sum_l w_l q_l q_l' + w_{p+1} I.
Eigen::MatrixXd metric_tensor(const KernelSpec& spec, const Eigen::VectorXd& x);

}  // namespace hdk
