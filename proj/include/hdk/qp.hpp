#pragma once

#include <Eigen/Core>
#include <vector>

#include "hdk/kernels.hpp"

namespace hdk {

/// Solution of the L2-SVM dual
///   max g(a) = sum a_i - 1/2 sum a_i a_j y_i y_j k~_ij
///   s.t. a >= 0, sum a_i y_i = 0.
struct SvmSolution {
  Eigen::VectorXd alpha;
  double bias = 0.0;
  double objective = 0.0;            // g at alpha
  double margin_sq = 0.0;            // 2 sum a - quad, equals 2 * objective at the optimum
  std::vector<int> support_indices;  // alpha_i above the support cutoff
  double kkt_residual = 0.0;
  bool converged = false;
  long long iterations = 0;
};

/// Solution of the enclosing-ball problem
///   max g'(b) = sum b_i k~_ii - sum b_i b_j k~_ij
///   s.t. b >= 0, sum b_i = 1.
struct RadiusSolution {
  Eigen::VectorXd beta;
  double radius_sq = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  long long iterations = 0;
};

/// Two-coordinate ascent (maximal violating pair, lowest index on ties).
/// `max_iter` < 0 selects the default 100 n. A warm start must be
/// feasible for (k~, y). On hitting max_iter the best iterate is
/// returned with converged = false.
SvmSolution solve_svm_dual(const GramMatrix& ktilde, const Eigen::VectorXi& y,
                           double tol = 1e-6, long long max_iter = -1,
                           const Eigen::VectorXd* warm_start = nullptr);

/// Pairwise Frank-Wolfe over the simplex, started from the uniform
/// weights unless warm-started.
RadiusSolution solve_radius(const GramMatrix& ktilde, double tol = 1e-6,
                            long long max_iter = -1,
                            const Eigen::VectorXd* warm_start = nullptr);

/// f(z) = sum_{i in SV} alpha_i y_i k(x_i, z) + b with the unregularized
/// kernel. The predicted binary label is sign(f); f == 0 counts as +1.
double decision_function(const SvmSolution& solution, const KernelSpec& spec,
                         const Eigen::MatrixXd& train_X, const Eigen::VectorXi& y,
                         const Eigen::VectorXd& z);

}  // namespace hdk
