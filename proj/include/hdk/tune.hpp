#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hdk/kernels.hpp"
#include "hdk/qp.hpp"

namespace hdk {

struct TuneConfig {
  double step0 = 1.0;        // initial line-search step
  double backtrack = 0.5;    // step multiplier per halving
  int max_halvings = 20;
  double rel_tol = 1e-4;     // relative T change, over 3 consecutive accepted steps
  double grad_tol = 1e-5;    // inf-norm of the log-domain gradient
  int max_iter = 100;
  double qp_tol = 1e-6;
  long long qp_max_iter = -1;  // -1: 100 n
  int multi_start = 1;
  unsigned long long seed = 0;
};

enum class StopReason { GradientTol, RelativeTTol, MaxIter, LineSearchFailure };
std::string stop_reason_name(StopReason r);

struct TuneRecord {
  int iteration = 0;
  double T = 0.0, radius_sq = 0.0, margin_sq = 0.0;
  double step = 0.0;        // accepted line-search step (0 for the initial point)
  double grad_norm = 0.0;   // inf-norm at this iterate
  Eigen::VectorXd log_sigma_sq;
  double log_C = 0.0;
};

struct TuningTrace {
  std::vector<TuneRecord> records;  // initial point + every accepted step
  StopReason reason = StopReason::MaxIter;
};

struct RadiusMargin {
  double T = 0.0;
  double margin_sq = 0.0;
  double radius_sq = 0.0;
  SvmSolution svm;
  RadiusSolution radius;
};

/// Solves both QPs on the given regularized Gram and returns the bound
/// T = R^2 M^2 evaluated at their optima.
RadiusMargin radius_margin(const GramMatrix& ktilde, const Eigen::VectorXi& y,
                           double qp_tol = 1e-6, long long qp_max_iter = -1,
                           const Eigen::VectorXd* warm_alpha = nullptr,
                           const Eigen::VectorXd* warm_beta = nullptr);

// Pieces of the bound gradient (exposed for testing).
double radius_grad_c(const Eigen::VectorXd& beta, double C);
double margin_grad_c(const Eigen::VectorXd& alpha, double C);

/// Gradient of T over [C, sigma^2_1, ..., sigma^2_m] at converged QP
/// solutions (by the envelope argument the solutions' own sensitivities
/// drop out). Throws if either solution is unconverged.
Eigen::VectorXd grad_T(const GramMatrix& ktilde, const Eigen::VectorXi& y,
                       const KernelSpec& spec, double C, const SvmSolution& svm,
                       const RadiusSolution& radius, const Eigen::MatrixXd& train_X);

/// The optimizer's variable: log sigma^2 per kernel weight plus log C.
struct TuningVector {
  Eigen::VectorXd log_sigma_sq;
  double log_C = 0.0;

  static TuningVector from_spec(const KernelSpec& spec, double C);
  KernelSpec to_spec(KernelFamily family,
                     std::shared_ptr<const HddaClassModel> model) const;
  double C() const;
};

struct TuneResult {
  KernelSpec spec;
  double C = 1.0;
  double best_T = 0.0;
  TuningTrace trace;
};

/// Gradient descent on T in log coordinates with backtracking line
/// search; rebuilds the Gram and re-solves both QPs at every probe.
/// Returns the best-T point ever evaluated.
TuneResult optimize(const Eigen::MatrixXd& train_X, const Eigen::VectorXi& y,
                    const KernelSpec& init_spec, double init_C,
                    const TuneConfig& config);

/// Bandwidth initializers. The Gaussian one is the median pairwise
/// squared distance; the subspace ones scale the model's eigenvalues so
/// the mean kernel exponent over sampled training pairs is -1.
double median_sqdist(const Eigen::MatrixXd& X, unsigned long long seed,
                     int max_rows = 2000);
KernelSpec initial_spec(KernelFamily family,
                        std::shared_ptr<const HddaClassModel> model,
                        const Eigen::MatrixXd& X, unsigned long long seed);

}  // namespace hdk
