#include "hdk/qp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hdk/errors.hpp"

namespace hdk {

namespace {

constexpr double kCurvatureFloor = 1e-12;

void check_square_symmetric(const GramMatrix& k) {
  if (k.rows() != k.cols()) throw DataError("Gram matrix must be square");
  if (!k.symmetric) {
    double scale = k.values.cwiseAbs().maxCoeff();
    if ((k.values - k.values.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw DataError("Gram matrix must be symmetric");
  }
}

}  // namespace

SvmSolution solve_svm_dual(const GramMatrix& ktilde, const Eigen::VectorXi& y,
                           double tol, long long max_iter,
                           const Eigen::VectorXd* warm_start) {
  check_square_symmetric(ktilde);
  const int n = ktilde.rows();
  if (y.size() != n) throw DataError("label count does not match Gram size");
  bool has_pos = false, has_neg = false;
  for (int i = 0; i < n; ++i) {
    if (y[i] == 1) has_pos = true;
    else if (y[i] == -1) has_neg = true;
    else throw DataError("labels must be +1 or -1");
  }
  if (!has_pos || !has_neg)
    throw DataError("SVM training needs both labels present");
  if (max_iter < 0) max_iter = 100LL * n;

  const Eigen::MatrixXd& K = ktilde.values;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  // G_i = dg/da_i = 1 - y_i sum_j a_j y_j k_ij
  Eigen::VectorXd G = Eigen::VectorXd::Ones(n);
  if (warm_start) {
    if (warm_start->size() != n) throw DataError("warm start size mismatch");
    alpha = warm_start->cwiseMax(0.0);
    Eigen::VectorXd ky = K * (alpha.array() * y.cast<double>().array()).matrix();
    for (int i = 0; i < n; ++i) G[i] = 1.0 - y[i] * ky[i];
  }

  SvmSolution sol;
  double residual = std::numeric_limits<double>::infinity();
  long long it = 0;
  for (; it < max_iter; ++it) {
    // Maximal violating pair over y_i G_i. "up" can raise the equality
    // multiplier (y=+1, or y=-1 with alpha>0); "low" can lower it.
    int i_up = -1, i_low = -1;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int t = 0; t < n; ++t) {
      double v = y[t] * G[t];
      bool active = alpha[t] > 0.0;
      if (y[t] == 1 || active) {
        if (v > lo) { lo = v; i_up = t; }
      }
      if (y[t] == -1 || active) {
        if (v < hi) { hi = v; i_low = t; }
      }
    }
    residual = lo - hi;
    if (residual <= tol) {
      sol.converged = true;
      break;
    }
    const int i = i_up, j = i_low;

    double curv = K(i, i) + K(j, j) - 2.0 * K(i, j);
    curv = std::max(curv, kCurvatureFloor);
    double t_step = (y[i] * G[i] - y[j] * G[j]) / curv;
    // keep alpha_i + y_i t and alpha_j - y_j t nonnegative
    if (y[i] == -1) t_step = std::min(t_step, alpha[i]);
    if (y[j] == 1) t_step = std::min(t_step, alpha[j]);
    if (!(t_step > 0.0)) break;  // numerically stuck

    alpha[i] += y[i] * t_step;
    alpha[j] -= y[j] * t_step;
    if (alpha[i] < 0.0) alpha[i] = 0.0;
    if (alpha[j] < 0.0) alpha[j] = 0.0;
    for (int t = 0; t < n; ++t)
      G[t] -= y[t] * t_step * (K(t, i) - K(t, j));
  }

  sol.alpha = alpha;
  sol.iterations = it;
  sol.kkt_residual = residual;

  double asum = alpha.sum();
  Eigen::VectorXd ay = (alpha.array() * y.cast<double>().array()).matrix();
  double quad = ay.dot(K * ay);
  sol.objective = asum - 0.5 * quad;
  sol.margin_sq = 2.0 * asum - quad;

  const double sv_cutoff = 1e-12 * std::max(asum, 1.0);
  double bias_sum = 0.0;
  for (int t = 0; t < n; ++t) {
    if (alpha[t] > sv_cutoff) {
      sol.support_indices.push_back(t);
      bias_sum += y[t] * G[t];  // y_t - sum_j a_j y_j k_tj
    }
  }
  if (!sol.support_indices.empty())
    sol.bias = bias_sum / static_cast<double>(sol.support_indices.size());

  // At the optimum sum(alpha) and the quadratic form coincide, making
  // margin_sq equal both 2*objective and sum(alpha). Tolerance scales
  // with the achieved KKT residual.
  if (sol.converged && sol.margin_sq > 0.0) {
    double slack = 1e-8 * sol.margin_sq + 4.0 * sol.kkt_residual * asum + 1e-12;
    if (std::abs(sol.margin_sq - asum) > slack)
      throw NumericError("SVM dual optimum violates the margin identity");
  }
  return sol;
}

RadiusSolution solve_radius(const GramMatrix& ktilde, double tol,
                            long long max_iter,
                            const Eigen::VectorXd* warm_start) {
  check_square_symmetric(ktilde);
  const int n = ktilde.rows();
  if (max_iter < 0) max_iter = 100LL * n;
  const Eigen::MatrixXd& K = ktilde.values;

  Eigen::VectorXd beta;
  if (warm_start) {
    if (warm_start->size() != n) throw DataError("warm start size mismatch");
    beta = warm_start->cwiseMax(0.0);
    double s = beta.sum();
    if (s <= 0.0) beta = Eigen::VectorXd::Constant(n, 1.0 / n);
    else beta /= s;
  } else {
    beta = Eigen::VectorXd::Constant(n, 1.0 / n);
  }

  Eigen::VectorXd kb = K * beta;
  RadiusSolution sol;
  double residual = std::numeric_limits<double>::infinity();
  long long it = 0;
  for (; it < max_iter; ++it) {
    // grad_i = k_ii - 2 (K beta)_i; move weight from the worst active
    // coordinate to the best one (pairwise step).
    int s_idx = -1, t_idx = -1;
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    for (int t = 0; t < n; ++t) {
      double g = K(t, t) - 2.0 * kb[t];
      if (g > g_max) { g_max = g; s_idx = t; }
      if (beta[t] > 0.0 && g < g_min) { g_min = g; t_idx = t; }
    }
    residual = g_max - g_min;
    if (residual <= tol) {
      sol.converged = true;
      break;
    }
    double curv = K(s_idx, s_idx) + K(t_idx, t_idx) - 2.0 * K(s_idx, t_idx);
    curv = std::max(curv, kCurvatureFloor);
    double step = std::min(residual / (2.0 * curv), beta[t_idx]);
    if (!(step > 0.0)) break;

    beta[s_idx] += step;
    beta[t_idx] -= step;
    if (beta[t_idx] < 0.0) beta[t_idx] = 0.0;
    kb += step * (K.col(s_idx) - K.col(t_idx));
  }

  sol.beta = beta;
  sol.iterations = it;
  sol.kkt_residual = residual;
  sol.radius_sq = beta.dot(K.diagonal()) - beta.dot(K * beta);
  if (sol.radius_sq < 0.0 && sol.radius_sq > -1e-10) sol.radius_sq = 0.0;
  return sol;
}

double decision_function(const SvmSolution& solution, const KernelSpec& spec,
                         const Eigen::MatrixXd& train_X, const Eigen::VectorXi& y,
                         const Eigen::VectorXd& z) {
  if (z.size() != train_X.cols())
    throw DataError("decision_function: expected dimension " +
                    std::to_string(train_X.cols()) + ", got " +
                    std::to_string(z.size()));
  double f = 0.0;
  for (int i : solution.support_indices)
    f += solution.alpha[i] * y[i] * eval(spec, train_X.row(i).transpose(), z);
  return f + solution.bias;
}

}  // namespace hdk
