#include "hdk/kernels.hpp"

#include <cmath>
#include <string>

#include "hdk/errors.hpp"

namespace hdk {

namespace {

// Exponents below -700 flush the kernel value to an exact 0.
constexpr double kMinExponent = -700.0;

double safe_exp(double e) { return e < kMinExponent ? 0.0 : std::exp(e); }

void check_weights(const Eigen::VectorXd& w, bool noise_positive) {
  for (int i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0) || !std::isfinite(w[i]))
      throw ConfigError("kernel weights must be finite and >= 0");
  }
  if (noise_positive && !(w[w.size() - 1] > 0.0))
    throw ConfigError("noise/Gaussian inverse weight must be > 0");
}

Eigen::VectorXd inverse_sigmas(const Eigen::VectorXd& sigma_sq) {
  Eigen::VectorXd w(sigma_sq.size());
  for (int i = 0; i < sigma_sq.size(); ++i) {
    if (!(sigma_sq[i] > 0.0)) throw ConfigError("sigma^2 must be > 0");
    w[i] = 1.0 / sigma_sq[i];  // 1/inf == 0 encodes a switched-off direction
  }
  return w;
}

// Pairwise squared distances via row norms + GEMM, clamped at 0.
Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::VectorXd an = A.rowwise().squaredNorm();
  Eigen::VectorXd bn = B.rowwise().squaredNorm();
  Eigen::MatrixXd D = -2.0 * (A * B.transpose());
  D.colwise() += an;
  D.rowwise() += bn.transpose();
  return D.cwiseMax(0.0);
}

// Weighted squared-distance exponent matrix for a spec: signal
// directions through cached projections, plus the full-space term.
Eigen::MatrixXd exponent_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X,
                                const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(X.rows(), Z.rows());
  switch (spec.family) {
    case KernelFamily::Gaussian:
      E = spec.weights[0] * pairwise_sqdist(X, Z);
      break;
    case KernelFamily::PcaMahalanobis:
    case KernelFamily::HddaMahalanobis: {
      const auto& Q = spec.model->basis;
      const int p = spec.model->p_hat;
      if (p > 0) {
        Eigen::VectorXd wsig = spec.weights.head(p).cwiseSqrt();
        Eigen::MatrixXd PX = (X * Q) * wsig.asDiagonal();
        Eigen::MatrixXd PZ = (Z * Q) * wsig.asDiagonal();
        E = pairwise_sqdist(PX, PZ);
      }
      if (spec.family == KernelFamily::HddaMahalanobis)
        E += spec.weights[p] * pairwise_sqdist(X, Z);
      break;
    }
  }
  return E;
}

void check_dim(const KernelSpec& spec, Eigen::Index d) {
  if (spec.model && spec.model->dim != d)
    throw DataError("kernel expects dimension " + std::to_string(spec.model->dim) +
                    ", got " + std::to_string(d));
}

}  // namespace

std::string family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::PcaMahalanobis: return "pca-mahalanobis";
    case KernelFamily::HddaMahalanobis: return "hdda-mahalanobis";
  }
  return "?";
}

KernelFamily family_from_name(const std::string& name) {
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "pca-mahalanobis") return KernelFamily::PcaMahalanobis;
  if (name == "hdda-mahalanobis") return KernelFamily::HddaMahalanobis;
  throw ConfigError("unknown kernel family '" + name + "'");
}

KernelSpec KernelSpec::gaussian(double sigma_sq) {
  if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq))
    throw ConfigError("Gaussian sigma^2 must be finite and > 0");
  KernelSpec s;
  s.family = KernelFamily::Gaussian;
  s.weights = Eigen::VectorXd::Constant(1, 1.0 / sigma_sq);
  return s;
}

KernelSpec KernelSpec::pca(std::shared_ptr<const HddaClassModel> model,
                           const Eigen::VectorXd& sigma_sq) {
  return from_weights(KernelFamily::PcaMahalanobis, std::move(model),
                      inverse_sigmas(sigma_sq));
}

KernelSpec KernelSpec::hdda(std::shared_ptr<const HddaClassModel> model,
                            const Eigen::VectorXd& sigma_sq) {
  return from_weights(KernelFamily::HddaMahalanobis, std::move(model),
                      inverse_sigmas(sigma_sq));
}

KernelSpec KernelSpec::from_weights(KernelFamily family,
                                    std::shared_ptr<const HddaClassModel> model,
                                    const Eigen::VectorXd& weights) {
  KernelSpec s;
  s.family = family;
  s.weights = weights;
  switch (family) {
    case KernelFamily::Gaussian:
      if (weights.size() != 1) throw ConfigError("Gaussian kernel takes 1 weight");
      check_weights(weights, true);
      break;
    case KernelFamily::PcaMahalanobis:
      if (!model) throw ConfigError("PcaMahalanobis needs a class model");
      if (weights.size() != model->p_hat)
        throw ConfigError("PcaMahalanobis needs p_hat weights");
      check_weights(weights, false);
      s.model = std::move(model);
      break;
    case KernelFamily::HddaMahalanobis:
      if (!model) throw ConfigError("HddaMahalanobis needs a class model");
      if (weights.size() != model->p_hat + 1)
        throw ConfigError("HddaMahalanobis needs p_hat + 1 weights");
      check_weights(weights, true);
      s.model = std::move(model);
      break;
  }
  return s;
}

double eval(const KernelSpec& spec, const Eigen::VectorXd& x,
            const Eigen::VectorXd& z) {
  if (x.size() != z.size())
    throw DataError("kernel eval: dimensions differ (" + std::to_string(x.size()) +
                    " vs " + std::to_string(z.size()) + ")");
  check_dim(spec, x.size());
  Eigen::VectorXd delta = x - z;
  double e = 0.0;
  switch (spec.family) {
    case KernelFamily::Gaussian:
      e = spec.weights[0] * delta.squaredNorm();
      break;
    case KernelFamily::PcaMahalanobis:
    case KernelFamily::HddaMahalanobis: {
      const int p = spec.model->p_hat;
      if (p > 0) {
        Eigen::VectorXd proj = spec.model->basis.transpose() * delta;
        for (int i = 0; i < p; ++i) e += spec.weights[i] * proj[i] * proj[i];
      }
      if (spec.family == KernelFamily::HddaMahalanobis)
        e += spec.weights[p] * delta.squaredNorm();
      break;
    }
  }
  return safe_exp(-0.5 * e);
}

double product_form(const KernelSpec& spec, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& z) {
  if (x.size() != z.size()) throw DataError("product_form: dimensions differ");
  check_dim(spec, x.size());
  auto scalar_gauss = [](double a, double b, double w) {
    double diff = a - b;
    return safe_exp(-0.5 * w * diff * diff);
  };
  double prod = 1.0;
  const int p = spec.model ? spec.model->p_hat : 0;
  if (spec.family != KernelFamily::PcaMahalanobis) {
    double w_full = spec.weights[spec.weights.size() - 1];
    prod *= safe_exp(-0.5 * w_full * (x - z).squaredNorm());
  }
  for (int i = 0; i < p; ++i) {
    double px = spec.model->basis.col(i).dot(x);
    double pz = spec.model->basis.col(i).dot(z);
    prod *= scalar_gauss(px, pz, spec.weights[i]);
  }
  return prod;
}

GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& X) {
  check_dim(spec, X.cols());
  Eigen::MatrixXd E = exponent_matrix(spec, X, X);
  GramMatrix g;
  g.values.resize(X.rows(), X.rows());
  for (int i = 0; i < X.rows(); ++i) {
    g.values(i, i) = 1.0;  // zero distance, exactly
    for (int j = i + 1; j < X.rows(); ++j) {
      double v = safe_exp(-0.5 * E(i, j));
      g.values(i, j) = v;
      g.values(j, i) = v;
    }
  }
  g.symmetric = true;
  return g;
}

GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& X,
                const Eigen::MatrixXd& Z) {
  if (X.cols() != Z.cols()) throw DataError("gram: dimensions differ");
  check_dim(spec, X.cols());
  Eigen::MatrixXd E = exponent_matrix(spec, X, Z);
  GramMatrix g;
  Eigen::ArrayXXd ex = (-0.5 * E).array();
  g.values = (ex < kMinExponent).select(0.0, ex.exp());
  g.symmetric = false;
  return g;
}

GramMatrix gram_regularized(const KernelSpec& spec, const Eigen::MatrixXd& X,
                            double C) {
  if (!(C > 0.0)) throw ConfigError("regularization C must be > 0");
  GramMatrix g = gram(spec, X);
  g.values.diagonal().array() += 1.0 / C;
  g.regularization_c = C;
  return g;
}

double kernel_grad_sigma(const KernelSpec& spec, const Eigen::VectorXd& x_i,
                         const Eigen::VectorXd& x_j, int ell) {
  if (ell < 1 || ell > spec.weight_count())
    throw ConfigError("kernel_grad_sigma: ell " + std::to_string(ell) +
                      " outside [1, " + std::to_string(spec.weight_count()) + "]");
  check_dim(spec, x_i.size());
  const int p = spec.model ? spec.model->p_hat : 0;
  const bool signal = spec.family != KernelFamily::Gaussian && ell <= p;
  Eigen::VectorXd delta = x_i - x_j;
  double dist_sq;
  if (signal) {
    double proj = spec.model->basis.col(ell - 1).dot(delta);
    dist_sq = proj * proj;
  } else {
    dist_sq = delta.squaredNorm();
  }
  double w = spec.weights[ell - 1];
  // d k / d sigma^2 = k * dist^2 / (2 sigma^4) with sigma^2 = 1/w.
  return 0.5 * dist_sq * w * w * eval(spec, x_i, x_j);
}

Eigen::MatrixXd metric_tensor(const KernelSpec& spec, const Eigen::VectorXd& x) {
  const int d = static_cast<int>(x.size());
  check_dim(spec, d);
  switch (spec.family) {
    case KernelFamily::Gaussian:
      return spec.weights[0] * Eigen::MatrixXd::Identity(d, d);
    case KernelFamily::HddaMahalanobis: {
      const int p = spec.model->p_hat;
      Eigen::MatrixXd g = spec.weights[p] * Eigen::MatrixXd::Identity(d, d);
      for (int l = 0; l < p; ++l)
        g += spec.weights[l] * spec.model->basis.col(l) *
             spec.model->basis.col(l).transpose();
      return g;
    }
    case KernelFamily::PcaMahalanobis:
      throw ConfigError("metric_tensor: unsupported for the PCA variant");
  }
  throw ConfigError("metric_tensor: unknown family");
}

}  // namespace hdk
