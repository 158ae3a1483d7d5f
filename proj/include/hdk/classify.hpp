#pragma once

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

#include "hdk/dataset.hpp"
#include "hdk/kernels.hpp"
#include "hdk/qp.hpp"
#include "hdk/tune.hpp"

namespace hdk {

/// Zero-mean unit-variance feature transform with constants taken from
/// the training set.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // per-feature std, floored at 1e-12

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

/// One "class c vs all" classifier with its class-specific kernel.
struct BinaryClassifier {
  int positive_class = 0;
  KernelSpec spec;
  double C = 1.0;
  SvmSolution solution;
  Eigen::MatrixXd train_X;   // samples the support indices refer to
  Eigen::VectorXi train_y;   // +1 for positive_class, -1 otherwise
  TuningTrace trace;
  double train_seconds = 0.0;
};

struct MulticlassModel {
  KernelFamily family = KernelFamily::Gaussian;
  int dim = 0;
  std::vector<BinaryClassifier> classifiers;  // one per canonical class, in order
  std::optional<Standardizer> standardizer;
};

struct EvaluationReport {
  std::vector<double> per_class_accuracy;  // percent, one-vs-all
  double mean_accuracy = 0.0;              // unweighted mean over classes
  // Fused argmax prediction; reported separately from the one-vs-all
  // numbers above.
  Eigen::MatrixXi fused_confusion;         // rows: truth, cols: prediction
  double fused_accuracy = 0.0;
  double predict_seconds = 0.0;
  std::vector<double> train_seconds;       // copied from the model
};

struct TrainOptions {
  double scree_s = 0.1;
  std::optional<int> p_override;
  bool standardize = false;
  TuneConfig tune;
  int threads = 1;
};

/// For each class: fit the class-conditional subspace model (Mahalanobis
/// families), tune (sigma^2s, C) on the full training set with c -> +1
/// labels by descending the radius-margin bound, then train the final
/// L2-SVM at the tuned point.
MulticlassModel train_one_vs_all(const Dataset& train, KernelFamily family,
                                 const TrainOptions& options);

/// Decision scores and signs (f == 0 counts as +1) for each row of X.
/// X must already be in the model's feature space (standardized when the
/// model carries a standardizer).
std::pair<Eigen::VectorXd, Eigen::VectorXi> predict_binary(
    const BinaryClassifier& classifier, const Eigen::MatrixXd& X);

/// Scores for all classes; applies the model's standardizer.
Eigen::MatrixXd predict_scores(const MulticlassModel& model,
                               const Eigen::MatrixXd& X);

EvaluationReport evaluate(const MulticlassModel& model, const Dataset& test);

}  // namespace hdk
