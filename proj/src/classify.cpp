#include "hdk/classify.hpp"

#include <chrono>
#include <future>
#include <iostream>

#include "hdk/errors.hpp"
#include "hdk/hdda.hpp"

namespace hdk {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

BinaryClassifier train_class(const Eigen::MatrixXd& X, const Dataset& train,
                             int class_id, KernelFamily family,
                             const TrainOptions& options) {
  auto t0 = std::chrono::steady_clock::now();

  BinaryClassifier clf;
  clf.positive_class = class_id;
  clf.train_X = X;
  clf.train_y.resize(train.n());
  for (int i = 0; i < train.n(); ++i)
    clf.train_y[i] = train.labels[i] == class_id ? 1 : -1;

  std::shared_ptr<const HddaClassModel> model;
  if (family != KernelFamily::Gaussian) {
    Eigen::MatrixXd class_X(0, X.cols());
    {
      auto idx = train.class_indices(class_id);
      class_X.resize(idx.size(), X.cols());
      for (size_t r = 0; r < idx.size(); ++r) class_X.row(r) = X.row(idx[r]);
    }
    if (class_X.rows() < 3)
      throw DataError("class " + std::to_string(class_id) + " has only " +
                      std::to_string(class_X.rows()) +
                      " samples; subspace kernels need at least 3");
    auto fitted = fit_hdda(class_X, options.scree_s, options.p_override, class_id);
    if (fitted.noise_floored)
      std::cerr << "warning: class " << class_id
                << ": noise level floored during the subspace fit\n";
    model = std::make_shared<const HddaClassModel>(std::move(fitted));
  }

  unsigned long long class_seed = options.tune.seed + 1009ULL * class_id;
  KernelSpec init = initial_spec(family, model, X, class_seed);

  TuneConfig tune_cfg = options.tune;
  tune_cfg.seed = class_seed;
  TuneResult tuned = optimize(X, clf.train_y, init, 1.0, tune_cfg);
  clf.spec = tuned.spec;
  clf.C = tuned.C;
  clf.trace = std::move(tuned.trace);

  GramMatrix kt = gram_regularized(clf.spec, X, clf.C);
  clf.solution = solve_svm_dual(kt, clf.train_y, tune_cfg.qp_tol,
                                tune_cfg.qp_max_iter);
  clf.train_seconds = seconds_since(t0);
  return clf;
}

}  // namespace

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  s.mean = X.colwise().mean();
  Eigen::MatrixXd centered = X.rowwise() - s.mean.transpose();
  s.scale = (centered.colwise().squaredNorm() / X.rows()).cwiseSqrt();
  s.scale = s.scale.cwiseMax(1e-12);
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out = X.rowwise() - mean.transpose();
  out.array().rowwise() /= scale.transpose().array();
  return out;
}

MulticlassModel train_one_vs_all(const Dataset& train, KernelFamily family,
                                 const TrainOptions& options) {
  if (train.class_count() < 2)
    throw DataError("training needs at least 2 classes, got " +
                    std::to_string(train.class_count()));

  MulticlassModel model;
  model.family = family;
  model.dim = train.d();
  Eigen::MatrixXd X = train.features;
  if (options.standardize) {
    model.standardizer = Standardizer::fit(X);
    X = model.standardizer->apply(X);
  }

  const int nc = train.class_count();
  model.classifiers.resize(nc);
  const int threads = std::max(1, options.threads);
  if (threads == 1) {
    for (int c = 1; c <= nc; ++c)
      model.classifiers[c - 1] = train_class(X, train, c, family, options);
  } else {
    for (int base = 1; base <= nc; base += threads) {
      std::vector<std::future<BinaryClassifier>> batch;
      for (int c = base; c <= std::min(nc, base + threads - 1); ++c)
        batch.push_back(std::async(std::launch::async, train_class, std::cref(X),
                                   std::cref(train), c, family,
                                   std::cref(options)));
      for (int c = base; c <= std::min(nc, base + threads - 1); ++c)
        model.classifiers[c - 1] = batch[c - base].get();
    }
  }
  return model;
}

std::pair<Eigen::VectorXd, Eigen::VectorXi> predict_binary(
    const BinaryClassifier& classifier, const Eigen::MatrixXd& X) {
  if (X.cols() != classifier.train_X.cols())
    throw DataError("predict: model expects d=" +
                    std::to_string(classifier.train_X.cols()) + ", input has d=" +
                    std::to_string(X.cols()));
  Eigen::VectorXd scores(X.rows());
  Eigen::VectorXi signs(X.rows());
  for (int r = 0; r < X.rows(); ++r) {
    scores[r] = decision_function(classifier.solution, classifier.spec,
                                  classifier.train_X, classifier.train_y,
                                  X.row(r).transpose());
    signs[r] = scores[r] >= 0.0 ? 1 : -1;
  }
  return {scores, signs};
}

Eigen::MatrixXd predict_scores(const MulticlassModel& model,
                               const Eigen::MatrixXd& X) {
  Eigen::MatrixXd in = model.standardizer ? model.standardizer->apply(X) : X;
  Eigen::MatrixXd scores(in.rows(), model.classifiers.size());
  for (size_t c = 0; c < model.classifiers.size(); ++c)
    scores.col(c) = predict_binary(model.classifiers[c], in).first;
  return scores;
}

EvaluationReport evaluate(const MulticlassModel& model, const Dataset& test) {
  if (test.n() < 1) throw DataError("evaluation needs a nonempty test set");
  auto t0 = std::chrono::steady_clock::now();

  const int nc = static_cast<int>(model.classifiers.size());
  Eigen::MatrixXd scores = predict_scores(model, test.features);

  EvaluationReport rep;
  rep.per_class_accuracy.resize(nc, 0.0);
  for (int c = 0; c < nc; ++c) {
    int correct = 0;
    int positive_class = model.classifiers[c].positive_class;
    for (int i = 0; i < test.n(); ++i) {
      int truth = test.labels[i] == positive_class ? 1 : -1;
      int sign = scores(i, c) >= 0.0 ? 1 : -1;
      if (truth == sign) ++correct;
    }
    rep.per_class_accuracy[c] = 100.0 * correct / test.n();
  }
  double acc_sum = 0.0;
  for (double a : rep.per_class_accuracy) acc_sum += a;
  rep.mean_accuracy = acc_sum / nc;

  rep.fused_confusion = Eigen::MatrixXi::Zero(nc, nc);
  int fused_correct = 0;
  for (int i = 0; i < test.n(); ++i) {
    int pred = 0;
    for (int c = 1; c < nc; ++c)
      if (scores(i, c) > scores(i, pred)) pred = c;
    int truth = test.labels[i] - 1;
    if (truth >= 0 && truth < nc) rep.fused_confusion(truth, pred)++;
    if (truth == pred) ++fused_correct;
  }
  rep.fused_accuracy = 100.0 * fused_correct / test.n();
  rep.predict_seconds = seconds_since(t0);
  for (const auto& clf : model.classifiers)
    rep.train_seconds.push_back(clf.train_seconds);
  return rep;
}

}  // namespace hdk
