#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <random>

#include "hdk/classify.hpp"
#include "hdk/errors.hpp"
#include "hdk/model_io.hpp"

using namespace hdk;

namespace {

// two well-separated blobs
Dataset separable_toy(int per_class, int d, unsigned seed, double gap = 6.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.7);
  Dataset ds;
  ds.features.resize(2 * per_class, d);
  for (int i = 0; i < 2 * per_class; ++i) {
    double shift = i < per_class ? gap / 2 : -gap / 2;
    ds.labels.push_back(i < per_class ? 1 : 2);
    for (int j = 0; j < d; ++j)
      ds.features(i, j) = gauss(rng) + (j == 0 ? shift : 0.0);
  }
  ds.original_labels = {1, 2};
  return ds;
}

TrainOptions fast_options(unsigned long long seed = 0) {
  TrainOptions opt;
  opt.tune.max_iter = 5;
  opt.tune.seed = seed;
  return opt;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

}  // namespace

TEST_CASE("separable toy trains to 100% per-class accuracy") {
  Dataset ds = separable_toy(15, 5, 42);
  for (KernelFamily family :
       {KernelFamily::Gaussian, KernelFamily::HddaMahalanobis}) {
    MulticlassModel model = train_one_vs_all(ds, family, fast_options());
    EvaluationReport rep = evaluate(model, ds);
    for (double acc : rep.per_class_accuracy) CHECK(acc == 100.0);
    CHECK(rep.mean_accuracy == 100.0);
  }
}

TEST_CASE("subspace kernels are class-specific") {
  Dataset ds = separable_toy(12, 4, 7);
  MulticlassModel model =
      train_one_vs_all(ds, KernelFamily::HddaMahalanobis, fast_options());
  REQUIRE(model.classifiers.size() == 2);
  const auto& a = model.classifiers[0];
  const auto& b = model.classifiers[1];
  REQUIRE(a.spec.model);
  REQUIRE(b.spec.model);
  CHECK(a.spec.model->class_id == 1);
  CHECK(b.spec.model->class_id == 2);
  CHECK(a.spec.model.get() != b.spec.model.get());
  CHECK(a.spec.model->mean != b.spec.model->mean);
}

TEST_CASE("gaussian training carries no class models") {
  Dataset ds = separable_toy(10, 3, 9);
  MulticlassModel model =
      train_one_vs_all(ds, KernelFamily::Gaussian, fast_options());
  for (const auto& clf : model.classifiers) CHECK(clf.spec.model == nullptr);
}

TEST_CASE("a class below 3 samples fails subspace training with a clear error") {
  Dataset ds = separable_toy(10, 3, 11);
  // shrink class 2 to two samples
  Dataset small;
  small.features.resize(12, 3);
  for (int i = 0; i < 10; ++i) {
    small.features.row(i) = ds.features.row(i);
    small.labels.push_back(1);
  }
  small.features.row(10) = ds.features.row(10);
  small.features.row(11) = ds.features.row(11);
  small.labels.push_back(2);
  small.labels.push_back(2);
  small.original_labels = {1, 2};
  CHECK_THROWS_WITH_AS(
      train_one_vs_all(small, KernelFamily::HddaMahalanobis, fast_options()),
      doctest::Contains("class 2"), DataError);
  // the Gaussian family has no such requirement
  CHECK_NOTHROW(train_one_vs_all(small, KernelFamily::Gaussian, fast_options()));
}

TEST_CASE("single-class data cannot be trained") {
  Dataset ds = separable_toy(10, 3, 13);
  for (auto& l : ds.labels) l = 1;
  ds.original_labels = {1};
  CHECK_THROWS_AS(train_one_vs_all(ds, KernelFamily::Gaussian, fast_options()),
                  DataError);
}

TEST_CASE("evaluation counts one-vs-all sign agreement") {
  // hand-built constant classifiers: class 1 answers -1 always, class 2 +1
  const int d = 3;
  MulticlassModel model;
  model.family = KernelFamily::Gaussian;
  model.dim = d;
  for (int c = 1; c <= 2; ++c) {
    BinaryClassifier clf;
    clf.positive_class = c;
    clf.spec = KernelSpec::gaussian(1.0);
    clf.train_X.resize(0, d);
    clf.train_y.resize(0);
    clf.solution.bias = c == 1 ? -1.0 : 1.0;
    model.classifiers.push_back(std::move(clf));
  }
  Dataset test;
  test.features = Eigen::MatrixXd::Random(20, d);
  for (int i = 0; i < 20; ++i) test.labels.push_back(i < 2 ? 1 : 2);  // 10% class 1
  test.original_labels = {1, 2};

  EvaluationReport rep = evaluate(model, test);
  CHECK(rep.per_class_accuracy[0] == 90.0);  // constant -1 on a 10% class
  CHECK(rep.per_class_accuracy[1] == 90.0);
  CHECK(rep.mean_accuracy ==
        (rep.per_class_accuracy[0] + rep.per_class_accuracy[1]) / 2.0);
  CHECK(rep.fused_accuracy == 90.0);
  CHECK(rep.fused_confusion.sum() == 20);

  Dataset empty;
  empty.features.resize(0, d);
  CHECK_THROWS_AS(evaluate(model, empty), DataError);
}

TEST_CASE("permuting feature columns leaves accuracies unchanged") {
  Dataset train = separable_toy(12, 6, 17);
  Dataset test = separable_toy(25, 6, 18);

  TrainOptions opt = fast_options();
  opt.tune.max_iter = 0;  // evaluate the data-driven initialization only
  opt.p_override = 2;

  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  Dataset ptrain = train, ptest = test;
  for (int j = 0; j < 6; ++j) {
    ptrain.features.col(j) = train.features.col(perm[j]);
    ptest.features.col(j) = test.features.col(perm[j]);
  }

  for (KernelFamily family :
       {KernelFamily::Gaussian, KernelFamily::HddaMahalanobis}) {
    MulticlassModel a = train_one_vs_all(train, family, opt);
    MulticlassModel b = train_one_vs_all(ptrain, family, opt);
    EvaluationReport ra = evaluate(a, test);
    EvaluationReport rb = evaluate(b, ptest);
    for (size_t c = 0; c < ra.per_class_accuracy.size(); ++c)
      CHECK(ra.per_class_accuracy[c] ==
            doctest::Approx(rb.per_class_accuracy[c]).epsilon(1e-6));
  }
}

TEST_CASE("standardization constants are recorded and applied") {
  Dataset ds = separable_toy(12, 4, 21);
  ds.features.col(2) *= 1000.0;  // wildly scaled feature
  TrainOptions opt = fast_options();
  opt.standardize = true;
  MulticlassModel model = train_one_vs_all(ds, KernelFamily::Gaussian, opt);
  REQUIRE(model.standardizer.has_value());
  CHECK(model.standardizer->mean.size() == 4);
  EvaluationReport rep = evaluate(model, ds);
  CHECK(rep.mean_accuracy == 100.0);
}

TEST_CASE("model bundle round-trips to bit-identical decisions") {
  Dataset ds = separable_toy(12, 4, 23);
  TrainOptions opt = fast_options(5);
  opt.standardize = true;
  MulticlassModel model =
      train_one_vs_all(ds, KernelFamily::HddaMahalanobis, opt);

  TempFile f("hdk_model_rt.json");
  save_model(model, f.path);
  MulticlassModel loaded = load_model(f.path);

  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 2.0);
  Eigen::MatrixXd probes(100, 4);
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 4; ++j) probes(i, j) = gauss(rng);

  Eigen::MatrixXd s1 = predict_scores(model, probes);
  Eigen::MatrixXd s2 = predict_scores(loaded, probes);
  CHECK(s1 == s2);  // bitwise
}

TEST_CASE("empty bundle round-trips") {
  MulticlassModel model;
  model.family = KernelFamily::Gaussian;
  model.dim = 7;
  TempFile f("hdk_model_empty.json");
  save_model(model, f.path);
  MulticlassModel loaded = load_model(f.path);
  CHECK(loaded.classifiers.empty());
  CHECK(loaded.dim == 7);
  CHECK_FALSE(loaded.standardizer.has_value());
}

TEST_CASE("corrupt, truncated and mis-versioned files are rejected") {
  Dataset ds = separable_toy(8, 3, 29);
  MulticlassModel model =
      train_one_vs_all(ds, KernelFamily::Gaussian, fast_options());
  TempFile f("hdk_model_bad.json");
  save_model(model, f.path);

  std::ifstream in(f.path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  in.close();

  {  // flip a digit inside the checksum field
    std::string bad = text;
    auto pos = bad.find("\"checksum\"");
    pos = bad.find(':', pos) + 3;
    bad[pos] = bad[pos] == 'a' ? 'b' : 'a';
    std::ofstream out(f.path);
    out << bad;
    out.close();
    CHECK_THROWS_WITH_AS(load_model(f.path), doctest::Contains("integrity"),
                         DataError);
  }
  {  // truncation
    std::ofstream out(f.path);
    out << text.substr(0, text.size() / 2);
    out.close();
    CHECK_THROWS_AS(load_model(f.path), DataError);
  }
  {  // version bump
    std::string bad = text;
    auto pos = bad.find("hdkernel-model/1");
    bad.replace(pos, 16, "hdkernel-model/9");
    std::ofstream out(f.path);
    out << bad;
    out.close();
    CHECK_THROWS_WITH_AS(load_model(f.path), doctest::Contains("version"),
                         DataError);
  }
}

TEST_CASE("prediction validates the feature dimension") {
  Dataset ds = separable_toy(8, 3, 31);
  MulticlassModel model =
      train_one_vs_all(ds, KernelFamily::Gaussian, fast_options());
  Eigen::MatrixXd wrong = Eigen::MatrixXd::Random(4, 5);
  CHECK_THROWS_WITH_AS(predict_scores(model, wrong), doctest::Contains("d="),
                       DataError);
}

TEST_CASE("permuting test rows permutes the outputs") {
  Dataset ds = separable_toy(10, 4, 37);
  MulticlassModel model =
      train_one_vs_all(ds, KernelFamily::Gaussian, fast_options());
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(9, 4);
  Eigen::MatrixXd Xp(9, 4);
  std::vector<int> perm = {4, 2, 8, 0, 7, 1, 5, 3, 6};
  for (int i = 0; i < 9; ++i) Xp.row(i) = X.row(perm[i]);
  auto [s, g] = predict_binary(model.classifiers[0], X);
  auto [sp, gp] = predict_binary(model.classifiers[0], Xp);
  for (int i = 0; i < 9; ++i) {
    CHECK(sp[i] == s[perm[i]]);
    CHECK(gp[i] == g[perm[i]]);
  }
}
