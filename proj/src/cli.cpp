#include "hdk/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hdk/classify.hpp"
#include "hdk/dataset.hpp"
#include "hdk/errors.hpp"
#include "hdk/hdda.hpp"
#include "hdk/model_io.hpp"
#include "hdk/simulate.hpp"

namespace hdk {

namespace {

int worker_count(int tasks) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("HDKERNEL_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return std::max(1, std::min(hw, tasks));
}

// All file outputs go through a temp file so failures leave nothing behind.
class AtomicWriter {
 public:
  explicit AtomicWriter(const std::string& path)
      : target_(path), tmp_(path + ".tmp"), out_(tmp_) {
    if (!out_) throw DataError("cannot write '" + path + "'");
  }
  std::ofstream& stream() { return out_; }
  void commit() {
    out_.close();
    if (out_.fail()) throw DataError("write failed for '" + target_ + "'");
    std::filesystem::rename(tmp_, target_);
  }
  ~AtomicWriter() {
    if (out_.is_open()) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

 private:
  std::string target_, tmp_;
  std::ofstream out_;
};

struct DatasetArgs {
  std::string path;
  std::string format = "csv";
  int label_column = -1;
  bool header = false;
  int d_override = 0;

  void attach(CLI::App* cmd, const std::string& name = "--input",
              bool required = true, bool with_format_flags = true) {
    auto* opt = cmd->add_option(name, path, "dataset file");
    if (required) opt->required();
    if (!with_format_flags) return;
    cmd->add_option("--format", format, "csv or svmlight")
        ->check(CLI::IsMember({"csv", "svmlight"}));
    cmd->add_option("--label-column", label_column,
                    "label column index for csv (negative counts from the end)");
    cmd->add_flag("--header", header, "skip one csv header line");
    cmd->add_option("--d-override", d_override,
                    "feature count override for svmlight input");
  }

  void copy_format_from(const DatasetArgs& other) {
    format = other.format;
    label_column = other.label_column;
    header = other.header;
    d_override = other.d_override;
  }

  Dataset load() const {
    if (format == "svmlight") return load_sparse_svmlight(path, d_override);
    return load_dense_csv(path, label_column, header);
  }

  std::string describe() const {
    std::ostringstream os;
    os << "input=" << path << " format=" << format;
    if (format == "csv")
      os << " label-column=" << label_column << " header=" << (header ? 1 : 0);
    else if (d_override > 0)
      os << " d-override=" << d_override;
    return os.str();
  }
};

struct TuneArgs {
  double step0 = 1.0;
  double qp_tol = 1e-6;
  double rel_tol = 1e-4;
  double grad_tol = 1e-5;
  int max_iter = 100;
  int multi_start = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--step0", step0, "initial line-search step");
    cmd->add_option("--tol", qp_tol, "QP solver KKT tolerance");
    cmd->add_option("--rel-tol", rel_tol, "relative bound-change stop tolerance");
    cmd->add_option("--grad-tol", grad_tol, "gradient inf-norm stop tolerance");
    cmd->add_option("--max-iter", max_iter, "tuning iteration cap");
    cmd->add_option("--multi-start", multi_start, "tuning restarts");
  }

  TuneConfig config(unsigned long long seed) const {
    TuneConfig cfg;
    cfg.step0 = step0;
    cfg.qp_tol = qp_tol;
    cfg.rel_tol = rel_tol;
    cfg.grad_tol = grad_tol;
    cfg.max_iter = max_iter;
    cfg.multi_start = multi_start;
    cfg.seed = seed;
    return cfg;
  }

  std::string describe() const {
    std::ostringstream os;
    os << "step0=" << step0 << " tol=" << qp_tol << " rel-tol=" << rel_tol
       << " grad-tol=" << grad_tol << " max-iter=" << max_iter
       << " multi-start=" << multi_start;
    return os.str();
  }
};

void write_dataset(const Dataset& ds, const std::string& path,
                   const std::string& format) {
  std::string tmp = path + ".tmp";
  if (format == "svmlight")
    save_svmlight(ds, tmp);
  else
    save_dense_csv(ds, tmp);
  std::filesystem::rename(tmp, path);
}

// Features-only CSV (no label column), for prediction inputs.
Eigen::MatrixXd load_features_csv(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (header && rows.empty() && line_no == 1) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) {
      try {
        row.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse '" +
                        tok + "' as a number");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(rows.front().size()) + " fields, got " +
                      std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("'" + path + "' is empty");
  Eigen::MatrixXd X(rows.size(), rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows.front().size(); ++c) X(r, c) = rows[r][c];
  return X;
}

struct ClassSpectrum {
  int class_id;
  int n;
  ScreeResult scree;
  Eigen::VectorXd eigvals;
  double noise;
};

std::vector<ClassSpectrum> per_class_spectra(const Dataset& ds, double scree_s) {
  std::vector<ClassSpectrum> out;
  for (int c = 1; c <= ds.class_count(); ++c) {
    Eigen::MatrixXd X = ds.class_rows(c);
    if (X.rows() < 2)
      throw DataError("class " + std::to_string(c) +
                      " has fewer than 2 samples; cannot estimate a spectrum");
    SpectrumEstimate est = estimate_spectrum(X, std::min<int>(ds.d(), X.rows()));
    double lam1 = est.eigvals.size() ? est.eigvals[0] : 0.0;
    int positive = 0;
    while (positive < est.eigvals.size() && est.eigvals[positive] > 1e-12 * lam1)
      ++positive;
    ClassSpectrum cs;
    cs.class_id = c;
    cs.n = static_cast<int>(X.rows());
    if (positive >= 2) {
      cs.scree = scree_select(est.eigvals.head(positive), scree_s);
    } else {
      cs.scree.p_hat = 1;
      cs.scree.degenerate = true;
    }
    cs.eigvals = est.eigvals;
    cs.noise = noise_estimate(est.trace, est.eigvals.head(cs.scree.p_hat).sum(),
                              ds.d(), cs.scree.p_hat, lam1);
    out.push_back(std::move(cs));
  }
  return out;
}

struct BenchmarkRow {
  std::string family;
  int repetition;
  std::vector<double> per_class_acc;
  double mean_acc;
  std::vector<int> p_hats;
  std::vector<size_t> tune_iters;
  double seconds;
};

BenchmarkRow run_family(const Dataset& train, const Dataset& test,
                        KernelFamily family, const TrainOptions& options,
                        int repetition) {
  auto t0 = std::chrono::steady_clock::now();
  MulticlassModel model = train_one_vs_all(train, family, options);
  EvaluationReport rep = evaluate(model, test);
  BenchmarkRow row;
  row.family = family_name(family);
  row.repetition = repetition;
  row.per_class_acc = rep.per_class_accuracy;
  row.mean_acc = rep.mean_accuracy;
  for (const auto& clf : model.classifiers) {
    row.p_hats.push_back(clf.spec.model ? clf.spec.model->p_hat : 0);
    row.tune_iters.push_back(
        clf.trace.records.empty() ? 0 : clf.trace.records.size() - 1);
  }
  row.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& scenario, SimConfig cfg, bool explicit_cfg,
                 const std::string& out_train, const std::string& out_test,
                 const std::string& format) {
  Scenario sc;
  if (!explicit_cfg) {
    sc = paper_scenario(scenario, cfg.seed);
  } else {
    cfg.validate();
    sc.config = cfg;
    sc.model = make_ground_truth(cfg);
    std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 1);
    sc.train = sample_mixture(sc.model, cfg, cfg.n_train, rng);
    sc.test = sample_mixture(sc.model, cfg, cfg.n_test, rng);
  }
  std::cout << "config: simulate"
            << (explicit_cfg ? " scenario=custom" : " scenario=" + scenario)
            << " classes=" << sc.config.class_count << " dim=" << sc.config.dim
            << " subspace-dim=" << sc.config.subspace_dim << " snr=" << sc.config.snr
            << " train-count=" << sc.config.n_train
            << " test-count=" << sc.config.n_test << " seed=" << sc.config.seed
            << " format=" << format << "\n";

  write_dataset(sc.train.data, out_train, format);
  write_dataset(sc.test.data, out_test, format);
  std::cout << "wrote " << out_train << " (" << sc.train.data.n() << " samples)"
            << " and " << out_test << " (" << sc.test.data.n() << " samples)"
            << ", d=" << sc.train.data.d() << "\n";
  std::cout << "noise: epsilon^2=" << sc.train.epsilon_sq
            << " realized-snr=" << sc.train.realized_snr << "\n";
  return 0;
}

// ------------------------------------------------------------ estimate-dim

int cmd_estimate_dim(const DatasetArgs& data, double scree_s,
                     const std::string& csv_path) {
  std::cout << "config: estimate-dim " << data.describe()
            << " scree-threshold=" << scree_s << "\n";
  Dataset ds = data.load();
  auto spectra = per_class_spectra(ds, scree_s);

  std::cout << "class  n      p_hat  noise          leading eigenvalues\n";
  for (const auto& cs : spectra) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-6d %-6d %-6d %-14.6g ", cs.class_id, cs.n,
                  cs.scree.p_hat, cs.noise);
    std::cout << buf;
    int show = std::min<int>(cs.scree.p_hat + 3, cs.eigvals.size());
    for (int i = 0; i < show; ++i) std::cout << (i ? " " : "") << cs.eigvals[i];
    if (cs.scree.degenerate) std::cout << "  [degenerate spectrum]";
    std::cout << "\n";
  }
  std::cout << "p_hat = (";
  for (size_t i = 0; i < spectra.size(); ++i)
    std::cout << (i ? ", " : "") << spectra[i].scree.p_hat;
  std::cout << ")\n";

  if (!csv_path.empty()) {
    AtomicWriter w(csv_path);
    w.stream() << "class,index,eigenvalue,gap,threshold,selected_p\n";
    for (const auto& cs : spectra) {
      for (int i = 0; i < cs.eigvals.size(); ++i) {
        double gap = i < cs.scree.gaps.size() ? cs.scree.gaps[i] : 0.0;
        w.stream() << cs.class_id << ',' << (i + 1) << ',' << cs.eigvals[i] << ','
                   << gap << ',' << cs.scree.threshold << ',' << cs.scree.p_hat
                   << "\n";
      }
    }
    w.commit();
    std::cout << "wrote " << csv_path << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------- train

int cmd_train(const DatasetArgs& data, const std::string& kernel, double scree_s,
              int p_override, bool standardize, const TuneArgs& tune,
              unsigned long long seed, const std::string& out_path) {
  std::cout << "config: train " << data.describe() << " kernel=" << kernel
            << " scree-threshold=" << scree_s << " p-override=" << p_override
            << " standardize=" << (standardize ? 1 : 0) << " seed=" << seed << " "
            << tune.describe() << "\n";
  Dataset ds = data.load();

  TrainOptions options;
  options.scree_s = scree_s;
  if (p_override > 0) options.p_override = p_override;
  options.standardize = standardize;
  options.tune = tune.config(seed);
  options.threads = worker_count(ds.class_count());

  MulticlassModel model = train_one_vs_all(ds, family_from_name(kernel), options);
  save_model(model, out_path);

  std::cout << "class  p_hat  C            steps  final_T       seconds\n";
  for (const auto& clf : model.classifiers) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-6d %-6d %-12.6g %-6zu %-13.6g %.2f\n",
                  clf.positive_class, clf.spec.model ? clf.spec.model->p_hat : 0,
                  clf.C,
                  clf.trace.records.empty() ? 0 : clf.trace.records.size() - 1,
                  clf.trace.records.empty() ? 0.0 : clf.trace.records.back().T,
                  clf.train_seconds);
    std::cout << buf;
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

// ----------------------------------------------------------------- predict

int cmd_predict(const std::string& model_path, const DatasetArgs& data,
                bool no_labels, const std::string& out_path) {
  std::cout << "config: predict model=" << model_path << " " << data.describe()
            << " no-labels=" << (no_labels ? 1 : 0) << "\n";
  MulticlassModel model = load_model(model_path);

  Eigen::MatrixXd X;
  if (no_labels) {
    X = load_features_csv(data.path, data.header);
  } else {
    X = data.load().features;
  }
  if (X.cols() != model.dim)
    throw DataError("model expects d=" + std::to_string(model.dim) +
                    ", input has d=" + std::to_string(X.cols()));

  Eigen::MatrixXd scores = predict_scores(model, X);
  AtomicWriter w(out_path);
  w.stream() << "sample";
  for (const auto& clf : model.classifiers)
    w.stream() << ",score_" << clf.positive_class << ",sign_"
               << clf.positive_class;
  w.stream() << ",fused_class\n";
  char buf[64];
  for (int r = 0; r < scores.rows(); ++r) {
    w.stream() << r;
    int best = 0;
    for (int c = 0; c < scores.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", scores(r, c));
      w.stream() << ',' << buf << ',' << (scores(r, c) >= 0.0 ? 1 : -1);
      if (scores(r, c) > scores(r, best)) best = c;
    }
    w.stream() << ',' << model.classifiers[best].positive_class << "\n";
  }
  w.commit();
  std::cout << "wrote " << out_path << " (" << scores.rows() << " rows)\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const std::string& model_path, const DatasetArgs& data,
                 const std::string& csv_path) {
  std::cout << "config: evaluate model=" << model_path << " " << data.describe()
            << "\n";
  MulticlassModel model = load_model(model_path);
  Dataset ds = data.load();
  if (ds.d() != model.dim)
    throw DataError("model expects d=" + std::to_string(model.dim) +
                    ", input has d=" + std::to_string(ds.d()));
  EvaluationReport rep = evaluate(model, ds);

  std::cout << "one-vs-all accuracy (%):\n";
  for (size_t c = 0; c < rep.per_class_accuracy.size(); ++c) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  class %-4d %6.2f\n",
                  model.classifiers[c].positive_class, rep.per_class_accuracy[c]);
    std::cout << buf;
  }
  {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  mean       %6.2f\n", rep.mean_accuracy);
    std::cout << buf;
  }
  std::cout << "fused argmax accuracy (reported separately, no fusion in the "
               "per-class numbers): "
            << rep.fused_accuracy << "%\n";
  std::cout << "confusion (rows = truth, cols = fused prediction):\n"
            << rep.fused_confusion << "\n";
  std::cout << "timing: predict=" << rep.predict_seconds << "s train=[";
  for (size_t i = 0; i < rep.train_seconds.size(); ++i)
    std::cout << (i ? " " : "") << rep.train_seconds[i];
  std::cout << "]s\n";

  if (!csv_path.empty()) {
    AtomicWriter w(csv_path);
    w.stream() << "class,accuracy\n";
    for (size_t c = 0; c < rep.per_class_accuracy.size(); ++c)
      w.stream() << model.classifiers[c].positive_class << ','
                 << rep.per_class_accuracy[c] << "\n";
    w.stream() << "mean," << rep.mean_accuracy << "\n";
    w.commit();
    std::cout << "wrote " << csv_path << "\n";
  }
  return 0;
}

// -------------------------------------------------------------- kernel-gram

int cmd_kernel_gram(const DatasetArgs& data, const std::string& kernel,
                    int class_id, double sigma_sq, double scree_s, int p_override,
                    double regularize_c, unsigned long long seed,
                    const std::string& out_path) {
  std::cout << "config: kernel-gram " << data.describe() << " kernel=" << kernel
            << " class=" << class_id << " scree-threshold=" << scree_s
            << " seed=" << seed << "\n";
  Dataset ds = data.load();
  KernelFamily family = family_from_name(kernel);

  KernelSpec spec;
  if (family == KernelFamily::Gaussian) {
    spec = sigma_sq > 0.0 ? KernelSpec::gaussian(sigma_sq)
                          : initial_spec(family, nullptr, ds.features, seed);
  } else {
    if (class_id < 1 || class_id > ds.class_count())
      throw ConfigError("--class must name a class in the dataset");
    std::optional<int> po;
    if (p_override > 0) po = p_override;
    auto model = std::make_shared<const HddaClassModel>(
        fit_hdda(ds.class_rows(class_id), scree_s, po, class_id));
    spec = initial_spec(family, model, ds.features, seed);
  }

  GramMatrix K = regularize_c > 0.0
                     ? gram_regularized(spec, ds.features, regularize_c)
                     : gram(spec, ds.features);
  AtomicWriter w(out_path);
  char buf[64];
  for (int i = 0; i < K.rows(); ++i) {
    for (int j = 0; j < K.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", K.values(i, j));
      w.stream() << (j ? "," : "") << buf;
    }
    w.stream() << "\n";
  }
  w.commit();
  std::cout << "wrote " << out_path << " (" << K.rows() << "x" << K.cols()
            << ")\n";
  return 0;
}

// --------------------------------------------------------------- benchmark

int cmd_benchmark(const std::string& scenario, const DatasetArgs& train_args,
                  const DatasetArgs& test_args, int repeat,
                  const std::string& kernels_csv, double scree_s,
                  const TuneArgs& tune, unsigned long long seed,
                  const std::string& csv_path, const std::string& sweep_p) {
  std::cout << "config: benchmark scenario=" << (scenario.empty() ? "-" : scenario)
            << " repeat=" << repeat << " kernels=" << kernels_csv
            << " scree-threshold=" << scree_s << " seed=" << seed << " "
            << tune.describe() << "\n";

  std::vector<KernelFamily> families;
  {
    std::stringstream ss(kernels_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) families.push_back(family_from_name(tok));
    if (families.empty()) throw ConfigError("no kernel families selected");
  }

  const bool simulated = !scenario.empty();
  Dataset file_train, file_test;
  if (!simulated) {
    file_train = train_args.load();
    file_test = test_args.load();
    repeat = 1;
  }

  std::vector<BenchmarkRow> rows;
  for (int rep = 0; rep < std::max(1, repeat); ++rep) {
    Dataset train = file_train, test = file_test;
    if (simulated) {
      Scenario sc = paper_scenario(scenario, seed + rep);
      train = std::move(sc.train.data);
      test = std::move(sc.test.data);
    }
    if (train.class_count() < 2)
      throw DataError("benchmark needs at least 2 classes in the training data");
    for (KernelFamily family : families) {
      TrainOptions options;
      options.scree_s = scree_s;
      options.tune = tune.config(seed + rep);
      options.threads = worker_count(train.class_count());
      rows.push_back(run_family(train, test, family, options, rep));
      const auto& r = rows.back();
      std::cout << "rep " << rep << " " << r.family << ": mean=" << r.mean_acc
                << "% p_hat=(" << join_ints(r.p_hats) << ") time=" << r.seconds
                << "s\n";
    }
  }

  // summary table, mean (std) over repetitions
  const int nc = static_cast<int>(rows.front().per_class_acc.size());
  std::cout << "\nkernel              ";
  for (int c = 0; c < nc; ++c) std::cout << "  class " << (c + 1) << "   ";
  std::cout << "  mean        p_hat       time(s)\n";
  for (KernelFamily family : families) {
    std::vector<const BenchmarkRow*> frows;
    for (const auto& r : rows)
      if (r.family == family_name(family)) frows.push_back(&r);
    auto stat = [&](auto get) {
      double m = 0.0, s2 = 0.0;
      for (auto* r : frows) m += get(*r);
      m /= frows.size();
      for (auto* r : frows) s2 += (get(*r) - m) * (get(*r) - m);
      s2 = frows.size() > 1 ? std::sqrt(s2 / (frows.size() - 1)) : 0.0;
      return std::pair<double, double>(m, s2);
    };
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-20s", family_name(family).c_str());
    std::cout << buf;
    for (int c = 0; c < nc; ++c) {
      auto [m, s] = stat([&](const BenchmarkRow& r) { return r.per_class_acc[c]; });
      std::snprintf(buf, sizeof buf, "%6.1f(%4.1f)", m, s);
      std::cout << buf;
    }
    auto [mm, ms] = stat([](const BenchmarkRow& r) { return r.mean_acc; });
    auto [tm, tsd] = stat([](const BenchmarkRow& r) { return r.seconds; });
    std::snprintf(buf, sizeof buf, "%6.1f(%4.1f)", mm, ms);
    std::cout << buf << "  (" << join_ints(frows.back()->p_hats) << ")";
    std::snprintf(buf, sizeof buf, "  %.1f(%.1f)", tm, tsd);
    std::cout << buf << "\n";
  }

  if (!csv_path.empty()) {
    AtomicWriter w(csv_path);
    w.stream() << "repetition,kernel,class,accuracy,p_hat,tune_steps,seconds\n";
    for (const auto& r : rows)
      for (size_t c = 0; c < r.per_class_acc.size(); ++c)
        w.stream() << r.repetition << ',' << r.family << ',' << (c + 1) << ','
                   << r.per_class_acc[c] << ','
                   << (c < r.p_hats.size() ? r.p_hats[c] : 0) << ','
                   << (c < r.tune_iters.size() ? r.tune_iters[c] : 0) << ','
                   << r.seconds << "\n";
    w.commit();
    std::cout << "wrote " << csv_path << "\n";
  }

  // accuracy as a function of the subspace dimension, for plot scripts
  if (!sweep_p.empty()) {
    size_t colon = sweep_p.find(':');
    if (colon == std::string::npos)
      throw ConfigError("--sweep-p expects lo:hi");
    int lo = std::atoi(sweep_p.substr(0, colon).c_str());
    int hi = std::atoi(sweep_p.substr(colon + 1).c_str());
    if (lo < 1 || hi < lo) throw ConfigError("--sweep-p expects 1 <= lo <= hi");
    Dataset train = file_train, test = file_test;
    if (simulated) {
      Scenario sc = paper_scenario(scenario, seed);
      train = std::move(sc.train.data);
      test = std::move(sc.test.data);
    }
    std::string path = csv_path.empty() ? "sweep_p.csv" : csv_path + ".sweep";
    AtomicWriter w(path);
    w.stream() << "kernel,p,mean_accuracy\n";
    for (KernelFamily family : families) {
      if (family == KernelFamily::Gaussian) continue;
      for (int p = lo; p <= hi; ++p) {
        TrainOptions options;
        options.scree_s = scree_s;
        options.p_override = p;
        options.tune = tune.config(seed);
        options.threads = worker_count(train.class_count());
        BenchmarkRow r = run_family(train, test, family, options, 0);
        w.stream() << r.family << ',' << p << ',' << r.mean_acc << "\n";
        std::cout << "sweep " << r.family << " p=" << p << ": mean=" << r.mean_acc
                  << "%\n";
      }
    }
    w.commit();
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"parsimonious Mahalanobis kernel SVM toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset pair");
  std::string scenario, sim_format = "csv";
  std::string out_train = "train.csv", out_test = "test.csv";
  SimConfig sim_cfg;
  bool explicit_cfg = false;
  sim->add_option("--scenario", scenario, "sim2, sim3, sim4 or sim-desk");
  sim->add_option("--classes", sim_cfg.class_count, "class count");
  sim->add_option("--dim", sim_cfg.dim, "feature count");
  sim->add_option("--subspace-dim", sim_cfg.subspace_dim, "signal dimension");
  sim->add_option("--snr", sim_cfg.snr, "target signal-to-noise ratio");
  sim->add_option("--train-count", sim_cfg.n_train, "training samples");
  sim->add_option("--test-count", sim_cfg.n_test, "test samples");
  sim->add_option("--seed", sim_cfg.seed, "rng seed");
  sim->add_option("--out-train", out_train, "training output file");
  sim->add_option("--out-test", out_test, "test output file");
  sim->add_option("--format", sim_format, "csv or svmlight")
      ->check(CLI::IsMember({"csv", "svmlight"}));

  // estimate-dim
  auto* dim = app.add_subcommand("estimate-dim",
                                 "per-class subspace dimension via the scree test");
  DatasetArgs dim_data;
  dim_data.attach(dim);
  double dim_s = 0.1;
  std::string dim_csv;
  dim->add_option("--scree-threshold", dim_s, "gap threshold fraction in (0,1)");
  dim->add_option("--csv", dim_csv, "write the gap table as csv");

  // train
  auto* train = app.add_subcommand("train", "train one-vs-all classifiers");
  DatasetArgs train_data;
  train_data.attach(train);
  std::string train_kernel = "hdda-mahalanobis", train_out = "model.json";
  double train_s = 0.1;
  int train_p_override = 0;
  bool train_std = false;
  unsigned long long train_seed = 0;
  TuneArgs train_tune;
  train->add_option("--kernel", train_kernel,
                    "gaussian, pca-mahalanobis or hdda-mahalanobis");
  train->add_option("--scree-threshold", train_s, "gap threshold fraction");
  train->add_option("--p-override", train_p_override,
                    "fixed subspace dimension (0: scree test)");
  train->add_flag("--standardize", train_std,
                  "zero-mean unit-variance features (constants from train)");
  train->add_option("--seed", train_seed, "rng seed");
  train->add_option("--out", train_out, "model output file");
  train_tune.attach(train);

  // predict
  auto* pred = app.add_subcommand("predict", "write per-class scores and signs");
  DatasetArgs pred_data;
  pred_data.attach(pred);
  std::string pred_model, pred_out = "predictions.csv";
  bool pred_no_labels = false;
  pred->add_option("--model", pred_model, "model file")->required();
  pred->add_flag("--no-labels", pred_no_labels, "input csv has no label column");
  pred->add_option("--out", pred_out, "output file");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "accuracy report on labeled data");
  DatasetArgs ev_data;
  ev_data.attach(ev);
  std::string ev_model, ev_csv;
  ev->add_option("--model", ev_model, "model file")->required();
  ev->add_option("--csv", ev_csv, "write the report as csv");

  // kernel-gram
  auto* kg = app.add_subcommand("kernel-gram", "dump a Gram matrix as csv");
  DatasetArgs kg_data;
  kg_data.attach(kg);
  std::string kg_kernel = "gaussian", kg_out = "gram.csv";
  int kg_class = 1, kg_p_override = 0;
  double kg_sigma = 0.0, kg_s = 0.1, kg_reg = 0.0;
  unsigned long long kg_seed = 0;
  kg->add_option("--kernel", kg_kernel, "kernel family");
  kg->add_option("--class", kg_class, "class whose model drives the kernel");
  kg->add_option("--sigma-sq", kg_sigma, "Gaussian bandwidth (0: median heuristic)");
  kg->add_option("--scree-threshold", kg_s, "gap threshold fraction");
  kg->add_option("--p-override", kg_p_override, "fixed subspace dimension");
  kg->add_option("--regularize", kg_reg, "emit k + C^-1 I with this C");
  kg->add_option("--seed", kg_seed, "rng seed");
  kg->add_option("--out", kg_out, "output file");

  // benchmark
  auto* bm = app.add_subcommand("benchmark", "compare kernel families");
  std::string bm_scenario, bm_kernels = "gaussian,pca-mahalanobis,hdda-mahalanobis";
  std::string bm_csv, bm_sweep;
  DatasetArgs bm_train, bm_test;
  bm->add_option("--scenario", bm_scenario, "simulate instead of loading files");
  bm_train.attach(bm, "--train", false);
  bm_test.attach(bm, "--test", false, false);  // shares the format flags
  int bm_repeat = 1;
  double bm_s = 0.1;
  unsigned long long bm_seed = 0;
  TuneArgs bm_tune;
  bm->add_option("--repeat", bm_repeat, "repetitions (simulated scenarios)");
  bm->add_option("--kernels", bm_kernels, "comma-separated kernel families");
  bm->add_option("--scree-threshold", bm_s, "gap threshold fraction");
  bm->add_option("--seed", bm_seed, "rng seed");
  bm->add_option("--csv", bm_csv, "write per-repetition rows as csv");
  bm->add_option("--sweep-p", bm_sweep, "lo:hi accuracy-vs-dimension sweep");
  bm_tune.attach(bm);

  try {
    app.parse(argc, argv);

    if (sim->parsed()) {
      explicit_cfg = scenario.empty();
      if (!explicit_cfg) {
        // named scenario; flags other than seed/outputs are ignored
      }
      return cmd_simulate(scenario, sim_cfg, explicit_cfg, out_train, out_test,
                          sim_format);
    }
    if (dim->parsed()) {
      if (!(dim_s > 0.0 && dim_s < 1.0))
        throw ConfigError("--scree-threshold must be in (0,1)");
      return cmd_estimate_dim(dim_data, dim_s, dim_csv);
    }
    if (train->parsed()) {
      if (!(train_s > 0.0 && train_s < 1.0))
        throw ConfigError("--scree-threshold must be in (0,1)");
      return cmd_train(train_data, train_kernel, train_s, train_p_override,
                       train_std, train_tune, train_seed, train_out);
    }
    if (pred->parsed()) return cmd_predict(pred_model, pred_data, pred_no_labels, pred_out);
    if (ev->parsed()) return cmd_evaluate(ev_model, ev_data, ev_csv);
    if (kg->parsed())
      return cmd_kernel_gram(kg_data, kg_kernel, kg_class, kg_sigma, kg_s,
                             kg_p_override, kg_reg, kg_seed, kg_out);
    if (bm->parsed()) {
      if (bm_scenario.empty() && (bm_train.path.empty() || bm_test.path.empty()))
        throw ConfigError("benchmark needs --scenario or both --train and --test");
      bm_test.copy_format_from(bm_train);
      return cmd_benchmark(bm_scenario, bm_train, bm_test, bm_repeat, bm_kernels,
                           bm_s, bm_tune, bm_seed, bm_csv, bm_sweep);
    }
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace hdk
