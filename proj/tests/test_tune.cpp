#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "hdk/errors.hpp"
#include "hdk/tune.hpp"
#include "support/oracles.hpp"

using namespace hdk;

namespace {

struct Instance {
  Eigen::MatrixXd X;
  Eigen::VectorXi y;
  std::shared_ptr<const HddaClassModel> model;
  Eigen::VectorXd sigma_sq;  // p + 1 entries
  double C;
};

Instance random_instance(std::mt19937_64& rng, int max_n = 40, int max_d = 10,
                         int max_p = 3) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Instance inst;
  int n = 6 + static_cast<int>(rng() % (max_n - 5));
  int d = 3 + static_cast<int>(rng() % (max_d - 2));
  int p = 1 + static_cast<int>(rng() % max_p);
  inst.X.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) inst.X(i, j) = gauss(rng);
  inst.y = oracle::random_labels(n, rng);

  auto m = std::make_shared<HddaClassModel>();
  m->dim = d;
  m->p_hat = p;
  m->basis = oracle::random_orthonormal(d, p, rng);
  m->eigvals.resize(p);
  for (int i = 0; i < p; ++i) m->eigvals[i] = 5.0 * std::pow(0.8, i);
  m->noise = 0.2;
  m->mean = Eigen::VectorXd::Zero(d);
  inst.model = m;

  inst.sigma_sq.resize(p + 1);
  for (int i = 0; i <= p; ++i) inst.sigma_sq[i] = d * (0.5 + 2.0 * unif(rng));
  inst.C = 0.5 + 3.0 * unif(rng);
  return inst;
}

double eval_T(const Instance& inst, const Eigen::VectorXd& sigma_sq, double C) {
  KernelSpec spec = KernelSpec::hdda(inst.model, sigma_sq);
  GramMatrix kt = gram_regularized(spec, inst.X, C);
  return radius_margin(kt, inst.y, 1e-12, 4000000).T;
}

}  // namespace

TEST_CASE("radius-margin closed form on the symmetric pair") {
  Eigen::MatrixXd k(2, 2);
  double C = 2.0;
  k << 1.0 + 1.0 / C, 0.5, 0.5, 1.0 + 1.0 / C;
  GramMatrix kt;
  kt.values = k;
  kt.symmetric = true;
  kt.regularization_c = C;
  Eigen::VectorXi y(2);
  y << 1, -1;
  RadiusMargin rm = radius_margin(kt, y, 1e-12);
  CHECK(rm.margin_sq == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(rm.radius_sq == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(rm.T == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("the bound is positive whenever both labels are present") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    int n = 3 + static_cast<int>(rng() % 20);
    Eigen::MatrixXd kt = oracle::random_ktilde(n, 1.5, rng);
    Eigen::VectorXi y = oracle::random_labels(n, rng);
    GramMatrix g;
    g.values = kt;
    g.symmetric = true;
    RadiusMargin rm = radius_margin(g, y, 1e-10, 1000000);
    CHECK(rm.T > 0.0);
  }
}

TEST_CASE("the bound is invariant to scaling the regularized Gram") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 8; ++rep) {
    int n = 5 + static_cast<int>(rng() % 20);
    Eigen::MatrixXd kt = oracle::random_ktilde(n, 2.0, rng);
    Eigen::VectorXi y = oracle::random_labels(n, rng);
    GramMatrix g;
    g.values = kt;
    g.symmetric = true;
    double T0 = radius_margin(g, y, 1e-13, 4000000).T;
    for (double gamma : {0.1, 10.0}) {
      GramMatrix gs;
      gs.values = gamma * kt;
      gs.symmetric = true;
      double Ts = radius_margin(gs, y, 1e-13 * gamma, 4000000).T;
      CHECK(Ts == doctest::Approx(T0).epsilon(1e-8));
    }
  }
}

TEST_CASE("C-gradient pieces in closed form") {
  // uniform simplex weights: sum b(b-1) = 1/n - 1
  int n = 8;
  double C = 1.7;
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(n, 1.0 / n);
  CHECK(radius_grad_c(beta, C) ==
        doctest::Approx((1.0 / n - 1.0) / (C * C)).epsilon(1e-14));
  CHECK(radius_grad_c(beta, C) < 0.0);

  // two-point optimum alpha = (1,1): sum alpha^2 = 2
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(2);
  CHECK(margin_grad_c(alpha, C) == doctest::Approx(2.0 / (C * C)).epsilon(1e-14));
}

TEST_CASE("bound gradient matches central finite differences") {
  std::mt19937_64 rng(2025);
  for (int rep = 0; rep < 6; ++rep) {
    Instance inst = random_instance(rng, 24, 8, 3);
    KernelSpec spec = KernelSpec::hdda(inst.model, inst.sigma_sq);
    GramMatrix kt = gram_regularized(spec, inst.X, inst.C);
    RadiusMargin rm = radius_margin(kt, inst.y, 1e-12, 4000000);
    REQUIRE(rm.svm.converged);
    REQUIRE(rm.radius.converged);
    Eigen::VectorXd g =
        grad_T(kt, inst.y, spec, inst.C, rm.svm, rm.radius, inst.X);

    // C component
    {
      double h = 1e-4 * inst.C;
      double fd = (eval_T(inst, inst.sigma_sq, inst.C + h) -
                   eval_T(inst, inst.sigma_sq, inst.C - h)) /
                  (2.0 * h);
      CHECK(g[0] == doctest::Approx(fd).epsilon(1e-3).scale(1e-4));
    }
    // bandwidth components
    for (int ell = 1; ell <= inst.sigma_sq.size(); ++ell) {
      double h = 1e-4 * inst.sigma_sq[ell - 1];
      Eigen::VectorXd up = inst.sigma_sq, dn = inst.sigma_sq;
      up[ell - 1] += h;
      dn[ell - 1] -= h;
      double fd =
          (eval_T(inst, up, inst.C) - eval_T(inst, dn, inst.C)) / (2.0 * h);
      CHECK(g[ell] == doctest::Approx(fd).epsilon(1e-3).scale(1e-4));
    }
  }
}

TEST_CASE("gradient refuses unconverged solutions") {
  std::mt19937_64 rng(11);
  Instance inst = random_instance(rng, 20, 6, 2);
  KernelSpec spec = KernelSpec::hdda(inst.model, inst.sigma_sq);
  GramMatrix kt = gram_regularized(spec, inst.X, inst.C);
  SvmSolution svm = solve_svm_dual(kt, inst.y, 1e-14, 1);  // starved
  RadiusSolution rad = solve_radius(kt, 1e-10, 1000000);
  CHECK_FALSE(svm.converged);
  CHECK_THROWS_AS(grad_T(kt, inst.y, spec, inst.C, svm, rad, inst.X),
                  NumericError);
}

TEST_CASE("descent on a separable toy beats a deliberately poor bandwidth") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 0.6);
  const int n = 40;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    double cx = i < n / 2 ? 2.0 : -2.0;
    y[i] = i < n / 2 ? 1 : -1;
    X(i, 0) = cx + gauss(rng);
    X(i, 1) = gauss(rng);
  }
  double poor = 1000.0 * median_sqdist(X, 0);
  KernelSpec init = KernelSpec::gaussian(poor);
  TuneConfig cfg;
  cfg.seed = 0;
  cfg.qp_tol = 1e-8;
  TuneResult res = optimize(X, y, init, 1.0, cfg);

  double T_init = res.trace.records.front().T;
  CHECK(res.best_T <= 0.95 * T_init);
  CHECK(static_cast<int>(res.trace.records.size()) <= cfg.max_iter + 1);

  // accepted T values strictly decrease
  for (size_t i = 1; i < res.trace.records.size(); ++i)
    CHECK(res.trace.records[i].T < res.trace.records[i - 1].T);
}

TEST_CASE("tuning runs are deterministic") {
  std::mt19937_64 rng(17);
  Instance inst = random_instance(rng, 20, 5, 2);
  KernelSpec init = KernelSpec::hdda(inst.model, inst.sigma_sq);
  TuneConfig cfg;
  cfg.max_iter = 12;
  TuneResult a = optimize(inst.X, inst.y, init, 1.0, cfg);
  TuneResult b = optimize(inst.X, inst.y, init, 1.0, cfg);
  REQUIRE(a.trace.records.size() == b.trace.records.size());
  for (size_t i = 0; i < a.trace.records.size(); ++i) {
    CHECK(a.trace.records[i].T == b.trace.records[i].T);
    CHECK(a.trace.records[i].step == b.trace.records[i].step);
  }
  CHECK(a.best_T == b.best_T);
  CHECK(a.C == b.C);
  CHECK(a.spec.weights == b.spec.weights);
  CHECK(a.trace.reason == b.trace.reason);
}

TEST_CASE("final bound never exceeds the initial bound") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 4; ++rep) {
    Instance inst = random_instance(rng, 18, 5, 2);
    KernelSpec init = KernelSpec::hdda(inst.model, inst.sigma_sq);
    TuneConfig cfg;
    cfg.max_iter = 8;
    TuneResult res = optimize(inst.X, inst.y, init, inst.C, cfg);
    CHECK(res.best_T <= res.trace.records.front().T);
  }
}

TEST_CASE("a zero step fails the line search at iteration zero") {
  std::mt19937_64 rng(29);
  Instance inst = random_instance(rng, 16, 5, 2);
  KernelSpec init = KernelSpec::hdda(inst.model, inst.sigma_sq);
  TuneConfig cfg;
  cfg.step0 = 0.0;  // every probe re-evaluates the same point
  cfg.max_halvings = 0;
  cfg.grad_tol = 0.0;
  TuneResult res = optimize(inst.X, inst.y, init, inst.C, cfg);
  CHECK(res.trace.reason == StopReason::LineSearchFailure);
  CHECK(res.trace.records.size() == 1);
  CHECK(res.best_T == res.trace.records.front().T);
  CHECK(res.C == doctest::Approx(inst.C));
  CHECK(res.spec.weights.isApprox(init.weights, 1e-15));
}

TEST_CASE("multi-start is at least as good as the single start") {
  std::mt19937_64 rng(41);
  Instance inst = random_instance(rng, 16, 4, 2);
  KernelSpec init = KernelSpec::hdda(inst.model, inst.sigma_sq);
  TuneConfig cfg;
  cfg.max_iter = 6;
  TuneResult single = optimize(inst.X, inst.y, init, 1.0, cfg);
  cfg.multi_start = 3;
  TuneResult multi = optimize(inst.X, inst.y, init, 1.0, cfg);
  CHECK(multi.best_T <= single.best_T + 1e-12);
}
