#pragma once

#include <Eigen/Core>
#include <random>
#include <string>
#include <vector>

#include "hdk/dataset.hpp"

namespace hdk {

/// Parameters of the linear-mixture generator. Samples are
/// x = sum_i alpha_i s_i + b with s_i drawn from class i's subspace
/// model, b white noise, and the label the argmax mixture weight.
struct SimConfig {
  int class_count = 2;
  int dim = 100;
  int subspace_dim = 5;
  double snr = 1.0;  // +inf disables the additive noise
  int n_train = 200;
  int n_test = 500;
  unsigned long long seed = 0;
  Eigen::VectorXd signal_eigvals;    // decreasing, > noise_floor; default 10 * 0.8^k
  double noise_floor = 0.1;
  Eigen::VectorXd fixed_alpha;       // empty: flat Dirichlet per sample

  void validate() const;
  static Eigen::VectorXd default_eigvals(int p);
};

struct GroundTruthModel {
  // per class: mean curve, orthonormal basis (d x p), eigenvalues, noise floor
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> bases;
  std::vector<Eigen::VectorXd> eigvals;
  std::vector<double> noise_floors;

  int class_count() const { return static_cast<int>(means.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
};

/// Builds per-class means (sums of 3-6 Gaussian bumps over a normalized
/// wavelength axis) and orthonormal bases from the seeded generator.
GroundTruthModel make_ground_truth(const SimConfig& config);

struct SimBatch {
  Dataset data;
  double epsilon_sq = 0.0;  // calibrated noise variance
  double realized_snr = 0.0;
};

SimBatch sample_mixture(const GroundTruthModel& model, const SimConfig& config,
                        int count, std::mt19937_64& rng);
SimBatch sample_mixture(const GroundTruthModel& model, const SimConfig& config,
                        int count);

struct Scenario {
  SimConfig config;
  SimBatch train;
  SimBatch test;
  GroundTruthModel model;
};

/// Named configurations: sim2/sim3/sim4 (2-4 classes, d=413, p=10,
/// SNR=1, 1000/1500 samples) and sim-desk (2 classes, d=100, p=5,
/// SNR=1, 200/500) for fast runs.
Scenario paper_scenario(const std::string& name, unsigned long long seed);
SimConfig scenario_config(const std::string& name, unsigned long long seed);

}  // namespace hdk
