#pragma once

#include <vector>

#include <Eigen/Dense>

#include "adatemp/ensemble.hpp"
#include "adatemp/models.hpp"
#include "adatemp/rng.hpp"

namespace adatemp {

enum class GainSolver { kDirect, kFixedPoint };

struct FpfConfig {
  /// Kernel bandwidth seed; the effective bandwidth is epsilon * max ||z_i - z_j||^2.
  double epsilon = 0.01;
  double tempering_exponent = 1.0;
  double rejuvenation = 0.2;
  RejuvenationScaling scaling = RejuvenationScaling::kSqrt;
  GainSolver solver = GainSolver::kDirect;
  int iterations = 10000;

  void validate() const;
};

struct KernelMatrices {
  MatrixXd g;  // exp(-|z_i - z_j|^2 / (4 eps))
  MatrixXd k;  // g_ij / (sqrt(sum_l g_il) sqrt(sum_l g_lj))
};

KernelMatrices kernel_matrices(const Ensemble& e, double eps_eff);

struct MarkovMatrix {
  MatrixXd t;      // row-stochastic
  VectorXd d;      // row masses of the likelihood-weighted kernel
  VectorXd pi;     // d / sum(d)
  MatrixXd obs;    // H(z_j), N_y x N
};

/// Row-normalized k_ij exp(-alpha/2 q_j) with q_j the Mahalanobis misfit of member j.
MarkovMatrix markov_matrix(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                           double eps_eff, double alpha);

/// Per-member gains; gains[i] is N_z x N_y.
struct GainField {
  std::vector<MatrixXd> gains;
  MatrixXd phi;  // N x N_y, mean zero under pi
  double eps_eff = 0.0;
};

double effective_bandwidth(const Ensemble& e, double epsilon);

/// Solves (I - T + (1/N) 1 1^T) phi = eps alpha R^-1 (H - H_hat) and assembles K_i.
GainField solve_gain(const Ensemble& e, const MarkovMatrix& m, const ObservationModel& obs,
                     double eps_eff, double alpha = 1.0, GainSolver solver = GainSolver::kDirect,
                     int iterations = 10000);

GainField solve_gain(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                     const FpfConfig& cfg);

/// z_i^a = z_i - K_i ((H(z_i) + H(zbar)) / 2 - y), then rejuvenation.
Ensemble fpf_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                    const FpfConfig& cfg, RngStream& rng);

}  // namespace adatemp
