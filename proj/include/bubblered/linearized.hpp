#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "bubblered/bubbles.hpp"
#include "bubblered/quadrature.hpp"

namespace bubblered {

// Dense collocation of the boundary integral form of the projected linear
// problem on the sector grid, bordered by the two orthogonality constraints.
struct CollocationSystem {
  SpikeConfig config;
  KProfile profile;
  SectorGrid grid;
  Eigen::MatrixXd kernel;  // M x M quadrature of the Neumann Green kernel
  Eigen::MatrixXd matrix;  // (M+2) x (M+2) bordered system
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  std::vector<double> g1, g2;     // sum_i U_i^{2#-2} Z_{i,j} at the nodes
  std::vector<double> mdiag;      // (2#-1) K W^{2#-2} at the nodes
  double condition_estimate = 0.0;

  std::size_t size() const { return grid.size(); }
};

struct CorrectionSolution {
  std::vector<double> phi_values;
  double c1 = 0.0;
  double c2 = 0.0;
  double norm_star_value = 0.0;
  int iterations = 0;
  bool converged = false;
  double operator_norm = 0.0;        // ||phi||_* / ||h||_** of the last solve
  double orth_residual[2] = {0, 0};  // relative constraint residuals
  std::vector<double> contraction_factors;
  std::vector<double> density;       // boundary density for interior extension
};

CollocationSystem assemble(const SpikeConfig& config, const KProfile& profile,
                           const SectorGrid& grid);

// Unique solution of the bordered system for the given right-hand side values
// at the grid nodes.
CorrectionSolution solve_linear(const CollocationSystem& system,
                                std::span<const double> h_values);

// Picard iteration phi <- L(N(phi) - R) to the fixed point of the nonlinear
// projected problem.
CorrectionSolution solve_correction(const SpikeConfig& config, const KProfile& profile,
                                    const SectorGrid& grid, int max_iter = 25,
                                    double tol = 1e-6);
CorrectionSolution solve_correction(const CollocationSystem& system, int max_iter = 25,
                                    double tol = 1e-6);

struct EvalPoint {
  std::vector<double> tangential;
  double height = 0.0;
};

// Harmonic extension of the solved correction through the Green representation.
double extend_correction(const CollocationSystem& system, const CorrectionSolution& sol,
                         std::span<const double> tangential, double height);

struct PositivityReport {
  bool positive = false;
  double min_value = 0.0;
  std::size_t samples = 0;
};

// W + phi > 0 at all boundary nodes plus interior ray samples (or at the
// caller's points when provided).
PositivityReport positivity_check(const CollocationSystem& system,
                                  const CorrectionSolution& sol,
                                  std::span<const EvalPoint> sample_points = {});

std::vector<EvalPoint> default_positivity_samples(const SpikeConfig& config);

struct MultiplierDiagnostics {
  double matrix[2][2] = {{0, 0}, {0, 0}};   // <sum_i U_i^{2#-2} Z_{i,j}, Z_{1,l}>
  double single_bubble_diag[2] = {0, 0};    // <U_1^{2#-2} Z_{1,j}, Z_{1,j}>
  double offdiag_over_diag = 0.0;
  double contamination[2] = {0, 0};         // cross-spike part of the diagonal
  double interaction_scale = 0.0;           // interaction_sum(k, r) reference
};

MultiplierDiagnostics multiplier_system_diagnostics(const SpikeConfig& config,
                                                    const SectorGrid& grid);

// Node-sample weighted norms of a vector of boundary values on the grid.
double grid_norm_star(const SpikeConfig& config, const SectorGrid& grid,
                      std::span<const double> values);
double grid_norm_dstar(const SpikeConfig& config, const SectorGrid& grid,
                       std::span<const double> values);

}  // namespace bubblered
