#pragma once

#include <span>
#include <vector>

#include "bubblered/bubbles.hpp"
#include "bubblered/quadrature.hpp"

namespace bubblered {

// Moment constants of the energy expansion and their derived combinations.
struct ExpansionConstants {
  double A_N = 0.0;
  double C1N = 0.0;
  double C2N = 0.0;
  double C3N = 0.0;
  double A = 0.0;   // (1/2 - 1/2#) A_N
  double B1 = 0.0;  // C1N / 2#
  double B2 = 0.0;  // C2N / 2#
  double B3 = 0.0;  // C3N / 2
  double B4 = 0.0;  // lattice-sum limit
};

ExpansionConstants compute_constants(const ProblemParams& params);

// Sum over j >= 2 of |x_j - x_1|^{2-N} for the regular k-gon of radius r.
double interaction_sum(int k, double r, int N);

// Richardson-extrapolated limit of interaction_sum(k,1) k^{2-N}.
double b4_limit(int N, std::span<const int> k_sequence);
std::vector<int> default_b4_sequence();

// Closed-form oracle 2 zeta(N-2) / (2 pi)^{N-2}.
double b4_zeta_form(int N);

enum class InteractionForm { ExactSum, B4Form };

// Main terms of the reduced energy and its Lambda-derivative.
double f_asym(const ExpansionConstants& c, const ProblemParams& params, int k, double r,
              double lambda, InteractionForm form = InteractionForm::ExactSum);
double df_dlambda_asym(const ExpansionConstants& c, const ProblemParams& params, int k,
                       double r, double lambda,
                       InteractionForm form = InteractionForm::ExactSum);
double df_dr_asym(const ExpansionConstants& c, const ProblemParams& params, int k, double r,
                  double lambda, InteractionForm form = InteractionForm::ExactSum);

// Closed-form balance point of the curvature and interaction terms.
double lambda0(const ExpansionConstants& c, const ProblemParams& params);

struct DomainBox {
  double r_lo = 0.0, r_hi = 0.0;
  double lambda_lo = 0.0, lambda_hi = 0.0;
  bool contains(double r, double lambda) const {
    return r >= r_lo && r <= r_hi && lambda >= lambda_lo && lambda <= lambda_hi;
  }
};

DomainBox search_domain(const ExpansionConstants& c, const ProblemParams& params, int k,
                        double theta_bar);

struct CriticalPointReport {
  int k = 0;
  double r_star = 0.0;
  double lambda_star = 0.0;
  DomainBox domain;
  bool converged = false;
  double gradient_norm = 0.0;
  double f_value = 0.0;
  int iterations = 0;
};

// Damped Newton on the gradient of the exact-interaction reduced energy,
// started at (mu r0, Lambda0) and projected into the search box.
CriticalPointReport find_critical_point(const ExpansionConstants& c,
                                        const ProblemParams& params, int k,
                                        double theta_bar = 0.1, int k_min = 8);

// Energy of the ansatz. The bubble self-terms of both the gradient and the
// boundary term are carried by the closed-form A_N; quadrature sees only the
// cross-interaction and curvature-deviation integrands.
double energy_exact(const SpikeConfig& config, const KProfile& profile,
                    const SectorGrid& grid);

// Pure-quadrature variant (no closed-form substitution in the boundary term);
// kept as a diagnostic of the grid itself.
double energy_exact_direct(const SpikeConfig& config, const KProfile& profile,
                           const SectorGrid& grid);

// Signed integral of K'(|z|/mu) (|z|/mu) u^{2#} over the boundary, with
// u = W + phi. phi_values, when given, must align with the grid nodes.
double kazdan_warner(const SpikeConfig& config, const KProfile& profile,
                     const SectorGrid& grid, std::span<const double> phi_values = {});

}  // namespace bubblered
