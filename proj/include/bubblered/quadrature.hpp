#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bubblered/bubbles.hpp"
#include "bubblered/errors.hpp"
#include "bubblered/parallel.hpp"

namespace bubblered {

// Shape of the moment integrals behind the expansion constants:
//   integral over R^n of |y_1|^{moment_power} (1+|y|^2)^{-decay_power} dy.
struct MomentSpec {
  int n = 4;
  double moment_power = 0.0;
  double decay_power = 4.0;

  void validate() const;
};

// Exact value via the angular-moment x radial-Beta factorization.
double closed_form_moment(const MomentSpec& spec);

struct McResult {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Importance-sampled oracle with a Pareto-tail radial mixture matched to the
// decay power. Bit-reproducible for a given seed, independent of threading.
McResult monte_carlo_moment(const MomentSpec& spec, std::int64_t samples, std::uint64_t seed);
McResult monte_carlo_moment_serial(const MomentSpec& spec, std::int64_t samples,
                                   std::uint64_t seed);

// --- symmetry-reduced boundary grid ----------------------------------------

struct GridOptions {
  int patch_levels = 5;        // patch outer radius ~ 2^levels / Lambda
  int gl_radial = 6;           // Gauss-Legendre order on patch radial panels
  int n_alpha = 8;             // polar nodes on the patch sphere
  int n_beta = 4;              // azimuthal-block nodes (z'' split)
  int gl_rho = 5;              // far-field radial order per panel
  int gl_gamma = 4;            // far-field sector-angle order per panel
  int n_gamma_panels = 4;      // far-field sector-angle panels
  int gl_u = 4;                // far-field z''-radius order per panel
  double rcut_scale = 10.0;    // far cutoff = rcut_scale * max(mu, r)
  double ucut_scale = 10.0;    // z'' cutoff = ucut_scale * max(mu, r)
  double geo = 2.0;            // geometric panel growth factor

  static GridOptions for_refinement(int refinement);
  // Lean budget for dense collocation systems.
  static GridOptions collocation(int refinement);
};

struct AnnuliSpec {
  double patch_radius = 0.0;       // spike-centered ball radius (POU end)
  double patch_inner = 0.0;        // POU start (weight 1 inside)
  double r_cut = 0.0;              // far-field cutoff radius
  double u_cut = 0.0;
  std::string description;
};

// Quadrature nodes over the sector Omega_1, symmetry-folded: stored points
// carry z'' = (u, 0, ...) and each weight is the measure of the node's cell
// orbit under the z''-rotations and the reflection symmetry, restricted to
// one sector. Integrals of Q_k-symmetric integrands over the boundary are
// k times the weighted node sum.
struct SectorGrid {
  int N = 5;
  int k = 1;
  double lambda = 1.0;
  double spike_r = 1.0;
  double mu = 1.0;
  int refinement = 1;
  std::vector<double> points;   // M x (N-1)
  std::vector<double> weights;  // folded cell measures, all positive
  std::vector<double> ring_u;   // |z''| per node
  std::vector<std::uint8_t> family;  // 0 = spike patch, 1 = far field
  // Per-node slice of the parameter box, weight-proportional within each
  // panel: (d, alpha, beta) intervals for patch nodes, (rho, gamma, u) for
  // far nodes. Used by the collocation assembly to subdivide near cells.
  std::vector<double> box;          // M x 6
  std::vector<double> cell_diag2;   // squared ambient cell diameter
  AnnuliSpec annuli;

  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * (N - 1), static_cast<std::size_t>(N - 1)};
  }
};

SectorGrid build_sector_grid(const SpikeConfig& config, int refinement);
SectorGrid build_sector_grid(const SpikeConfig& config, int refinement,
                             const GridOptions& opts);

// k * sum of w_i f(node_i). The integrand must be Q_k-symmetric, even under
// the reflection symmetry and invariant under rotations of the trailing
// z''-block (symmetrize before calling otherwise).
template <class F>
double integrate_boundary(const SectorGrid& grid, F&& f) {
  const std::size_t M = grid.size();
  std::vector<double> terms(M);
  map_index(M, terms, [&](std::size_t i) {
    const double v = f(grid.point(i));
    return grid.weights[i] * v;
  });
  for (double t : terms) {
    if (!std::isfinite(t)) throw NonFiniteIntegrand("integrate_boundary: non-finite value");
  }
  return grid.k * pairwise_sum(terms);
}

template <class F>
double integrate_boundary_serial(const SectorGrid& grid, F&& f) {
  const std::size_t M = grid.size();
  std::vector<double> terms(M);
  map_index_serial(M, terms, [&](std::size_t i) {
    const double v = f(grid.point(i));
    return grid.weights[i] * v;
  });
  for (double t : terms) {
    if (!std::isfinite(t)) throw NonFiniteIntegrand("integrate_boundary: non-finite value");
  }
  return grid.k * pairwise_sum(terms);
}

// Integral over the whole boundary of an integrand that need not be
// Q_k-symmetric (it must still be axisymmetric in the trailing z''-block):
// the rotation and reflection orbit of every node is folded explicitly.
template <class F>
double integrate_full_boundary(const SectorGrid& grid, F&& f) {
  const std::size_t M = grid.size();
  const int nb = grid.N - 1;
  std::vector<double> terms(M);
  map_index(M, terms, [&](std::size_t i) {
    const auto pt = grid.point(i);
    std::vector<double> img(nb, 0.0);
    img[2] = grid.ring_u[i];
    double s = 0.0;
    for (int kap = 0; kap < grid.k; ++kap) {
      const double ang = 2.0 * std::numbers::pi * kap / grid.k;
      const double ca = std::cos(ang), sa = std::sin(ang);
      const double r0 = ca * pt[0] - sa * pt[1];
      const double r1 = sa * pt[0] + ca * pt[1];
      img[0] = r0;
      img[1] = r1;
      s += f(std::span<const double>(img));
      img[1] = -r1;
      s += f(std::span<const double>(img));
      img[1] = r1;
    }
    return 0.5 * grid.weights[i] * s;
  });
  for (double t : terms) {
    if (!std::isfinite(t)) throw NonFiniteIntegrand("integrate_full_boundary: non-finite");
  }
  return pairwise_sum(terms);
}

// Analytic tail beyond the grid cutoff for an integrand decaying like
// |z|^{-decay_power}; the prefactor is sampled on the cutoff sphere.
double tail_estimate(const SectorGrid& grid, const std::function<double(std::span<const double>)>& f,
                     double decay_power);

// Average of |y - z|^{-exponent} over the z''-orbit of a ring with squared
// center distance alpha and coupling beta (|y-z|^2 = alpha - beta cos psi).
double ring_average_inv_power(double alpha, double beta, double exponent, int N);

// Sum over the k rotations and the reflection pair of node q of the
// ring-averaged kernel |y - z|^{-exponent}, weighted by the per-image share
// of the node weight. y may sit off the boundary (height > 0).
double folded_ring_kernel(const SectorGrid& grid, std::size_t q,
                          std::span<const double> y_tangential, double y_height,
                          double exponent);

// One ring-cell of a subdivided node: leading-plane position, orbit radius
// and measure share.
struct SubCell {
  double z0 = 0.0, z1 = 0.0, u = 0.0, w = 0.0;
};

inline constexpr int kSubdivision = 3;  // per coordinate

// Splits node q's parameter box into kSubdivision^3 cells with Jacobian
// midpoint weights normalized to the node weight.
void subdivide_node(const SectorGrid& grid, std::size_t q,
                    std::span<SubCell> out /* kSubdivision^3 entries */);

// --- Appendix-style sampled inequality checks --------------------------------

struct LemmaCheck {
  std::string name;
  double empirical_C = 0.0;
  double empirical_C_doubled = 0.0;
  bool stable = false;       // doubling the samples changes C by < 2x
  std::string sampled_region;
};

struct AppendixReport {
  LemmaCheck product_split;      // two-center product bound
  LemmaCheck green_convolution;  // Green-kernel convolution decay
  LemmaCheck weighted_operator;  // k-spike weighted convolution bound
  bool all_stable() const {
    return product_split.stable && green_convolution.stable && weighted_operator.stable;
  }
};

AppendixReport verify_appendix_estimates(const ProblemParams& params,
                                         const SpikeConfig& config,
                                         std::int64_t sample_count, std::uint64_t seed);

// Pointwise product bound ratio used by the first lemma check; exposed for
// the sigma = 0 exactness test.
double product_split_ratio(std::span<const double> y, std::span<const double> xi,
                           std::span<const double> xj, double alpha, double beta,
                           double sigma_tilde);

}  // namespace bubblered
