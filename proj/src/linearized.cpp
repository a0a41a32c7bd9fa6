#include "bubblered/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bubblered/expansion.hpp"
#include "bubblered/geometry.hpp"

namespace bubblered {

namespace {

constexpr double kPi = std::numbers::pi;

double boundary_green_factor(int N) {
  // G(x, z) = 2 c_N |x - z|^{2-N} for z on the boundary.
  return 2.0 / (N * (N - 2.0) * unit_ball_volume(N));
}

std::vector<double> eval_g(const SpikeConfig& config, const SectorGrid& grid, int j) {
  const double q = config.params.two_sharp() - 2.0;
  std::vector<double> g(grid.size());
  map_index(grid.size(), g, [&](std::size_t i) {
    const auto z = grid.point(i);
    double s = 0.0;
    for (int sp = 0; sp < config.k; ++sp) {
      const double u = bubble_value(config.params.N, config.lambda, config.spike(sp), z, 0.0);
      s += std::pow(u, q) * kernel_Z(config, sp, j, z, 0.0);
    }
    return s;
  });
  return g;
}

}  // namespace

double grid_norm_star(const SpikeConfig& config, const SectorGrid& grid,
                      std::span<const double> values) {
  const double e = norm_star_exponent(config.params);
  double sup = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = spike_weight_sum(config, grid.point(i), 0.0, e);
    sup = std::max(sup, std::abs(values[i]) / w);
  }
  return sup;
}

double grid_norm_dstar(const SpikeConfig& config, const SectorGrid& grid,
                       std::span<const double> values) {
  const double e = norm_dstar_exponent(config.params);
  double sup = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = spike_weight_sum(config, grid.point(i), 0.0, e);
    sup = std::max(sup, std::abs(values[i]) / w);
  }
  return sup;
}

CollocationSystem assemble(const SpikeConfig& config, const KProfile& profile,
                           const SectorGrid& grid) {
  const int N = config.params.N;
  const int nb = N - 1;
  const std::size_t M = grid.size();
  const double gf = boundary_green_factor(N);
  const double sphere = unit_sphere_area(nb);     // |S^{N-2}|
  const double ball_vol = unit_ball_volume(nb);   // V_{N-1}

  CollocationSystem sys;
  sys.config = config;
  sys.profile = profile;
  sys.grid = grid;
  sys.kernel.resize(M, M);

  // Quadrature matrix of the Neumann Green kernel: row p collocates at node
  // p, columns carry the folded node orbits. Images whose ring comes within a
  // couple of cell diameters are re-integrated on a subdivided cell; the
  // exactly singular subcell is replaced by the measure-matched ball integral
  // of the kernel.
  const auto& g = sys.grid;
  constexpr int kSub3 = kSubdivision * kSubdivision * kSubdivision;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t ps = 0; ps < static_cast<std::ptrdiff_t>(M); ++ps) {
    const std::size_t p = static_cast<std::size_t>(ps);
    const auto yp = g.point(p);
    const double y0 = yp[0], y1 = yp[1];
    const double uy = g.ring_u[p];
    SubCell sub[kSub3];
    for (std::size_t q = 0; q < M; ++q) {
      const auto zq = g.point(q);
      const double c0 = zq[0], c1 = zq[1];
      const double uq = g.ring_u[q];
      const double beta = 2.0 * uy * uq;
      const double half_w = 0.5 * g.weights[q];
      const double near2 = 4.0 * g.cell_diag2[q];
      bool have_sub = false;
      double acc = 0.0;
      for (int kap = 0; kap < g.k; ++kap) {
        const double ang = 2.0 * kPi * kap / g.k;
        const double ca = std::cos(ang), sa = std::sin(ang);
        const double r0 = ca * c0 - sa * c1;
        const double r1 = sa * c0 + ca * c1;
        for (int s = 0; s < 2; ++s) {
          const double i1 = s == 0 ? r1 : -r1;
          const double dx = y0 - r0, dy = y1 - i1;
          const double alpha = dx * dx + dy * dy + uy * uy + uq * uq;
          const double gap = alpha - beta;
          if (gap >= near2) {
            acc += half_w * ring_average_inv_power(alpha, beta, N - 2.0, N);
            continue;
          }
          if (!have_sub) {
            subdivide_node(g, q, sub);
            have_sub = true;
          }
          // Each subcell's kernel average is capped by the average over the
          // measure-equivalent ball about the closest approach; the cap is
          // exact when the singular point lies inside the subcell.
          for (int sc = 0; sc < kSub3; ++sc) {
            const double s0 = ca * sub[sc].z0 - sa * sub[sc].z1;
            double s1 = sa * sub[sc].z0 + ca * sub[sc].z1;
            if (s == 1) s1 = -s1;
            const double ex = y0 - s0, ey = y1 - s1;
            const double us = sub[sc].u;
            const double al = ex * ex + ey * ey + uy * uy + us * us;
            const double be = 2.0 * uy * us;
            const double sgap = al - be;
            const double share = 0.5 * sub[sc].w;
            const double rho_eq = std::pow(share / ball_vol, 1.0 / nb);
            const double cap = sphere * rho_eq / share;
            double v;
            if (sgap < 1e-12 * al) {
              v = cap;
            } else {
              v = std::min(ring_average_inv_power(al, be, N - 2.0, N), cap);
            }
            acc += share * v;
          }
        }
      }
      sys.kernel(ps, static_cast<Eigen::Index>(q)) = gf * acc;
    }
  }

  // Per-row calibration on a density with known transform: the boundary flux
  // of the ansatz maps back to the ansatz itself.
  {
    Eigen::VectorXd flux(M);
    const double qex = config.params.two_sharp() - 1.0;
    for (std::size_t i = 0; i < M; ++i) {
      const auto z = g.point(i);
      double s = 0.0;
      for (int sp = 0; sp < config.k; ++sp) {
        s += std::pow(bubble_value(N, config.lambda, config.spike(sp), z, 0.0), qex);
      }
      flux(static_cast<Eigen::Index>(i)) = s;
    }
    Eigen::VectorXd mapped = sys.kernel * flux;
    for (std::size_t p = 0; p < M; ++p) {
      const double target = ansatz_eval(config, g.point(p), 0.0);
      const Eigen::Index pi = static_cast<Eigen::Index>(p);
      sys.kernel(pi, pi) += (target - mapped(pi)) / flux(pi);
    }
  }

  sys.g1 = eval_g(config, grid, 1);
  sys.g2 = eval_g(config, grid, 2);
  sys.mdiag.resize(M);
  {
    const double q = config.params.two_sharp() - 2.0;
    const double factor = config.params.two_sharp() - 1.0;
    for (std::size_t i = 0; i < M; ++i) {
      const auto z = g.point(i);
      double rz = 0.0;
      for (double zc : z) rz += zc * zc;
      const double Kv = profile.eval(std::sqrt(rz) / config.mu);
      sys.mdiag[i] = factor * Kv * std::pow(ansatz_eval(config, z, 0.0), q);
    }
  }

  const Eigen::Index Mi = static_cast<Eigen::Index>(M);
  sys.matrix = Eigen::MatrixXd::Zero(Mi + 2, Mi + 2);
  for (Eigen::Index p = 0; p < Mi; ++p) {
    for (Eigen::Index q = 0; q < Mi; ++q) {
      sys.matrix(p, q) = (p == q ? 1.0 : 0.0) - sys.kernel(p, q) * sys.mdiag[q];
    }
  }
  Eigen::VectorXd g1v = Eigen::Map<const Eigen::VectorXd>(sys.g1.data(), Mi);
  Eigen::VectorXd g2v = Eigen::Map<const Eigen::VectorXd>(sys.g2.data(), Mi);
  sys.matrix.block(0, Mi, Mi, 1) = -(sys.kernel * g1v);
  sys.matrix.block(0, Mi + 1, Mi, 1) = -(sys.kernel * g2v);
  for (Eigen::Index q = 0; q < Mi; ++q) {
    sys.matrix(Mi, q) = g.weights[static_cast<std::size_t>(q)] * sys.g1[q];
    sys.matrix(Mi + 1, q) = g.weights[static_cast<std::size_t>(q)] * sys.g2[q];
  }

  sys.lu.compute(sys.matrix);
  const double rc = sys.lu.rcond();
  sys.condition_estimate = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  if (!(sys.condition_estimate < 1e12)) {
    throw SingularSystem("assemble: condition estimate exceeds 1e12");
  }
  return sys;
}

CorrectionSolution solve_linear(const CollocationSystem& system,
                                std::span<const double> h_values) {
  const std::size_t M = system.size();
  if (h_values.size() != M) throw InvalidParams("solve_linear: rhs size mismatch");
  const Eigen::Index Mi = static_cast<Eigen::Index>(M);
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(h_values.data(), Mi);
  Eigen::VectorXd rhs(Mi + 2);
  rhs.head(Mi) = system.kernel * h;
  rhs(Mi) = 0.0;
  rhs(Mi + 1) = 0.0;
  Eigen::VectorXd sol = system.lu.solve(rhs);

  CorrectionSolution out;
  out.phi_values.assign(sol.data(), sol.data() + Mi);
  out.c1 = sol(Mi);
  out.c2 = sol(Mi + 1);
  out.iterations = 1;
  out.converged = true;
  out.norm_star_value = grid_norm_star(system.config, system.grid, out.phi_values);
  const double hnorm = grid_norm_dstar(system.config, system.grid, h_values);
  out.operator_norm = hnorm > 0.0 ? out.norm_star_value / hnorm : 0.0;

  // Relative orthogonality residuals of the two constraints.
  const auto rel_orth = [&](const std::vector<double>& gj) {
    double dot = 0.0, ng = 0.0, np = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      const double w = system.grid.weights[i];
      dot += w * gj[i] * out.phi_values[i];
      ng += w * gj[i] * gj[i];
      np += w * out.phi_values[i] * out.phi_values[i];
    }
    const double scale = std::sqrt(ng * np);
    return scale > 0.0 ? std::abs(dot) / scale : 0.0;
  };
  out.orth_residual[0] = rel_orth(system.g1);
  out.orth_residual[1] = rel_orth(system.g2);

  out.density.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    out.density[i] = system.mdiag[i] * out.phi_values[i] + out.c1 * system.g1[i] +
                     out.c2 * system.g2[i] + h_values[i];
  }
  return out;
}

CorrectionSolution solve_correction(const SpikeConfig& config, const KProfile& profile,
                                    const SectorGrid& grid, int max_iter, double tol) {
  const CollocationSystem system = assemble(config, profile, grid);
  return solve_correction(system, max_iter, tol);
}

CorrectionSolution solve_correction(const CollocationSystem& system, int max_iter,
                                    double tol) {
  if (max_iter < 1) throw InvalidParams("solve_correction: max_iter must be >= 1");
  const std::size_t M = system.size();
  const SpikeConfig& config = system.config;
  std::vector<double> resid(M);
  map_index(M, resid, [&](std::size_t i) {
    return residual_eval(config, system.profile, system.grid.point(i));
  });

  std::vector<double> phi(M, 0.0), h(M), diff(M);
  CorrectionSolution sol;
  std::vector<double> factors;
  double prev_diff = -1.0;
  int increases = 0;
  for (int it = 1; it <= max_iter; ++it) {
    for (std::size_t i = 0; i < M; ++i) {
      h[i] = nonlinearity_eval(config, system.profile, system.grid.point(i), phi[i]) -
             resid[i];
    }
    sol = solve_linear(system, h);
    for (std::size_t i = 0; i < M; ++i) diff[i] = sol.phi_values[i] - phi[i];
    const double dnorm = grid_norm_star(config, system.grid, diff);
    phi = sol.phi_values;
    sol.iterations = it;
    if (prev_diff >= 0.0) {
      factors.push_back(prev_diff > 0.0 ? dnorm / prev_diff : 0.0);
      if (dnorm > prev_diff) {
        if (++increases >= 3) {
          throw NotContracting("solve_correction: update norms grew 3 times in a row");
        }
      } else {
        increases = 0;
      }
    }
    if (dnorm < tol) {
      sol.converged = true;
      sol.contraction_factors = factors;
      return sol;
    }
    prev_diff = dnorm;
  }
  sol.converged = false;
  sol.contraction_factors = factors;
  return sol;
}

double extend_correction(const CollocationSystem& system, const CorrectionSolution& sol,
                         std::span<const double> tangential, double height) {
  const double gf = boundary_green_factor(system.config.params.N);
  const std::size_t M = system.size();
  std::vector<double> terms(M);
  for (std::size_t q = 0; q < M; ++q) {
    terms[q] = sol.density[q] * folded_ring_kernel(system.grid, q, tangential, height,
                                                   system.config.params.N - 2.0);
  }
  return gf * pairwise_sum(terms);
}

std::vector<EvalPoint> default_positivity_samples(const SpikeConfig& config) {
  std::vector<EvalPoint> pts;
  const int nb = config.params.N - 1;
  const double base = 1.0 / config.lambda;
  const auto x1 = config.spike(0);
  const std::vector<double> heights = {0.2 * base, base, 4.0 * base, 16.0 * base};
  // rays above the spike, above the origin-side flank and above the sector edge
  for (double h : heights) {
    EvalPoint p;
    p.tangential.assign(x1.begin(), x1.end());
    p.height = h;
    pts.push_back(p);
    EvalPoint q;
    q.tangential.assign(nb, 0.0);
    q.tangential[0] = config.r * std::cos(kPi / config.k);
    q.tangential[1] = config.r * std::sin(kPi / config.k);
    q.height = h;
    pts.push_back(q);
    EvalPoint o;
    o.tangential.assign(nb, 0.0);
    o.tangential[0] = 0.25 * config.r;
    o.height = h;
    pts.push_back(o);
  }
  return pts;
}

PositivityReport positivity_check(const CollocationSystem& system,
                                  const CorrectionSolution& sol,
                                  std::span<const EvalPoint> sample_points) {
  PositivityReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  const std::size_t M = system.size();
  for (std::size_t i = 0; i < M; ++i) {
    const double v = ansatz_eval(system.config, system.grid.point(i), 0.0) +
                     sol.phi_values[i];
    rep.min_value = std::min(rep.min_value, v);
  }
  rep.samples = M;
  std::vector<EvalPoint> fallback;
  if (sample_points.empty()) {
    fallback = default_positivity_samples(system.config);
    sample_points = fallback;
  }
  for (const EvalPoint& p : sample_points) {
    const double w = ansatz_eval(system.config, p.tangential, p.height);
    const double phi = extend_correction(system, sol, p.tangential, p.height);
    rep.min_value = std::min(rep.min_value, w + phi);
    ++rep.samples;
  }
  rep.positive = rep.min_value > 0.0;
  return rep;
}

MultiplierDiagnostics multiplier_system_diagnostics(const SpikeConfig& config,
                                                    const SectorGrid& grid) {
  MultiplierDiagnostics diag;
  const double q = config.params.two_sharp() - 2.0;
  const int N = config.params.N;

  const auto gsum = [&](int j, std::span<const double> z) {
    double s = 0.0;
    for (int sp = 0; sp < config.k; ++sp) {
      s += std::pow(bubble_value(N, config.lambda, config.spike(sp), z, 0.0), q) *
           kernel_Z(config, sp, j, z, 0.0);
    }
    return s;
  };
  // <g_j, Z_{1,l}> via the symmetric pairing with dW/dr and dW/dLambda.
  for (int l = 1; l <= 2; ++l) {
    for (int j = 1; j <= 2; ++j) {
      const double v = integrate_boundary(grid, [&](std::span<const double> z) {
        double wl = 0.0;
        for (int sp = 0; sp < config.k; ++sp) wl += kernel_Z(config, sp, l, z, 0.0);
        return gsum(j, z) * wl;
      });
      diag.matrix[l - 1][j - 1] = v / config.k;
    }
  }
  for (int j = 1; j <= 2; ++j) {
    diag.single_bubble_diag[j - 1] =
        integrate_full_boundary(grid, [&](std::span<const double> z) {
          const double u = bubble_value(N, config.lambda, config.spike(0), z, 0.0);
          const double zj = kernel_Z(config, 0, j, z, 0.0);
          return std::pow(u, q) * zj * zj;
        });
    diag.contamination[j - 1] =
        std::abs(diag.matrix[j - 1][j - 1] - diag.single_bubble_diag[j - 1]);
  }
  const double d1 = std::abs(diag.matrix[0][0]);
  const double d2 = std::abs(diag.matrix[1][1]);
  const double off = std::max(std::abs(diag.matrix[0][1]), std::abs(diag.matrix[1][0]));
  diag.offdiag_over_diag = off / std::sqrt(std::max(d1 * d2, 1e-300));
  diag.interaction_scale = config.k >= 2 ? interaction_sum(config.k, config.r, N) : 0.0;
  return diag;
}

}  // namespace bubblered
