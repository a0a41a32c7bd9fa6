#include "bubblered/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bubblered/geometry.hpp"

namespace bubblered {

namespace {

constexpr double kPi = std::numbers::pi;

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

struct Rule {
  std::vector<double> x, w;
  explicit Rule(int n) { gauss_legendre(n, x, w); }
  int size() const { return static_cast<int>(x.size()); }
  double node(int i, double a, double b) const { return 0.5 * (a + b) + 0.5 * (b - a) * x[i]; }
  double weight(int i, double a, double b) const { return 0.5 * (b - a) * w[i]; }
};

// Weight-proportional slice boundaries of [a, b] assigned to the rule nodes.
struct SlicedRule {
  std::vector<double> node, weight, lo, hi;
  SlicedRule(const Rule& r, double a, double b) {
    double c = a;
    for (int i = 0; i < r.size(); ++i) {
      node.push_back(r.node(i, a, b));
      weight.push_back(r.weight(i, a, b));
      lo.push_back(c);
      c += 0.5 * (b - a) * r.w[i];
      hi.push_back(c);
    }
  }
  int size() const { return static_cast<int>(node.size()); }
};

// C^2 cutoff: 1 on [0, a], 0 on [b, inf), quintic step in between. The
// polynomial transition keeps Gauss panels accurate across the seam.
double smooth_cut(double d, double a, double b) {
  if (d <= a) return 1.0;
  if (d >= b) return 0.0;
  const double t = (d - a) / (b - a);
  return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double sin_power_integral(int q) {
  // integral of sin^q over [0, pi]
  return std::sqrt(kPi) * std::tgamma((q + 1.0) / 2.0) / std::tgamma(q / 2.0 + 1.0);
}

std::vector<double> dedupe_sorted(std::vector<double> v, double rel_tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double b : v) {
    if (out.empty() || b - out.back() > rel_tol * std::max(1.0, std::abs(b))) {
      out.push_back(b);
    }
  }
  return out;
}

}  // namespace

void MomentSpec::validate() const {
  if (n < 1) throw InvalidParams("MomentSpec: n must be >= 1");
  if (moment_power < 0.0) throw InvalidParams("MomentSpec: moment power must be >= 0");
  if (!(2.0 * decay_power - moment_power > n)) {
    throw DivergentIntegral("MomentSpec: needs 2p - moment_power > n");
  }
}

double closed_form_moment(const MomentSpec& spec) {
  spec.validate();
  const double n = spec.n, mt = spec.moment_power, p = spec.decay_power;
  // angular moment of |omega_1|^mt times the radial Beta integral; the
  // Gamma((n+mt)/2) factors cancel.
  const double lg = 0.5 * (n - 1.0) * std::log(kPi) + std::lgamma((mt + 1.0) / 2.0) +
                    std::lgamma(p - (n + mt) / 2.0) - std::lgamma(p);
  return std::exp(lg);
}

namespace {

McResult mc_moment_impl(const MomentSpec& spec, std::int64_t samples, std::uint64_t seed,
                        bool parallel) {
  spec.validate();
  if (samples < 1) throw InvalidParams("monte_carlo_moment: samples must be >= 1");
  const int n = spec.n;
  const double mt = spec.moment_power, p = spec.decay_power;
  const double a = 2.0 * p - n - mt;  // Pareto tail index matched to the decay
  const double sphere = unit_sphere_area(n);
  const auto sample_weight = [&](std::size_t i) {
    CounterRng rng(seed, i);
    double g[16];
    const int pairs = (n + 1) / 2;
    for (int j = 0; j < pairs; ++j) {
      const double u1 = rng.next_double();
      const double u2 = rng.next_double();
      const double rad = std::sqrt(-2.0 * std::log(u1));
      g[2 * j] = rad * std::cos(2.0 * kPi * u2);
      g[2 * j + 1] = rad * std::sin(2.0 * kPi * u2);
    }
    double norm2 = 0.0;
    for (int j = 0; j < n; ++j) norm2 += g[j] * g[j];
    const double omega1 = std::abs(g[0]) / std::sqrt(norm2);
    const double u_mix = rng.next_double();
    const double u_r = rng.next_double();
    double rho;
    if (u_mix < 0.5) {
      rho = std::pow(1.0 - u_r, -1.0 / a) - 1.0;
    } else {
      rho = 2.0 * u_r;
    }
    const double q1 = a * std::pow(1.0 + rho, -(a + 1.0));
    const double q2 = rho <= 2.0 ? 0.5 : 0.0;
    const double q = 0.5 * (q1 + q2);
    const double f = std::pow(rho, mt) * std::pow(omega1, mt) *
                     std::pow(1.0 + rho * rho, -p);
    return f * sphere * std::pow(rho, n - 1.0) / q;
  };
  const std::size_t M = static_cast<std::size_t>(samples);
  std::vector<double> w(M), w2(M);
  if (parallel) {
    map_index(M, w, sample_weight);
  } else {
    map_index_serial(M, w, sample_weight);
  }
  for (std::size_t i = 0; i < M; ++i) w2[i] = w[i] * w[i];
  const double mean = pairwise_sum(w) / static_cast<double>(M);
  const double meansq = pairwise_sum(w2) / static_cast<double>(M);
  McResult res;
  res.estimate = mean;
  const double var = std::max(meansq - mean * mean, 0.0);
  res.standard_error = std::sqrt(var / std::max<double>(1.0, static_cast<double>(M) - 1.0));
  return res;
}

}  // namespace

McResult monte_carlo_moment(const MomentSpec& spec, std::int64_t samples, std::uint64_t seed) {
  return mc_moment_impl(spec, samples, seed, true);
}

McResult monte_carlo_moment_serial(const MomentSpec& spec, std::int64_t samples,
                                   std::uint64_t seed) {
  return mc_moment_impl(spec, samples, seed, false);
}

GridOptions GridOptions::for_refinement(int refinement) {
  GridOptions o;
  const int l = refinement;
  o.patch_levels = 3 + l;
  o.gl_radial = std::min(4 + l, 8);
  o.n_alpha = std::min(4 + 2 * l, 12);
  o.n_beta = std::min(2 + l, 5);
  o.gl_rho = std::min(3 + l, 5);
  o.gl_gamma = std::min(2 + l, 4);
  o.n_gamma_panels = std::min(3 + l, 8);
  o.gl_u = std::min(2 + l, 4);
  o.geo = 2.0;
  return o;
}

GridOptions GridOptions::collocation(int refinement) {
  GridOptions o;
  const int l = std::max(refinement - 1, 0);
  o.patch_levels = 4 + l;
  o.gl_radial = 4;
  o.n_alpha = 6 + 2 * l;
  o.n_beta = 3 + l;
  o.gl_rho = 2 + (l > 0 ? 1 : 0);
  o.gl_gamma = 2;
  o.n_gamma_panels = 3 + l;
  o.gl_u = 2;
  o.geo = 4.0;
  o.rcut_scale = 6.0;
  o.ucut_scale = 1.5;
  return o;
}

SectorGrid build_sector_grid(const SpikeConfig& config, int refinement) {
  return build_sector_grid(config, refinement, GridOptions::for_refinement(refinement));
}

SectorGrid build_sector_grid(const SpikeConfig& config, int refinement,
                             const GridOptions& opts) {
  if (refinement < 1) throw InvalidRefinement("build_sector_grid: refinement must be >= 1");
  const int N = config.params.N;
  const int nb = N - 1;
  const int k = config.k;
  const double r = config.r;
  const double lambda = config.lambda;
  const double base = 1.0 / lambda;
  const double gamma_max = kPi / k;

  SectorGrid grid;
  grid.N = N;
  grid.k = k;
  grid.lambda = lambda;
  grid.spike_r = r;
  grid.mu = config.mu;
  grid.refinement = refinement;

  const double orbit_area = unit_sphere_area(N - 3);  // |S^{N-4}|, z''-orbit
  const double scale = std::max({config.mu, r, 10.0 * base});
  const double r_cut = opts.rcut_scale * scale;
  const double u_cut = opts.ucut_scale * scale;

  // Spike patch: spherical panels around x_1, inside the sector.
  double rho_b = base * std::pow(2.0, opts.patch_levels);
  if (k >= 2) rho_b = std::min(rho_b, 0.45 * r * std::sin(kPi / k));
  rho_b = std::max(rho_b, 0.5 * base);
  const double rho_a = 0.5 * rho_b;

  std::vector<double> patch_breaks{0.0};
  {
    int panels = std::max(3, std::min(static_cast<int>(std::round(std::log2(
                                          std::max(rho_b / base, 2.0)))) +
                                          2,
                                      opts.patch_levels + 3));
    for (int j = panels - 1; j >= 1; --j) patch_breaks.push_back(rho_b * std::pow(2.0, -j));
    // resolve the cutoff transition [rho_a, rho_b] with its own panels
    for (double f : {0.625, 0.75, 0.875}) patch_breaks.push_back(f * rho_b);
    patch_breaks.push_back(rho_b);
    patch_breaks = dedupe_sorted(patch_breaks, 1e-9);
  }

  const Rule rule_d(opts.gl_radial);
  const Rule rule_a(opts.n_alpha);
  const Rule rule_b(opts.n_beta);

  const auto push_node = [&](double z0, double z1, double u, double w, std::uint8_t fam,
                             const double boxv[6], double diag2) {
    if (!(w > 1e-300)) return;
    std::vector<double> pt(nb, 0.0);
    pt[0] = z0;
    pt[1] = z1;
    pt[2] = u;
    grid.points.insert(grid.points.end(), pt.begin(), pt.end());
    grid.weights.push_back(w);
    grid.ring_u.push_back(u);
    grid.family.push_back(fam);
    grid.box.insert(grid.box.end(), boxv, boxv + 6);
    grid.cell_diag2.push_back(diag2);
  };

  const SlicedRule alpha_slices(rule_a, 0.0, kPi);
  const SlicedRule beta_slices(rule_b, 0.0, 0.5 * kPi);
  for (std::size_t pb = 0; pb + 1 < patch_breaks.size(); ++pb) {
    const SlicedRule dsl(rule_d, patch_breaks[pb], patch_breaks[pb + 1]);
    for (int id = 0; id < dsl.size(); ++id) {
      const double d = dsl.node[id];
      const double wd = dsl.weight[id] * std::pow(d, nb - 1);
      const double pou = smooth_cut(d, rho_a, rho_b);
      if (!(pou > 0.0)) continue;
      for (int ia = 0; ia < alpha_slices.size(); ++ia) {
        // quadrature in the polar angle itself keeps the weight smooth and
        // the node set symmetric about the equator
        const double alpha_ang = alpha_slices.node[ia];
        const double ca = std::cos(alpha_ang), sa = std::sin(alpha_ang);
        const double wa = alpha_slices.weight[ia] * std::pow(sa, N - 3);
        for (int ib = 0; ib < beta_slices.size(); ++ib) {
          const double beta_ang = beta_slices.node[ib];  // folded half
          const double cb = std::cos(beta_ang), sb = std::sin(beta_ang);
          const double wb = 2.0 * beta_slices.weight[ib] * std::pow(sb, std::max(N - 4, 0));
          const double w = wd * wa * wb * orbit_area * pou;
          const double boxv[6] = {dsl.lo[id],        dsl.hi[id],
                                  alpha_slices.lo[ia], alpha_slices.hi[ia],
                                  beta_slices.lo[ib],  beta_slices.hi[ib]};
          const double dd = boxv[1] - boxv[0];
          const double da = d * (boxv[3] - boxv[2]);
          // the cell's reach transverse to the pole axis is set by the far
          // alpha edge, not the node itself
          const double sa_edge = std::max(std::sin(boxv[2]), std::sin(boxv[3]));
          const double db = d * sa_edge * (boxv[5] - boxv[4]);
          push_node(r + d * ca, d * sa * cb, d * sa * sb, w, 0, boxv,
                    dd * dd + da * da + db * db);
        }
      }
    }
  }

  // Far field: sector-polar coordinates (rho, gamma) in the leading plane and
  // the z''-orbit radius u, with the patch removed by the smooth cut.
  const bool lean = opts.geo > 3.0;
  std::vector<double> rho_breaks{0.0};
  for (double x = base; x < 0.55 * r; x *= opts.geo) rho_breaks.push_back(x);
  {
    std::vector<double> band = lean ? std::vector<double>{2.0, 1.0, 0.65}
                                    : std::vector<double>{4.0, 2.0, 1.3, 1.0, 0.85, 0.7,
                                                          0.55, 0.45};
    for (double t : band) {
      const double lo = r - t * rho_b, hi = r + t * rho_b;
      if (lo > 0.1 * r) rho_breaks.push_back(lo);
      if (hi < r_cut) rho_breaks.push_back(hi);
    }
  }
  for (double x = r + 5.0 * rho_b; x < r_cut; x *= opts.geo) rho_breaks.push_back(x);
  rho_breaks.push_back(r_cut);
  rho_breaks = dedupe_sorted(rho_breaks, 1e-9);

  std::vector<double> gamma_breaks{0.0};
  {
    double g0 = std::min(0.45 * rho_b / r, gamma_max / 4.0);
    for (double x = g0; x < 0.999 * gamma_max && gamma_breaks.size() < 24; x *= opts.geo) {
      gamma_breaks.push_back(x);
      if (!lean && x == g0) {
        for (double f : {1.4, 1.9, 2.6}) {
          if (f * g0 < 0.999 * gamma_max && f * g0 < opts.geo * g0) {
            gamma_breaks.push_back(f * g0);
          }
        }
      }
    }
    gamma_breaks.push_back(gamma_max);
    gamma_breaks = dedupe_sorted(gamma_breaks, 1e-12);
  }

  std::vector<double> u_breaks{0.0};
  for (double x = base; x < u_cut; x *= opts.geo) u_breaks.push_back(x);
  if (!lean) {
    for (double f : {0.625, 0.8, 1.05, 1.35}) {
      if (f * rho_b < u_cut) u_breaks.push_back(f * rho_b);
    }
  }
  u_breaks.push_back(u_cut);
  u_breaks = dedupe_sorted(u_breaks, 1e-9);

  const Rule rule_rho(opts.gl_rho);
  const Rule rule_g(opts.gl_gamma);
  const Rule rule_u(opts.gl_u);

  for (std::size_t pr = 0; pr + 1 < rho_breaks.size(); ++pr) {
    const SlicedRule rsl(rule_rho, rho_breaks[pr], rho_breaks[pr + 1]);
    for (int ir = 0; ir < rsl.size(); ++ir) {
      const double rho = rsl.node[ir];
      const double wr = rsl.weight[ir] * rho;
      for (std::size_t pg = 0; pg + 1 < gamma_breaks.size(); ++pg) {
        const SlicedRule gsl(rule_g, gamma_breaks[pg], gamma_breaks[pg + 1]);
        for (int ig = 0; ig < gsl.size(); ++ig) {
          const double gam = gsl.node[ig];
          const double wg = 2.0 * gsl.weight[ig];
          const double z0 = rho * std::cos(gam);
          const double z1 = rho * std::sin(gam);
          const double dplane2 = (z0 - r) * (z0 - r) + z1 * z1;
          for (std::size_t pu = 0; pu + 1 < u_breaks.size(); ++pu) {
            const SlicedRule usl(rule_u, u_breaks[pu], u_breaks[pu + 1]);
            for (int iu = 0; iu < usl.size(); ++iu) {
              const double u = usl.node[iu];
              const double wu = usl.weight[iu] * orbit_area * std::pow(u, N - 4);
              const double d1 = std::sqrt(dplane2 + u * u);
              const double cutw = 1.0 - smooth_cut(d1, rho_a, rho_b);
              if (!(cutw > 0.0)) continue;
              const double boxv[6] = {rsl.lo[ir], rsl.hi[ir], gsl.lo[ig],
                                      gsl.hi[ig], usl.lo[iu], usl.hi[iu]};
              const double dr = boxv[1] - boxv[0];
              const double dg = rho * (boxv[3] - boxv[2]);
              const double du = boxv[5] - boxv[4];
              push_node(z0, z1, u, wr * wg * wu * cutw, 1, boxv,
                        dr * dr + dg * dg + du * du);
            }
          }
        }
      }
    }
  }

  grid.annuli.patch_radius = rho_b;
  grid.annuli.patch_inner = rho_a;
  grid.annuli.r_cut = r_cut;
  grid.annuli.u_cut = u_cut;
  std::ostringstream os;
  os << "patch " << patch_breaks.size() - 1 << " radial panels to " << rho_b
     << ", far " << rho_breaks.size() - 1 << "x" << gamma_breaks.size() - 1 << "x"
     << u_breaks.size() - 1 << " panels, cutoff " << r_cut << ", " << grid.size()
     << " nodes";
  grid.annuli.description = os.str();
  return grid;
}

void subdivide_node(const SectorGrid& grid, std::size_t q, std::span<SubCell> out) {
  const int n = kSubdivision;
  const int n3 = n * n * n;
  if (out.size() < static_cast<std::size_t>(n3)) {
    throw InvalidParams("subdivide_node: output span too small");
  }
  const int N = grid.N;
  const int nb = N - 1;
  const double* bx = grid.box.data() + 6 * q;
  const double rho_a = grid.annuli.patch_inner;
  const double rho_b = grid.annuli.patch_radius;
  const double r = grid.spike_r;
  double total = 0.0;
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    const double t0 = bx[0] + (bx[1] - bx[0]) * (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      const double t1 = bx[2] + (bx[3] - bx[2]) * (j + 0.5) / n;
      for (int l = 0; l < n; ++l) {
        const double t2 = bx[4] + (bx[5] - bx[4]) * (l + 0.5) / n;
        SubCell& c = out[idx++];
        double jac;
        if (grid.family[q] == 0) {
          // (d, alpha, beta)
          const double sa = std::sin(t1), ca = std::cos(t1);
          const double sb = std::sin(t2), cb = std::cos(t2);
          c.z0 = r + t0 * ca;
          c.z1 = t0 * sa * cb;
          c.u = t0 * sa * sb;
          jac = std::pow(t0, nb - 1) * std::pow(sa, N - 3) *
                std::pow(sb, std::max(N - 4, 0)) * smooth_cut(t0, rho_a, rho_b);
        } else {
          // (rho, gamma, u)
          c.z0 = t0 * std::cos(t1);
          c.z1 = t0 * std::sin(t1);
          c.u = t2;
          const double d1 = std::sqrt((c.z0 - r) * (c.z0 - r) + c.z1 * c.z1 + c.u * c.u);
          jac = t0 * std::pow(t2, N - 4) * (1.0 - smooth_cut(d1, rho_a, rho_b));
        }
        c.w = jac;
        total += jac;
      }
    }
  }
  const double wq = grid.weights[q];
  if (total > 0.0) {
    for (int i = 0; i < n3; ++i) out[i].w *= wq / total;
  } else {
    for (int i = 0; i < n3; ++i) out[i].w = wq / n3;
  }
}

double tail_estimate(const SectorGrid& grid,
                     const std::function<double(std::span<const double>)>& f,
                     double decay_power) {
  const int nb = grid.N - 1;
  if (!(decay_power > nb)) throw DivergentIntegral("tail_estimate: decay power too small");
  const double rr = 0.995 * grid.annuli.r_cut;
  std::vector<double> pt(nb, 0.0);
  pt[0] = rr;
  const double fr = f(pt);
  return fr * std::pow(rr, decay_power) * unit_sphere_area(nb) *
         std::pow(grid.annuli.r_cut, nb - decay_power) / (decay_power - nb);
}

double ring_average_inv_power(double alpha, double beta, double exponent, int N) {
  const double s = 0.5 * exponent;
  if (beta <= 0.0) return std::pow(alpha, -s);
  const double x = beta / alpha;
  const int q = std::max(N - 5, 0);
  if (q == 0 && x < 0.1) {
    // circle average of (1 - x cos)^{-s}: even moments of cos are 1/2, 3/8
    const double x2 = x * x;
    return std::pow(alpha, -s) *
           (1.0 + 0.25 * s * (s + 1.0) * x2 +
            s * (s + 1.0) * (s + 2.0) * (s + 3.0) * x2 * x2 / 64.0);
  }
  const double eta = (alpha - beta) / beta;
  if (eta < 1e-14) {
    throw CoincidentPoints("ring_average_inv_power: evaluation point on the ring");
  }
  const double norm = (q == 0) ? kPi : sin_power_integral(q);
  static const Rule rule8(8);
  static const Rule rule6(6);
  double total = 0.0;
  const auto panel = [&](const Rule& rule, double a, double b) {
    double acc = 0.0;
    for (int i = 0; i < rule.size(); ++i) {
      const double th = rule.node(i, a, b);
      const double w = rule.weight(i, a, b);
      const double sq = q == 0 ? 1.0 : std::pow(std::sin(th), q);
      acc += w * sq * std::pow(alpha - beta * std::cos(th), -s);
    }
    return acc;
  };
  if (eta >= 4.0) {
    total = panel(rule8, 0.0, kPi);
  } else if (eta >= 0.25) {
    total = panel(rule8, 0.0, 0.5 * kPi) + panel(rule8, 0.5 * kPi, kPi);
  } else {
    double a = 0.0;
    double b = std::max(std::sqrt(eta), 1e-7);
    while (a < kPi) {
      total += panel(rule6, a, std::min(b, kPi));
      a = b;
      b *= 2.0;
    }
  }
  return total / norm;
}

double folded_ring_kernel(const SectorGrid& grid, std::size_t q,
                          std::span<const double> y_tangential, double y_height,
                          double exponent) {
  const int nb = grid.N - 1;
  const double y0 = y_tangential[0], y1 = y_tangential[1];
  double uy2 = y_height * y_height;
  for (int i = 2; i < nb; ++i) uy2 += y_tangential[i] * y_tangential[i];
  const double uy = std::sqrt(uy2 - y_height * y_height);
  const auto pt = grid.point(q);
  const double c0 = pt[0], c1 = pt[1];
  const double uq = grid.ring_u[q];
  const double half_w = 0.5 * grid.weights[q];
  const double beta = 2.0 * uy * uq;
  double total = 0.0;
  for (int kap = 0; kap < grid.k; ++kap) {
    const double ang = 2.0 * kPi * kap / grid.k;
    const double ca = std::cos(ang), sa = std::sin(ang);
    const double r0 = ca * c0 - sa * c1;
    const double r1 = sa * c0 + ca * c1;
    for (int s = 0; s < 2; ++s) {
      const double i1 = s == 0 ? r1 : -r1;
      const double dx = y0 - r0, dy = y1 - i1;
      const double alpha = dx * dx + dy * dy + uy2 + uq * uq;
      total += half_w * ring_average_inv_power(alpha, beta, exponent, grid.N);
    }
  }
  return total;
}

// --- appendix checks ---------------------------------------------------------

double product_split_ratio(std::span<const double> y, std::span<const double> xi,
                           std::span<const double> xj, double alpha, double beta,
                           double sigma_tilde) {
  double di = 0.0, dj = 0.0, dij = 0.0;
  for (std::size_t c = 0; c < y.size(); ++c) {
    const double a = y[c] - xi[c];
    const double b = y[c] - xj[c];
    const double d = xi[c] - xj[c];
    di += a * a;
    dj += b * b;
    dij += d * d;
  }
  di = std::sqrt(di);
  dj = std::sqrt(dj);
  dij = std::sqrt(dij);
  const double lhs = std::pow(1.0 + dj, -alpha) * std::pow(1.0 + di, -beta);
  const double rhs = std::pow(dij, -sigma_tilde) *
                     (std::pow(1.0 + di, -(alpha + beta - sigma_tilde)) +
                      std::pow(1.0 + dj, -(alpha + beta - sigma_tilde)));
  return lhs / rhs;
}

namespace {

// Reduced 2-D quadrature of the boundary convolution
// integral of |y-z|^{2-N} (1+|z|)^{-1-sigma} over z in R^{N-1}.
double laa2_lhs(int N, double sigma_tilde, double ay, int grading) {
  const int nb = N - 1;
  const double sphere_sub = unit_sphere_area(nb - 1);  // |S^{N-3}|
  const double r_cut = std::max(100.0, 50.0 * std::max(ay, 1.0));
  std::vector<double> rho_breaks{0.0};
  if (ay > 0.0) {
    for (int j = grading; j >= 1; --j) {
      const double off = ay * std::pow(2.0, -j);
      if (ay - off > 0.0) rho_breaks.push_back(ay - off);
      rho_breaks.push_back(ay + off);
    }
  }
  for (double x = std::max(1.0, 2.0 * ay); x < r_cut; x *= 2.0) rho_breaks.push_back(x);
  rho_breaks.push_back(r_cut);
  rho_breaks = dedupe_sorted(rho_breaks, 1e-12);

  std::vector<double> th_breaks{0.0};
  for (int j = grading + 2; j >= 1; --j) th_breaks.push_back(kPi * std::pow(2.0, -j));
  th_breaks.push_back(kPi);
  th_breaks = dedupe_sorted(th_breaks, 1e-12);

  const Rule rule(4 + grading / 4);
  double total = 0.0;
  for (std::size_t pr = 0; pr + 1 < rho_breaks.size(); ++pr) {
    for (int ir = 0; ir < rule.size(); ++ir) {
      const double rho = rule.node(ir, rho_breaks[pr], rho_breaks[pr + 1]);
      const double wr = rule.weight(ir, rho_breaks[pr], rho_breaks[pr + 1]) *
                        std::pow(rho, nb - 1) * std::pow(1.0 + rho, -1.0 - sigma_tilde);
      for (std::size_t pt = 0; pt + 1 < th_breaks.size(); ++pt) {
        for (int it = 0; it < rule.size(); ++it) {
          const double th = rule.node(it, th_breaks[pt], th_breaks[pt + 1]);
          const double wt = rule.weight(it, th_breaks[pt], th_breaks[pt + 1]) *
                            std::pow(std::sin(th), nb - 2);
          const double d2 = ay * ay + rho * rho - 2.0 * ay * rho * std::cos(th);
          if (d2 < 1e-28) continue;
          total += wr * wt * std::pow(d2, -(N - 2) / 2.0);
        }
      }
    }
  }
  total *= sphere_sub;
  // analytic tail: |y-z| ~ rho beyond the cutoff
  total += unit_sphere_area(nb) * std::pow(1.0 + r_cut, -sigma_tilde) / sigma_tilde;
  return total;
}

}  // namespace

AppendixReport verify_appendix_estimates(const ProblemParams& params,
                                         const SpikeConfig& config,
                                         std::int64_t sample_count, std::uint64_t seed) {
  params.validate();
  if (sample_count < 8) throw InvalidParams("verify_appendix_estimates: too few samples");
  AppendixReport report;
  const int nb = params.N - 1;

  // Product split: g_ij(y) <= C |x_i-x_j|^{-sigma} [ ... ].
  {
    const auto xi = config.spike(0);
    const auto xj = config.spike(config.k > 1 ? 1 : 0);
    std::vector<double> xjv(xj.begin(), xj.end());
    if (config.k == 1) xjv[0] += std::max(1.0, config.r);  // synthetic second center
    const double alpha = (params.N + 2.0) / 2.0;
    const double beta = params.N - 2.0;
    const double sig = 0.5 * std::min(alpha, beta);
    const double span = 4.0 * config.r + 10.0;
    const auto run = [&](std::int64_t count) {
      double cmax = 0.0;
      for (std::int64_t i = 0; i < count; ++i) {
        CounterRng rng(seed, static_cast<std::uint64_t>(i));
        std::vector<double> y(nb);
        const double pick = rng.next_double();
        std::span<const double> anchor = pick < 0.4 ? std::span<const double>(xi)
                                                    : std::span<const double>(xjv);
        const double rad = pick < 0.8 ? 4.0 * std::pow(rng.next_double(), 2.0) * span
                                      : span * rng.next_double();
        for (int c = 0; c < nb; ++c) {
          y[c] = (pick < 0.8 ? anchor[c] : 0.0) + rad * (2.0 * rng.next_double() - 1.0);
        }
        cmax = std::max(cmax, product_split_ratio(y, xi, xjv, alpha, beta, sig));
      }
      return cmax;
    };
    report.product_split.name = "two-center product bound";
    report.product_split.empirical_C = run(sample_count);
    report.product_split.empirical_C_doubled = run(2 * sample_count);
    const double c1 = report.product_split.empirical_C;
    const double c2 = report.product_split.empirical_C_doubled;
    report.product_split.stable = std::isfinite(c2) && c2 < 2.0 * std::max(c1, 1e-300) &&
                                  c1 < 2.0 * c2;
    std::ostringstream os;
    os << sample_count << " box/cluster samples, span " << span;
    report.product_split.sampled_region = os.str();
  }

  // Green-kernel convolution decay.
  {
    const double sig = 1.0;
    const auto run = [&](int count, int grading) {
      double cmax = 0.0;
      for (int i = 0; i < count; ++i) {
        const double ay = (i == 0) ? 0.0 : std::pow(10.0, -1.0 + 3.0 * (i - 1) / (count - 1.0));
        const double lhs = laa2_lhs(params.N, sig, ay, grading);
        cmax = std::max(cmax, lhs * std::pow(1.0 + ay, sig));
      }
      return cmax;
    };
    report.green_convolution.name = "Green-kernel convolution decay";
    const int count = static_cast<int>(std::min<std::int64_t>(sample_count, 24));
    report.green_convolution.empirical_C = run(count, 10);
    report.green_convolution.empirical_C_doubled = run(2 * count, 12);
    const double c1 = report.green_convolution.empirical_C;
    const double c2 = report.green_convolution.empirical_C_doubled;
    report.green_convolution.stable = std::isfinite(c2) && c2 < 2.0 * c1 && c1 < 2.0 * c2;
    std::ostringstream os;
    os << count << " radii in [0, 100], sigma " << sig;
    report.green_convolution.sampled_region = os.str();
  }

  // Weighted operator bound on the k-spike geometry.
  {
    const SectorGrid grid = build_sector_grid(config, 1, GridOptions::collocation(1));
    const double estar = norm_star_exponent(params);
    const double q = params.two_sharp() - 2.0;
    std::vector<double> dens(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto z = grid.point(i);
      const double w = ansatz_eval(config, z, 0.0);
      dens[i] = std::pow(w, q) * spike_weight_sum(config, z, 0.0, estar);
    }
    const auto run = [&](int count) {
      double cmax = 0.0;
      for (int i = 0; i < count; ++i) {
        CounterRng rng(seed ^ 0x5bd1e995u, static_cast<std::uint64_t>(i));
        std::vector<double> y(nb, 0.0);
        const double h = (0.25 + 0.75 * rng.next_double()) / config.lambda;
        const double pick = rng.next_double();
        if (pick < 0.5) {
          const auto x1 = config.spike(0);
          for (int c = 0; c < nb; ++c) {
            y[c] = x1[c] + (2.0 * rng.next_double() - 1.0) * 4.0 / config.lambda;
          }
        } else {
          const double rad = config.r * (0.2 + 2.0 * rng.next_double());
          const double ang = (kPi / config.k) * rng.next_double();
          y[0] = rad * std::cos(ang);
          y[1] = rad * std::sin(ang);
        }
        std::vector<double> terms(grid.size());
        for (std::size_t qn = 0; qn < grid.size(); ++qn) {
          terms[qn] = dens[qn] * folded_ring_kernel(grid, qn, y, h, params.N - 2.0);
        }
        const double lhs = pairwise_sum(terms);
        double rhs = 0.0;
        for (int j = 0; j < config.k; ++j) {
          const auto xj = config.spike(j);
          double d2 = h * h;
          for (int c = 0; c < nb; ++c) d2 += (y[c] - xj[c]) * (y[c] - xj[c]);
          rhs += std::pow(1.0 + std::sqrt(d2), -estar);
        }
        cmax = std::max(cmax, lhs / rhs);
      }
      return cmax;
    };
    report.weighted_operator.name = "k-spike weighted convolution bound";
    const int count = static_cast<int>(std::min<std::int64_t>(sample_count, 32));
    report.weighted_operator.empirical_C = run(count);
    report.weighted_operator.empirical_C_doubled = run(2 * count);
    const double c1 = report.weighted_operator.empirical_C;
    const double c2 = report.weighted_operator.empirical_C_doubled;
    report.weighted_operator.stable = std::isfinite(c2) && c2 < 2.0 * c1 && c1 < 2.0 * c2;
    std::ostringstream os;
    os << count << " points near spikes and along the sector, heights up to 1/Lambda";
    report.weighted_operator.sampled_region = os.str();
  }

  return report;
}

}  // namespace bubblered
