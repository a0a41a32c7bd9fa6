#include "bubblered/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bubblered {

namespace {
constexpr double kPi = std::numbers::pi;
}

ExpansionConstants compute_constants(const ProblemParams& params) {
  params.validate();
  const int N = params.N;
  const double m = params.m;
  const double pref = std::pow(N - 2.0, N - 1.0);
  ExpansionConstants c;
  c.A_N = pref * closed_form_moment({N - 1, 0.0, N - 1.0});
  c.C1N = pref * closed_form_moment({N - 1, m, N - 1.0});
  c.C2N = 0.5 * m * (m - 1.0) * pref * closed_form_moment({N - 1, m - 2.0, N - 1.0});
  c.C3N = pref * closed_form_moment({N - 1, 0.0, N / 2.0});
  const double ts = params.two_sharp();
  c.A = (0.5 - 1.0 / ts) * c.A_N;
  c.B1 = c.C1N / ts;
  c.B2 = c.C2N / ts;
  c.B3 = 0.5 * c.C3N;
  const auto seq = default_b4_sequence();
  c.B4 = b4_limit(N, seq);
  return c;
}

double interaction_sum(int k, double r, int N) {
  if (k < 2) throw InvalidParams("interaction_sum: k must be >= 2");
  if (!(r > 0.0)) throw InvalidParams("interaction_sum: r must be positive");
  std::vector<double> terms(k - 1);
  for (int j = 2; j <= k; ++j) {
    const double dist = 2.0 * r * std::sin((j - 1) * kPi / k);
    terms[j - 2] = std::pow(dist, 2.0 - N);
  }
  return pairwise_sum(terms);
}

std::vector<int> default_b4_sequence() {
  std::vector<int> seq;
  for (int k = 64; k <= (1 << 14); k *= 2) seq.push_back(k);
  return seq;
}

double b4_limit(int N, std::span<const int> k_sequence) {
  if (k_sequence.size() < 4) throw InvalidParams("b4_limit: need at least 4 entries");
  for (std::size_t i = 1; i < k_sequence.size(); ++i) {
    if (k_sequence[i] <= k_sequence[i - 1]) {
      throw InvalidParams("b4_limit: k_sequence must be increasing");
    }
  }
  if (k_sequence.back() < (1 << 14)) {
    throw InvalidParams("b4_limit: last entry must be >= 2^14");
  }
  std::vector<double> t(k_sequence.size());
  for (std::size_t i = 0; i < k_sequence.size(); ++i) {
    t[i] = interaction_sum(k_sequence[i], 1.0, N) *
           std::pow(static_cast<double>(k_sequence[i]), 2.0 - N);
  }
  // Repeated elimination of k^{-2} terms (the leading correction, with a
  // slowly varying log factor absorbed by the second stage).
  std::vector<double> cur = t;
  std::vector<double> ks(k_sequence.begin(), k_sequence.end());
  double prev_last = cur.back();
  for (int stage = 0; stage < 3 && cur.size() >= 2; ++stage) {
    std::vector<double> next(cur.size() - 1);
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
      const double rho = ks[i + 1] / ks[i];
      const double r2 = rho * rho;
      next[i] = (r2 * cur[i + 1] - cur[i]) / (r2 - 1.0);
    }
    ks.erase(ks.begin());
    prev_last = cur.back();
    cur = std::move(next);
  }
  const double limit = cur.back();
  if (!(std::abs(limit - prev_last) <= 1e-6 * std::abs(limit))) {
    throw NonConvergent("b4_limit: extrapolants did not settle to 1e-6");
  }
  return limit;
}

double b4_zeta_form(int N) {
  return 2.0 * std::riemann_zeta(N - 2.0) / std::pow(2.0 * kPi, N - 2.0);
}

namespace {

double interaction_value(const ExpansionConstants& c, int N, int k, double r,
                         InteractionForm form) {
  if (form == InteractionForm::ExactSum) return interaction_sum(k, r, N);
  return c.B4 * std::pow(static_cast<double>(k), N - 2.0) * std::pow(r, 2.0 - N);
}

}  // namespace

double f_asym(const ExpansionConstants& c, const ProblemParams& params, int k, double r,
              double lambda, InteractionForm form) {
  const int N = params.N;
  const double m = params.m;
  const double mu = params.mu_of_k(k);
  const double mum = std::pow(mu, m);
  const double dr = mu * params.r0 - r;
  const double is = interaction_value(c, N, k, r, form);
  return k * (c.A + c.B1 * std::pow(lambda, -m) / mum +
              c.B2 * std::pow(lambda, 2.0 - m) * dr * dr / mum -
              c.B3 * std::pow(lambda, 2.0 - N) * is);
}

double df_dlambda_asym(const ExpansionConstants& c, const ProblemParams& params, int k,
                       double r, double lambda, InteractionForm form) {
  const int N = params.N;
  const double m = params.m;
  const double mu = params.mu_of_k(k);
  const double mum = std::pow(mu, m);
  const double dr = mu * params.r0 - r;
  const double is = interaction_value(c, N, k, r, form);
  return k * (-m * c.B1 * std::pow(lambda, -m - 1.0) / mum +
              (2.0 - m) * c.B2 * std::pow(lambda, 1.0 - m) * dr * dr / mum +
              (N - 2.0) * c.B3 * std::pow(lambda, 1.0 - N) * is);
}

double df_dr_asym(const ExpansionConstants& c, const ProblemParams& params, int k, double r,
                  double lambda, InteractionForm form) {
  const int N = params.N;
  const double m = params.m;
  const double mu = params.mu_of_k(k);
  const double mum = std::pow(mu, m);
  const double dr = mu * params.r0 - r;
  const double is = interaction_value(c, N, k, r, form);
  // d/dr of the interaction: both forms are homogeneous of degree 2-N in r.
  return k * (-2.0 * c.B2 * std::pow(lambda, 2.0 - m) * dr / mum +
              (N - 2.0) * c.B3 * std::pow(lambda, 2.0 - N) * is / r);
}

double lambda0(const ExpansionConstants& c, const ProblemParams& params) {
  const int N = params.N;
  const double m = params.m;
  const double num = c.B3 * c.B4 * (N - 2.0);
  const double den = c.B1 * m * std::pow(params.r0, N - 2.0);
  return std::pow(num / den, 1.0 / (N - 2.0 - m));
}

DomainBox search_domain(const ExpansionConstants& c, const ProblemParams& params, int k,
                        double theta_bar) {
  const double mu = params.mu_of_k(k);
  const double l0 = lambda0(c, params);
  DomainBox box;
  box.r_lo = mu * params.r0 - std::pow(mu, -theta_bar);
  box.r_hi = mu * params.r0 + std::pow(mu, -theta_bar);
  box.lambda_lo = l0 - std::pow(mu, -1.5 * theta_bar);
  box.lambda_hi = l0 + std::pow(mu, -1.5 * theta_bar);
  return box;
}

namespace {

struct Grad {
  double gr, gl;
  double norm() const { return std::hypot(gr, gl); }
};

Grad gradient(const ExpansionConstants& c, const ProblemParams& params, int k, double r,
              double lambda) {
  return {df_dr_asym(c, params, k, r, lambda),
          df_dlambda_asym(c, params, k, r, lambda)};
}

void hessian(const ExpansionConstants& c, const ProblemParams& params, int k, double r,
             double lambda, double& hrr, double& hrl, double& hll) {
  const int N = params.N;
  const double m = params.m;
  const double mu = params.mu_of_k(k);
  const double mum = std::pow(mu, m);
  const double dr = mu * params.r0 - r;
  const double is = interaction_sum(k, r, N);
  hrr = k * (2.0 * c.B2 * std::pow(lambda, 2.0 - m) / mum -
             (N - 2.0) * (N - 1.0) * c.B3 * std::pow(lambda, 2.0 - N) * is / (r * r));
  hrl = k * (-2.0 * (2.0 - m) * c.B2 * std::pow(lambda, 1.0 - m) * dr / mum -
             (N - 2.0) * (N - 2.0) * c.B3 * std::pow(lambda, 1.0 - N) * is / r);
  hll = k * (m * (m + 1.0) * c.B1 * std::pow(lambda, -m - 2.0) / mum +
             (2.0 - m) * (1.0 - m) * c.B2 * std::pow(lambda, -m) * dr * dr / mum -
             (N - 2.0) * (N - 1.0) * c.B3 * std::pow(lambda, -N) * is);
}

}  // namespace

CriticalPointReport find_critical_point(const ExpansionConstants& c,
                                        const ProblemParams& params, int k,
                                        double theta_bar, int k_min) {
  params.validate();
  if (k < k_min) throw InvalidParams("find_critical_point: k below k_min");
  const double mu = params.mu_of_k(k);
  CriticalPointReport rep;
  rep.k = k;
  rep.domain = search_domain(c, params, k, theta_bar);
  double r = mu * params.r0;
  double lam = lambda0(c, params);
  const double tol = 1e-10 * k;
  Grad g = gradient(c, params, k, r, lam);
  const int max_iter = 60;
  int it = 0;
  for (; it < max_iter; ++it) {
    if (it >= 2 && g.norm() < tol) break;
    double hrr, hrl, hll;
    hessian(c, params, k, r, lam, hrr, hrl, hll);
    const double det = hrr * hll - hrl * hrl;
    double sr, sl;
    if (std::abs(det) > 1e-300) {
      sr = -(hll * g.gr - hrl * g.gl) / det;
      sl = -(-hrl * g.gr + hrr * g.gl) / det;
    } else {
      sr = -g.gr;
      sl = -g.gl;
    }
    double step = 1.0;
    bool accepted = false;
    for (int halve = 0; halve < 30; ++halve) {
      double rn = std::clamp(r + step * sr, rep.domain.r_lo, rep.domain.r_hi);
      double ln = std::clamp(lam + step * sl, rep.domain.lambda_lo, rep.domain.lambda_hi);
      const Grad gn = gradient(c, params, k, rn, ln);
      if (gn.norm() <= g.norm() || (rn == r && ln == lam)) {
        r = rn;
        lam = ln;
        g = gn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  rep.r_star = r;
  rep.lambda_star = lam;
  rep.iterations = it;
  rep.gradient_norm = g.norm();
  rep.converged = g.norm() < tol;
  rep.f_value = f_asym(c, params, k, r, lam);
  return rep;
}

namespace {

// Cross-interaction integrand: sum_i U_i^{2#-1} (W - U_i), Q_k-symmetric.
double cross_integrand(const SpikeConfig& config, std::span<const double> z) {
  const int N = config.params.N;
  const double q = config.params.two_sharp() - 1.0;
  std::vector<double> vals(config.k);
  double w = 0.0;
  for (int j = 0; j < config.k; ++j) {
    vals[j] = bubble_value(N, config.lambda, config.spike(j), z, 0.0);
    w += vals[j];
  }
  double s = 0.0;
  for (int j = 0; j < config.k; ++j) s += std::pow(vals[j], q) * (w - vals[j]);
  return s;
}

}  // namespace

double energy_exact(const SpikeConfig& config, const KProfile& profile,
                    const SectorGrid& grid) {
  const ProblemParams& p = config.params;
  const double ts = p.two_sharp();
  const double A_N = std::pow(p.N - 2.0, p.N - 1.0) *
                     closed_form_moment({p.N - 1, 0.0, p.N - 1.0});
  const double cross = integrate_boundary(grid, [&](std::span<const double> z) {
    return cross_integrand(config, z);
  });
  // K W^{2#} minus the exact bubble self-powers, integrated as a difference.
  const double kdiff = integrate_boundary(grid, [&](std::span<const double> z) {
    const double q = ts;
    double w = 0.0, selfsum = 0.0;
    for (int j = 0; j < config.k; ++j) {
      const double u = bubble_value(p.N, config.lambda, config.spike(j), z, 0.0);
      w += u;
      selfsum += std::pow(u, q);
    }
    double rz = 0.0;
    for (double zc : z) rz += zc * zc;
    const double Kv = profile.eval(std::sqrt(rz) / config.mu);
    return Kv * std::pow(w, q) - selfsum;
  });
  return config.k * (0.5 - 1.0 / ts) * A_N + 0.5 * cross - kdiff / ts;
}

double energy_exact_direct(const SpikeConfig& config, const KProfile& profile,
                           const SectorGrid& grid) {
  const ProblemParams& p = config.params;
  const double ts = p.two_sharp();
  const double A_N = std::pow(p.N - 2.0, p.N - 1.0) *
                     closed_form_moment({p.N - 1, 0.0, p.N - 1.0});
  const double cross = integrate_boundary(grid, [&](std::span<const double> z) {
    return cross_integrand(config, z);
  });
  const double bdry = integrate_boundary(grid, [&](std::span<const double> z) {
    double rz = 0.0;
    for (double zc : z) rz += zc * zc;
    const double Kv = profile.eval(std::sqrt(rz) / config.mu);
    return Kv * std::pow(ansatz_eval(config, z, 0.0), ts);
  });
  return 0.5 * (config.k * A_N + cross) - bdry / ts;
}

double kazdan_warner(const SpikeConfig& config, const KProfile& profile,
                     const SectorGrid& grid, std::span<const double> phi_values) {
  if (!phi_values.empty() && phi_values.size() != grid.size()) {
    throw InvalidParams("kazdan_warner: phi_values must align with the grid");
  }
  const double ts = config.params.two_sharp();
  const std::size_t M = grid.size();
  std::vector<double> terms(M);
  map_index(M, terms, [&](std::size_t i) {
    const auto z = grid.point(i);
    double rz = 0.0;
    for (double zc : z) rz += zc * zc;
    rz = std::sqrt(rz);
    const double arg = rz / config.mu;
    const double kp = profile.deriv(arg);
    if (kp == 0.0) return 0.0;
    double u = ansatz_eval(config, z, 0.0);
    if (!phi_values.empty()) u += phi_values[i];
    return grid.weights[i] * kp * arg * signed_pow(u, ts);
  });
  return grid.k * pairwise_sum(terms);
}

}  // namespace bubblered
