#include "bubblered/bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bubblered {

double ProblemParams::mu_of_k(int k) const {
  const double e = (N - 2.0) / (N - 2.0 - m);
  const double er = std::round(e);
  if (std::abs(e - er) < 1e-12 && er >= 1.0 && er < 64.0) {
    double mu = 1.0;
    for (int i = 0; i < static_cast<int>(er); ++i) mu *= k;
    return mu;
  }
  return std::pow(static_cast<double>(k), e);
}

void ProblemParams::validate() const {
  std::ostringstream err;
  if (N < 5) {
    err << "N = " << N << " violates N >= 5";
  } else if (!(m >= 2.0) || !(m < N - 2.0)) {
    err << "m = " << m << " violates m in [2, N-2) = [2, " << N - 2 << ")";
  } else if (!(c0 > 0.0)) {
    err << "c0 = " << c0 << " violates c0 > 0";
  } else if (!(r0 > 0.0)) {
    err << "r0 = " << r0 << " violates r0 > 0";
  } else if (!(theta > 0.0)) {
    err << "theta = " << theta << " violates theta > 0";
  } else if (!(delta > 0.0)) {
    err << "delta = " << delta << " violates delta > 0";
  } else if (!(tau > 0.0) || !(tau < 1.0 / (2.0 * (N - 2)))) {
    err << "tau = " << tau << " violates 0 < tau < 1/(2(N-2)) = " << 1.0 / (2.0 * (N - 2));
  } else if (!(sigma > 0.0) || !(sigma < sigma_bound())) {
    err << "sigma = " << sigma
        << " violates 0 < sigma < (m/(N-2))(m/(N-2)-tau) = " << sigma_bound();
  } else {
    return;
  }
  throw InvalidParams(err.str());
}

ProblemParams ProblemParams::defaults(int N, double m) {
  ProblemParams p;
  p.N = N;
  p.m = m;
  p.tau = std::min(0.1, 0.6 / (2.0 * (N - 2)));
  p.sigma = 0.75 * p.sigma_bound();
  return p;
}

KProfile KProfile::constant(double value) {
  if (!(value > 0.0)) throw InvalidParams("KProfile::constant: value must be positive");
  KProfile p;
  p.kind_ = Kind::Constant;
  p.value_ = value;
  return p;
}

KProfile KProfile::local_max(const ProblemParams& params) {
  params.validate();
  KProfile p;
  p.kind_ = Kind::LocalMax;
  p.c0_ = params.c0;
  p.r0_ = params.r0;
  p.m_ = params.m;
  p.delta_ = params.delta;
  p.floor_ = std::max(1.0 - params.c0 * std::pow(params.delta, params.m), 0.1);
  return p;
}

KProfile KProfile::monotone(double slope) {
  if (!(std::abs(slope) < 1.0) || slope == 0.0) {
    throw InvalidParams("KProfile::monotone: slope must be nonzero with |slope| < 1");
  }
  KProfile p;
  p.kind_ = Kind::Monotone;
  p.slope_ = slope;
  return p;
}

double KProfile::eval(double r) const {
  switch (kind_) {
    case Kind::Constant:
      return value_;
    case Kind::Monotone:
      return 1.0 - slope_ * r / (1.0 + r);
    case Kind::LocalMax: {
      const double d = std::abs(r - r0_);
      if (d <= delta_) return std::max(1.0 - c0_ * std::pow(d, m_), floor_);
      return floor_;
    }
  }
  return 1.0;
}

double KProfile::deriv(double r) const {
  switch (kind_) {
    case Kind::Constant:
      return 0.0;
    case Kind::Monotone:
      return -slope_ / ((1.0 + r) * (1.0 + r));
    case Kind::LocalMax: {
      const double d = std::abs(r - r0_);
      if (d >= delta_ || 1.0 - c0_ * std::pow(d, m_) < floor_) return 0.0;
      if (d == 0.0) return 0.0;
      return -c0_ * m_ * std::pow(d, m_ - 1.0) * (r > r0_ ? 1.0 : -1.0);
    }
  }
  return 0.0;
}

std::string KProfile::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Constant:
      os << "constant(" << value_ << ")";
      break;
    case Kind::Monotone:
      os << "monotone(" << slope_ << ")";
      break;
    case Kind::LocalMax:
      os << "localmax(c0=" << c0_ << ",r0=" << r0_ << ",m=" << m_ << ",delta=" << delta_
         << ")";
      break;
  }
  return os.str();
}

double bubble_value(int N, double lambda, std::span<const double> center,
                    std::span<const double> tangential, double height) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < tangential.size(); ++i) {
    const double di = tangential[i] - (i < center.size() ? center[i] : 0.0);
    d2 += di * di;
  }
  const double a = 1.0 + lambda * height;
  const double D = a * a + lambda * lambda * d2;
  const double e = (N - 2) / 2.0;
  return std::pow((N - 2.0) * lambda / D, e);
}

double bubble_eval(const BubbleField& b, std::span<const double> tangential, double height) {
  return bubble_value(b.N, b.lambda, b.center, tangential, height);
}

double ansatz_eval(const SpikeConfig& config, std::span<const double> tangential,
                   double height) {
  double w = 0.0;
  for (int j = 0; j < config.k; ++j) {
    w += bubble_value(config.params.N, config.lambda, config.spike(j), tangential, height);
  }
  return w;
}

double kernel_Z(const SpikeConfig& config, int spike_index, int j,
                std::span<const double> tangential, double height) {
  if (j != 1 && j != 2) throw InvalidParams("kernel_Z: j must be 1 or 2");
  const int N = config.params.N;
  const double lambda = config.lambda;
  const auto center = config.spike(spike_index);
  double d2 = 0.0;
  for (std::size_t i = 0; i < tangential.size(); ++i) {
    const double di = tangential[i] - center[i];
    d2 += di * di;
  }
  const double a = 1.0 + lambda * height;
  const double D = a * a + lambda * lambda * d2;
  const double U = std::pow((N - 2.0) * lambda / D, (N - 2) / 2.0);
  if (j == 1) {
    // dU/dr: the center moves along x_i / r.
    double dot = 0.0;
    for (std::size_t i = 0; i < tangential.size(); ++i) {
      dot += (tangential[i] - center[i]) * center[i];
    }
    dot /= config.r;
    return U * (N - 2.0) * lambda * lambda * dot / D;
  }
  const double num = 1.0 - lambda * lambda * height * height - lambda * lambda * d2;
  return U * (N - 2.0) / (2.0 * lambda) * num / D;
}

double K_eval(const KProfile& profile, double radius) {
  if (radius < 0.0) throw InvalidParams("K_eval: radius must be >= 0");
  return profile.eval(radius);
}

namespace {

double boundary_norm(std::span<const double> tangential) {
  double s = 0.0;
  for (double x : tangential) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double residual_eval(const SpikeConfig& config, const KProfile& profile,
                     std::span<const double> tangential) {
  const int N = config.params.N;
  const double q = config.params.two_sharp() - 1.0;
  double flux = 0.0, w = 0.0;
  for (int j = 0; j < config.k; ++j) {
    const double u = bubble_value(N, config.lambda, config.spike(j), tangential, 0.0);
    flux += std::pow(u, q);
    w += u;
  }
  const double Kv = profile.eval(boundary_norm(tangential) / config.mu);
  return flux - Kv * std::pow(w, q);
}

double nonlinearity_eval(const SpikeConfig& config, const KProfile& profile,
                         std::span<const double> tangential, double phi_value) {
  const double q = config.params.two_sharp() - 1.0;
  const double w = ansatz_eval(config, tangential, 0.0);
  const double Kv = profile.eval(boundary_norm(tangential) / config.mu);
  const double lin = std::pow(w, q) + q * std::pow(w, q - 1.0) * phi_value;
  return Kv * (signed_pow(w + phi_value, q) - lin);
}

double spike_weight_sum(const SpikeConfig& config, std::span<const double> tangential,
                        double height, double exponent) {
  double s = 0.0;
  const int nb = config.boundary_dim();
  for (int j = 0; j < config.k; ++j) {
    const double* c = config.spikes.data() + static_cast<std::size_t>(j) * nb;
    double d2 = height * height;
    for (int i = 0; i < nb; ++i) {
      const double di = tangential[i] - c[i];
      d2 += di * di;
    }
    s += std::pow(1.0 + std::sqrt(d2), -exponent);
  }
  return s;
}

double norm_star_exponent(const ProblemParams& params) {
  return params.N / 2.0 - params.m / (params.N - 2.0) + params.tau;
}

double norm_dstar_exponent(const ProblemParams& params) {
  return (params.N + 2.0) / 2.0 - params.m / (params.N - 2.0) + params.tau;
}

namespace {

double weighted_sup(const SpikeConfig& config, std::span<const NormSample> samples,
                    double exponent, bool boundary_only) {
  if (samples.empty()) throw EmptySamples("norm evaluation needs a non-empty sample list");
  double sup = 0.0;
  for (const NormSample& s : samples) {
    const double h = boundary_only ? 0.0 : s.height;
    const double w = spike_weight_sum(config, s.tangential, h, exponent);
    sup = std::max(sup, std::abs(s.value) / w);
  }
  return sup;
}

}  // namespace

double norm_star(const SpikeConfig& config, const ProblemParams& params,
                 std::span<const NormSample> samples) {
  return weighted_sup(config, samples, norm_star_exponent(params), false);
}

double norm_dstar(const SpikeConfig& config, const ProblemParams& params,
                  std::span<const NormSample> samples) {
  return weighted_sup(config, samples, norm_dstar_exponent(params), true);
}

}  // namespace bubblered
