#include "bubblered/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bubblered {

namespace {

double sqnorm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

constexpr double kSingularTol = 1e-12;
constexpr double kDegenerateTol = 1e-14;

}  // namespace

BallPoint::BallPoint(std::vector<double> c) : coords(std::move(c)) {
  const double n2 = sqnorm(coords);
  if (n2 > 1.0 + 3e-12) {
    throw InvalidParams("BallPoint norm exceeds 1 + 1e-12");
  }
}

HalfSpacePoint::HalfSpacePoint(std::vector<double> tan, double h)
    : tangential(std::move(tan)), height(h) {
  if (height < -kSingularTol) {
    throw InvalidParams("HalfSpacePoint height must be nonnegative");
  }
  height = std::max(height, 0.0);
}

HalfSpacePoint to_halfspace(const BallPoint& p) {
  const int N = p.dim();
  const double yN = p.coords[N - 1];
  double yp2 = 0.0;
  for (int i = 0; i < N - 1; ++i) yp2 += p.coords[i] * p.coords[i];
  const double denom = (1.0 + yN) * (1.0 + yN) + yp2;
  if (denom < kSingularTol) {
    throw SingularPoint("stereographic projection singular at the south pole");
  }
  std::vector<double> tan(N - 1);
  for (int i = 0; i < N - 1; ++i) tan[i] = 4.0 * p.coords[i] / denom;
  const double h = 2.0 * (1.0 - yN * yN - yp2) / denom;
  return HalfSpacePoint(tan, std::max(h, 0.0));
}

BallPoint to_ball(const HalfSpacePoint& q) {
  const int N = q.dim();
  const double xs = q.height + 2.0;
  const double t = sqnorm(q.tangential) + xs * xs;
  std::vector<double> y(N);
  for (int i = 0; i < N - 1; ++i) y[i] = 4.0 * q.tangential[i] / t;
  y[N - 1] = 4.0 * xs / t - 1.0;
  // Boundary points land on |y| = 1 up to roundoff.
  const double n2 = sqnorm(y);
  if (n2 > 1.0) {
    const double scale = 1.0 / std::sqrt(n2);
    if (n2 < 1.0 + 1e-10) {
      for (double& c : y) c *= scale;
    }
  }
  return BallPoint(std::move(y));
}

double conformal_transfer(double u_ball_value, const BallPoint& p, int N) {
  const HalfSpacePoint x = to_halfspace(p);
  const double bracket = (2.0 + x.height) * (2.0 + x.height) + sqnorm(x.tangential);
  const double e = (N - 2) / 2.0;
  return std::pow(4.0, e) * u_ball_value / std::pow(bracket, e);
}

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

double greens_function(const HalfSpacePoint& x, const HalfSpacePoint& y) {
  const int N = x.dim();
  double d2 = 0.0, ds2 = 0.0;
  for (int i = 0; i < N - 1; ++i) {
    const double di = x.tangential[i] - y.tangential[i];
    d2 += di * di;
    ds2 += di * di;
  }
  const double dh = x.height - y.height;
  const double dhs = x.height + y.height;
  d2 += dh * dh;
  ds2 += dhs * dhs;
  if (std::sqrt(d2) < 1e-14) {
    throw CoincidentPoints("Green's function evaluated at coincident points");
  }
  // fundamental-solution normalization: -Delta G = delta_y with a reflection
  // image enforcing the vanishing wall flux
  const double cn = 1.0 / (N * (N - 2) * unit_ball_volume(N));
  const double e = (N - 2) / 2.0;
  return cn * (std::pow(d2, -e) + std::pow(ds2, -e));
}

SpikeConfig build_spikes(const ProblemParams& params, int k, double r, double lambda) {
  params.validate();
  if (k < 1) throw InvalidParams("build_spikes: k must be >= 1");
  if (!(r > 0.0)) throw InvalidParams("build_spikes: r must be positive");
  if (!(lambda > 0.0)) throw InvalidParams("build_spikes: Lambda must be positive");
  SpikeConfig config;
  config.params = params;
  config.k = k;
  config.r = r;
  config.lambda = lambda;
  config.mu = params.mu_of_k(k);
  const int nb = params.N - 1;
  config.spikes.assign(static_cast<std::size_t>(k) * nb, 0.0);
  for (int j = 0; j < k; ++j) {
    const double ang = 2.0 * std::numbers::pi * j / k;
    config.spikes[static_cast<std::size_t>(j) * nb + 0] = r * std::cos(ang);
    config.spikes[static_cast<std::size_t>(j) * nb + 1] = r * std::sin(ang);
  }
  return config;
}

int sector_of_tangential(std::span<const double> tangential, int k) {
  if (k < 1) throw InvalidParams("sector_of: k must be >= 1");
  const double a = tangential[0];
  const double b = tangential.size() > 1 ? tangential[1] : 0.0;
  if (std::abs(a) < kDegenerateTol && std::abs(b) < kDegenerateTol) {
    throw DegenerateDirection("sector_of: first two tangential coordinates vanish");
  }
  const double norm = std::hypot(a, b);
  double best = -2.0;
  int best_j = 1;
  for (int j = 1; j <= k; ++j) {
    const double ang = 2.0 * std::numbers::pi * (j - 1) / k;
    const double dot = (a * std::cos(ang) + b * std::sin(ang)) / norm;
    if (dot > best + 1e-12) {
      best = dot;
      best_j = j;
    }
  }
  return best_j;
}

int sector_of(const HalfSpacePoint& p, int k) {
  return sector_of_tangential(p.tangential, k);
}

std::vector<double> rotate_qk(std::span<const double> tangential, int k, int times) {
  const double ang = 2.0 * std::numbers::pi * times / k;
  const double c = std::cos(ang), s = std::sin(ang);
  std::vector<double> out(tangential.begin(), tangential.end());
  if (out.size() >= 2) {
    out[0] = c * tangential[0] - s * tangential[1];
    out[1] = s * tangential[0] + c * tangential[1];
  }
  return out;
}

}  // namespace bubblered
