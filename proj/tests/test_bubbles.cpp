#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "bubblered/bubbles.hpp"
#include "bubblered/geometry.hpp"
#include "bubblered/parallel.hpp"

using namespace bubblered;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> random_tangential(CounterRng& rng, double span) {
  std::vector<double> t(4);
  for (double& x : t) x = span * (2.0 * rng.next_double() - 1.0);
  return t;
}

// 4th-order 5-point second derivative along one coordinate.
double second_derivative(const std::function<double(std::span<const double>, double)>& f,
                         std::vector<double> tan, double h0, int axis, double step) {
  const auto at = [&](double off) {
    if (axis < 4) {
      std::vector<double> t = tan;
      t[axis] += off;
      return f(t, h0);
    }
    return f(tan, h0 + off);
  };
  return (-at(2.0 * step) + 16.0 * at(step) - 30.0 * at(0.0) + 16.0 * at(-step) -
          at(-2.0 * step)) /
         (12.0 * step * step);
}

}  // namespace

TEST_CASE("parameter validation names the violated bound") {
  ProblemParams p = ProblemParams::defaults(5, 2.0);
  CHECK_NOTHROW(p.validate());
  p.tau = 0.5;  // >= 1/(2(N-2)) = 1/6
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("tau"), InvalidParams);
  p = ProblemParams::defaults(5, 2.0);
  p.m = 3.5;  // >= N-2
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("m ="), InvalidParams);
  p = ProblemParams::defaults(5, 2.0);
  p.sigma = 0.5;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("sigma"), InvalidParams);
  CHECK(ProblemParams::defaults(5, 2.0).two_sharp() == doctest::Approx(8.0 / 3.0));
}

TEST_CASE("bubble point values") {
  const ProblemParams params = ProblemParams::defaults(5, 2.0);
  const SpikeConfig c = build_spikes(params, 1, 1.0, 1.0);
  const double c32 = std::pow(3.0, 1.5);
  CHECK(bubble_value(5, 1.0, c.spike(0), c.spike(0), 0.0) == doctest::Approx(c32));
  std::vector<double> p(c.spike(0).begin(), c.spike(0).end());
  p[1] += 1.0;
  CHECK(bubble_value(5, 1.0, c.spike(0), p, 0.0) ==
        doctest::Approx(c32 / std::pow(2.0, 1.5)));
}

TEST_CASE("bubbles are harmonic in the half space") {
  const BubbleField b{{0.4, -0.3, 0.0, 0.2}, 1.3, 5};
  const auto f = [&](std::span<const double> t, double h) { return bubble_eval(b, t, h); };
  CounterRng rng(41, 0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> tan = random_tangential(rng, 2.0);
    const double h0 = 0.2 + 2.0 * rng.next_double();
    double lap = 0.0, scale = 0.0;
    for (int axis = 0; axis < 5; ++axis) {
      const double d2 = second_derivative(f, tan, h0, axis, 1e-3);
      lap += d2;
      scale += std::abs(d2);
    }
    CHECK(std::abs(lap) / scale < 1e-4);
  }
}

TEST_CASE("boundary flux identity dU/dnu = U^{2#-1}") {
  const BubbleField b{{0.0, 0.5, -0.1, 0.0}, 0.8, 5};
  CounterRng rng(43, 1);
  const double q = 2.0 * 4.0 / 3.0 - 1.0;  // 2# - 1 for N = 5
  for (int t = 0; t < 40; ++t) {
    std::vector<double> tan = random_tangential(rng, 3.0);
    const double h = 1e-5;
    const double dnu = -(bubble_eval(b, tan, h) - bubble_eval(b, tan, 0.0)) / h;
    // one-sided at the wall; refine with the half step
    const double dnu2 = -(bubble_eval(b, tan, 0.5 * h) - bubble_eval(b, tan, 0.0)) / (0.5 * h);
    const double flux = 2.0 * dnu2 - dnu;
    const double rhs = std::pow(bubble_eval(b, tan, 0.0), q);
    CHECK(flux == doctest::Approx(rhs).epsilon(1e-6));
  }
}

TEST_CASE("ansatz symmetries and reduction to one bubble") {
  const ProblemParams params = ProblemParams::defaults(5, 2.0);
  const SpikeConfig c1 = build_spikes(params, 1, 1.0, 1.2);
  CounterRng rng(47, 2);
  for (int t = 0; t < 20; ++t) {
    const auto tan = random_tangential(rng, 2.0);
    const double h = rng.next_double();
    CHECK(ansatz_eval(c1, tan, h) ==
          bubble_value(5, 1.2, c1.spike(0), tan, h));
  }
  const SpikeConfig c6 = build_spikes(params, 6, 2.0, 0.9);
  for (int t = 0; t < 30; ++t) {
    const auto tan = random_tangential(rng, 4.0);
    const double h = rng.next_double();
    const double v = ansatz_eval(c6, tan, h);
    const auto rot = rotate_qk(tan, 6);
    CHECK(ansatz_eval(c6, rot, h) == doctest::Approx(v).epsilon(1e-12));
    std::vector<double> refl = {tan[0], -tan[1], -tan[2], -tan[3]};
    CHECK(ansatz_eval(c6, refl, h) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("Z kernels match their closed forms at the center") {
  const ProblemParams params = ProblemParams::defaults(5, 2.0);
  const SpikeConfig c = build_spikes(params, 3, 2.0, 1.0);
  const double c32 = std::pow(3.0, 1.5);
  // dU/dLambda at the center: (N-2)/(2 Lambda) * U
  CHECK(kernel_Z(c, 0, 2, c.spike(0), 0.0) == doctest::Approx(1.5 * c32));
  // dU/dr vanishes at the center
  CHECK(kernel_Z(c, 0, 1, c.spike(0), 0.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(kernel_Z(c, 0, 3, c.spike(0), 0.0), InvalidParams);
}

TEST_CASE("Z kernels agree with finite differences of the bubble family") {
  const ProblemParams params = ProblemParams::defaults(5, 2.0);
  CounterRng rng(53, 3);
  const double h = 1e-5;
  for (int t = 0; t < 100; ++t) {
    const double r = 1.0 + 2.0 * rng.next_double();
    const double lam = 0.5 + rng.next_double();
    const int k = 2 + static_cast<int>(3 * rng.next_double());
    const int idx = static_cast<int>(k * rng.next_double()) % k;
    const SpikeConfig c = build_spikes(params, k, r, lam);
    const auto tan = random_tangential(rng, 4.0);

    const SpikeConfig cp = build_spikes(params, k, r + h, lam);
    const SpikeConfig cm = build_spikes(params, k, r - h, lam);
    const double fd_r = (bubble_value(5, lam, cp.spike(idx), tan, 0.0) -
                         bubble_value(5, lam, cm.spike(idx), tan, 0.0)) /
                        (2.0 * h);
    const double z1 = kernel_Z(c, idx, 1, tan, 0.0);
    CHECK(z1 == doctest::Approx(fd_r).epsilon(1e-6));

    const double fd_l = (bubble_value(5, lam + h, c.spike(idx), tan, 0.0) -
                         bubble_value(5, lam - h, c.spike(idx), tan, 0.0)) /
                        (2.0 * h);
    const double z2 = kernel_Z(c, idx, 2, tan, 0.0);
    CHECK(z2 == doctest::Approx(fd_l).epsilon(1e-6));
  }
}

TEST_CASE("linearized boundary identity for the kernels") {
  // -dZ/dy_N at the wall equals (2#-1) U^{2#-2} Z for both kernels.
  const ProblemParams params = ProblemParams::defaults(5, 2.0);
  const SpikeConfig c = build_spikes(params, 2, 1.5, 1.1);
  CounterRng rng(59, 4);
  const double q = params.two_sharp();
  for (int t = 0; t < 40; ++t) {
    const auto tan = random_tangential(rng, 3.0);
    for (int j = 1; j <= 2; ++j) {
      const double h = 1e-5;
      const double d1 = -(kernel_Z(c, 0, j, tan, h) - kernel_Z(c, 0, j, tan, 0.0)) / h;
      const double d2 =
          -(kernel_Z(c, 0, j, tan, 0.5 * h) - kernel_Z(c, 0, j, tan, 0.0)) / (0.5 * h);
      const double lhs = 2.0 * d2 - d1;
      const double u = bubble_value(5, 1.1, c.spike(0), tan, 0.0);
      const double rhs = (q - 1.0) * std::pow(u, q - 2.0) * kernel_Z(c, 0, j, tan, 0.0);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6).scale(std::abs(u)));
    }
  }
}

TEST_CASE("K profiles") {
  const ProblemParams params = ProblemParams::defaults(5, 2.0);
  const KProfile lm = KProfile::local_max(params);
  CHECK(lm.eval(params.r0) == 1.0);
  CHECK(lm.eval(params.r0 + 0.1) == doctest::Approx(0.99));
  CHECK(lm.eval(params.r0 + 10.0) == doctest::Approx(1.0 - params.c0 * std::pow(params.delta, params.m)));
  const KProfile cst = KProfile::constant(1.0);
  CHECK(cst.eval(17.0) == 1.0);
  CHECK(cst.deriv(17.0) == 0.0);
  const KProfile mono = KProfile::monotone(0.5);
  CHECK(mono.eval(0.0) == 1.0);
  CHECK(mono.deriv(2.0) < 0.0);
  for (double r : {0.0, 0.3, 1.0, 5.0, 100.0}) {
    CHECK(lm.eval(r) > 0.0);
    CHECK(mono.eval(r) > 0.0);
  }
}

TEST_CASE("residual vanishes for one bubble with constant curvature") {
  const ProblemParams params = ProblemParams::defaults(5, 2.0);
  const SpikeConfig c = build_spikes(params, 1, 1.0, 1.0);
  const KProfile one = KProfile::constant(1.0);
  CounterRng rng(61, 5);
  for (int t = 0; t < 50; ++t) {
    const auto tan = random_tangential(rng, 5.0);
    CHECK(std::abs(residual_eval(c, one, tan)) < 1e-12);
  }
}

TEST_CASE("residual sign at the midpoint and decay along a ray") {
  const ProblemParams params = ProblemParams::defaults(5, 2.0);
  const SpikeConfig c = build_spikes(params, 2, 1.0, 1.0);
  const KProfile one = KProfile::constant(1.0);
  // midpoint of the two spikes: superadditivity of t^{2#-1} makes R negative
  const std::vector<double> mid = {0.0, 0.0, 0.0, 0.0};
  CHECK(residual_eval(c, one, mid) < 0.0);

  // decay along a ray beyond the spike radius, monotone
  std::vector<double> ray = {2.0, 0.7, 0.0, 0.0};
  double prev = std::abs(residual_eval(c, one, ray));
  for (double s = 3.0; s < 40.0; s *= 1.5) {
    ray[0] = s;
    ray[1] = 0.35 * s;
    const double cur = std::abs(residual_eval(c, one, ray));
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("nonlinearity: zero at zero, superlinear smallness, scaling bound") {
  const ProblemParams params = ProblemParams::defaults(5, 2.0);
  const SpikeConfig c = build_spikes(params, 2, 1.0, 1.0);
  const KProfile prof = KProfile::local_max(params);
  const std::vector<double> p = {0.4, 0.2, 0.1, 0.0};
  CHECK(nonlinearity_eval(c, prof, p, 0.0) == 0.0);
  const double q = params.two_sharp() - 1.0;
  double bound = 0.0;
  for (double t = 1e-1; t >= 1e-6; t /= 10.0) {
    const double v = std::abs(nonlinearity_eval(c, prof, p, t));
    bound = std::max(bound, v / std::pow(t, q));
    CHECK(v / t < 1.0);  // first-order cancellation
  }
  CHECK(bound < 10.0);
  // ratio |N(phi)|/|phi| tends to zero
  const double r1 = std::abs(nonlinearity_eval(c, prof, p, 1e-2)) / 1e-2;
  const double r2 = std::abs(nonlinearity_eval(c, prof, p, 1e-4)) / 1e-4;
  CHECK(r2 < r1);
}

TEST_CASE("weighted norms: identities on constructed samples") {
  const ProblemParams params = ProblemParams::defaults(5, 2.0);
  const SpikeConfig c = build_spikes(params, 4, 2.0, 1.0);
  CounterRng rng(67, 6);
  std::vector<NormSample> samples;
  const double estar = norm_star_exponent(params);
  for (int t = 0; t < 60; ++t) {
    NormSample s;
    s.tangential = random_tangential(rng, 6.0);
    s.height = t % 3 == 0 ? rng.next_double() : 0.0;
    s.value = spike_weight_sum(c, s.tangential, s.height, estar);
    samples.push_back(s);
  }
  // phi == weight function itself gives norm 1
  CHECK(norm_star(c, params, samples) == doctest::Approx(1.0).epsilon(1e-13));
  // zero function
  std::vector<NormSample> zero = samples;
  for (auto& s : zero) s.value = 0.0;
  CHECK(norm_star(c, params, zero) == 0.0);
  // positive homogeneity
  std::vector<NormSample> doubled = samples;
  for (auto& s : doubled) s.value *= 2.0;
  CHECK(norm_star(c, params, doubled) == doctest::Approx(2.0).epsilon(1e-13));
  // subadditivity on a shared sample set
  std::vector<NormSample> sum = samples;
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i].value += doubled[i].value;
  CHECK(norm_star(c, params, sum) <=
        norm_star(c, params, samples) + norm_star(c, params, doubled) + 1e-12);

  // the ** variant with boundary samples
  std::vector<NormSample> bd = samples;
  const double edstar = norm_dstar_exponent(params);
  for (auto& s : bd) {
    s.height = 0.0;
    s.value = spike_weight_sum(c, s.tangential, 0.0, edstar);
  }
  CHECK(norm_dstar(c, params, bd) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(norm_star(c, params, std::span<const NormSample>{}), EmptySamples);
}
