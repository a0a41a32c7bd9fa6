#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bubblered/errors.hpp"

namespace bubblered {

// Fixed exponents and constants of the flatness assumption and the weighted
// norms. N is the ambient dimension, m the flatness order of K at r0.
struct ProblemParams {
  int N = 5;
  double m = 2.0;
  double c0 = 1.0;
  double r0 = 1.0;
  double theta = 1.0;
  double delta = 0.5;
  double tau = 0.1;
  double sigma = 0.3;

  // 2# = 2(N-1)/(N-2), the critical trace exponent.
  double two_sharp() const { return 2.0 * (N - 1) / (N - 2.0); }
  // mu = k^{(N-2)/(N-2-m)}.
  double mu_of_k(int k) const;
  // Throws InvalidParams naming the violated bound.
  void validate() const;
  // Largest admissible sigma for the current (N, m, tau).
  double sigma_bound() const { return (m / (N - 2.0)) * (m / (N - 2.0) - tau); }

  static ProblemParams defaults(int N = 5, double m = 2.0);
};

// Radial curvature profile K(r), positive and bounded on [0, infinity).
class KProfile {
 public:
  enum class Kind { Constant, LocalMax, Monotone };

  static KProfile constant(double value);
  // K(r) = 1 - c0 |r - r0|^m on |r - r0| <= delta, continued by the constant
  // value 1 - c0 delta^m (clamped below at 0.1) outside.
  static KProfile local_max(const ProblemParams& params);
  // K(r) = 1 - slope * r/(1+r); strictly monotone for slope != 0, positive
  // for slope < 1.
  static KProfile monotone(double slope);

  double eval(double r) const;
  double deriv(double r) const;
  Kind kind() const { return kind_; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::Constant;
  double value_ = 1.0;   // Constant
  double slope_ = 0.0;   // Monotone
  double c0_ = 1.0, r0_ = 1.0, m_ = 2.0, delta_ = 0.5, floor_ = 1.0;  // LocalMax
};

// One bubble: boundary center and concentration parameter.
struct BubbleField {
  std::vector<double> center;  // in R^{N-1}
  double lambda = 1.0;
  int N = 5;
};

// k bubbles on a regular k-gon of radius r, all with the same Lambda.
struct SpikeConfig {
  ProblemParams params;
  int k = 2;
  double r = 1.0;
  double lambda = 1.0;
  double mu = 1.0;
  std::vector<double> spikes;  // k x (N-1), row-major

  int boundary_dim() const { return params.N - 1; }
  std::span<const double> spike(int i) const {
    return {spikes.data() + static_cast<std::size_t>(i) * boundary_dim(),
            static_cast<std::size_t>(boundary_dim())};
  }
};

// --- pointwise evaluators -------------------------------------------------
// All take tangential coordinates plus height; on the boundary pass height 0.

double bubble_value(int N, double lambda, std::span<const double> center,
                    std::span<const double> tangential, double height);

double bubble_eval(const BubbleField& b, std::span<const double> tangential, double height);

double ansatz_eval(const SpikeConfig& config, std::span<const double> tangential,
                   double height);

// Z_{i,1} = dU_{x_i,Lambda}/dr, Z_{i,2} = dU_{x_i,Lambda}/dLambda.
double kernel_Z(const SpikeConfig& config, int spike_index, int j,
                std::span<const double> tangential, double height);

double K_eval(const KProfile& profile, double radius);

// R = dW/dnu - K(|y|/mu) W^{2#-1} on the boundary, using that each bubble has
// exact boundary flux U^{2#-1}.
double residual_eval(const SpikeConfig& config, const KProfile& profile,
                     std::span<const double> tangential);

// N(phi) = K [ (W+phi)^{2#-1} - W^{2#-1} - (2#-1) W^{2#-2} phi ]; powers of a
// negative base are taken sign-preserving on the absolute value.
double nonlinearity_eval(const SpikeConfig& config, const KProfile& profile,
                         std::span<const double> tangential, double phi_value);

// Sign-preserving power: sign(s)|s|^p.
inline double signed_pow(double s, double p) {
  if (s == 0.0) return 0.0;
  return s > 0.0 ? std::pow(s, p) : -std::pow(-s, p);
}

// --- weighted norms --------------------------------------------------------

struct NormSample {
  std::vector<double> tangential;
  double height = 0.0;
  double value = 0.0;
};

// Sum over spikes of (1 + |y - x_j|)^{-e}.
double spike_weight_sum(const SpikeConfig& config, std::span<const double> tangential,
                        double height, double exponent);

double norm_star_exponent(const ProblemParams& params);
double norm_dstar_exponent(const ProblemParams& params);

// Sampled sup of |value| / weight; a lower bound for the true sup.
double norm_star(const SpikeConfig& config, const ProblemParams& params,
                 std::span<const NormSample> samples);
double norm_dstar(const SpikeConfig& config, const ProblemParams& params,
                  std::span<const NormSample> samples);

}  // namespace bubblered
