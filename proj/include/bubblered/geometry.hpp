#pragma once

#include <span>
#include <vector>

#include "bubblered/bubbles.hpp"
#include "bubblered/errors.hpp"

namespace bubblered {

// Point in the closed unit ball of R^N.
struct BallPoint {
  std::vector<double> coords;

  explicit BallPoint(std::vector<double> c);
  int dim() const { return static_cast<int>(coords.size()); }
};

// Point in the closed upper half space: tangential part in R^{N-1}, height
// the last coordinate.
struct HalfSpacePoint {
  std::vector<double> tangential;
  double height = 0.0;

  HalfSpacePoint() = default;
  HalfSpacePoint(std::vector<double> tan, double h);
  int dim() const { return static_cast<int>(tangential.size()) + 1; }
};

// Stereographic projection from the ball to the half space. The south pole
// (0,...,0,-1) is the excluded point.
HalfSpacePoint to_halfspace(const BallPoint& p);

// Inverse of to_halfspace.
BallPoint to_ball(const HalfSpacePoint& q);

// Value of the conformally transferred function at the image of p, given the
// value of the ball-side function at p.
double conformal_transfer(double u_ball_value, const BallPoint& p, int N);

// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

// Surface measure of the unit sphere S^{n-1} in R^n.
double unit_sphere_area(int n);

// Neumann Green's function of the half space: reflection sum of the free
// space kernel, normalized by 1/(omega_N (N-2)).
double greens_function(const HalfSpacePoint& x, const HalfSpacePoint& y);

// k spikes on the circle of radius r in the first two tangential coordinates.
SpikeConfig build_spikes(const ProblemParams& params, int k, double r, double lambda);

// Index j in {1,...,k} of the sector Omega_j containing p. Ties go to the
// smaller index; directions with vanishing first-two-coordinate projection
// throw DegenerateDirection (callers treat those as sector 1).
int sector_of(const HalfSpacePoint& p, int k);
int sector_of_tangential(std::span<const double> tangential, int k);

// Applies the rotation Q_k (angle 2*pi/k in the first two coordinates) to a
// tangential point.
std::vector<double> rotate_qk(std::span<const double> tangential, int k, int times = 1);

}  // namespace bubblered
