#pragma once
// Filter functions and the per-step-size matrices Psi, Phi and the resolvent M.

#include <vector>

#include "fvi/linalg3.hpp"

namespace fvi {

/// tan(z) / z, continued by 1 at z = 0. Throws ResonanceError within 1e-8 of
/// an odd multiple of pi/2.
double tanc(double z);

/// sin(z) / z, continued by 1 at z = 0.
double sinc(double z);

/// tanh(z) / z, continued by 1 at z = 0.
double tanch(double z);

/// z / sinh(z), continued by 1 at z = 0.
double sinch_inv(double z);

/// Step-size constants of the filtered scheme for a fixed (h, eps, b0).
///
///   psi       = I + (1 - tanc(h/2eps)) hat(b0)^2
///   phi       = I + (1 - 1/sinc(h/2eps)) hat(b0)^2
///   resolvent = (I + (h/2eps) psi hat(b0))^-1
///
/// hat(b0)^2 = b0 b0^T - I is minus the perpendicular projector, so both
/// filters act as the identity along b0 and as a scalar on the plane
/// orthogonal to it.
struct FilterPack {
    double h = 0.0;
    double epsilon = 0.0;
    Vec3 b0{};
    Mat3 b0_hat{};
    Mat3 psi{};
    Mat3 phi{};
    Mat3 resolvent{};
};

/// Builds the filter pack. A negative h yields the time-reversed scheme.
/// Throws InvalidArgument for h == 0, eps <= 0 or |b0| != 1, and
/// ResonanceError when h/(2 eps) sits on a pole of tan.
FilterPack build_filters(double h, double epsilon, const Vec3& b0);

struct ResonanceViolation {
    int k = 0;
    double sin_value = 0.0;
    double cos_value = 0.0;
};

/// Lists every k in 1..n_max where |sin(k h / 2eps)| < c or |cos(k h / 2eps)| < c.
std::vector<ResonanceViolation> check_resonance(double h, double epsilon, int n_max, double c);

}  // namespace fvi
