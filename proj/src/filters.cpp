#include "fvi/filters.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fvi/errors.hpp"

namespace fvi {

namespace {

constexpr double kSeriesThreshold = 1e-4;
constexpr double kPoleMargin = 1e-8;

}  // namespace

double tanc(double z) {
    const double az = std::fabs(z);
    if (az < kSeriesThreshold) {
        const double z2 = z * z;
        return 1.0 + z2 / 3.0 + 2.0 * z2 * z2 / 15.0;
    }
    // distance to the nearest odd multiple of pi/2
    const double k = std::round(az / std::numbers::pi - 0.5);
    const double pole = (k + 0.5) * std::numbers::pi;
    if (std::fabs(az - pole) < kPoleMargin) {
        std::ostringstream msg;
        msg << "tanc: argument " << z << " is within " << kPoleMargin
            << " of a pole of tan (resonant step size)";
        throw ResonanceError(msg.str());
    }
    return std::tan(z) / z;
}

double sinc(double z) {
    if (std::fabs(z) < kSeriesThreshold) {
        const double z2 = z * z;
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
    }
    return std::sin(z) / z;
}

double tanch(double z) {
    if (std::fabs(z) < kSeriesThreshold) {
        const double z2 = z * z;
        return 1.0 - z2 / 3.0 + 2.0 * z2 * z2 / 15.0;
    }
    return std::tanh(z) / z;
}

double sinch_inv(double z) {
    if (std::fabs(z) < kSeriesThreshold) {
        const double z2 = z * z;
        return 1.0 - z2 / 6.0 + 7.0 * z2 * z2 / 360.0;
    }
    return z / std::sinh(z);
}

FilterPack build_filters(double h, double epsilon, const Vec3& b0) {
    if (h == 0.0 || !std::isfinite(h)) throw InvalidArgument("build_filters: h must be nonzero and finite");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw InvalidArgument("build_filters: epsilon must be positive");
    if (std::fabs(norm(b0) - 1.0) > 1e-12) throw InvalidArgument("build_filters: |b0| must equal 1");

    const double z = h / (2.0 * epsilon);
    const double s = sinc(z);
    if (s == 0.0) throw ResonanceError("build_filters: sin(h/2eps) vanishes, phi filter is undefined");

    FilterPack pack;
    pack.h = h;
    pack.epsilon = epsilon;
    pack.b0 = b0;
    pack.b0_hat = hat(b0);
    const Mat3 b0_hat_sq = pack.b0_hat * pack.b0_hat;
    pack.psi = Mat3::identity() + (1.0 - tanc(z)) * b0_hat_sq;
    pack.phi = Mat3::identity() + (1.0 - 1.0 / s) * b0_hat_sq;
    pack.resolvent = inverse3(Mat3::identity() + z * (pack.psi * pack.b0_hat));
    return pack;
}

std::vector<ResonanceViolation> check_resonance(double h, double epsilon, int n_max, double c) {
    if (n_max < 1) throw InvalidArgument("check_resonance: n_max must be >= 1");
    if (!(c > 0.0 && c < 1.0)) throw InvalidArgument("check_resonance: c must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw InvalidArgument("check_resonance: epsilon must be positive");

    std::vector<ResonanceViolation> out;
    const double z = h / (2.0 * epsilon);
    for (int k = 1; k <= n_max; ++k) {
        const double arg = k * z;
        const double s = std::sin(arg);
        const double co = std::cos(arg);
        if (std::fabs(s) < c || std::fabs(co) < c) out.push_back({k, s, co});
    }
    return out;
}

}  // namespace fvi
