#include "fvi/linalg3.hpp"

#include <ostream>

#include "fvi/errors.hpp"

namespace fvi {

double max_abs(const Mat3& m) {
    double out = 0.0;
    for (double e : m.a) out = std::fmax(out, std::fabs(e));
    return out;
}

double inf_norm(const Mat3& m) {
    double out = 0.0;
    for (int i = 0; i < 3; ++i)
        out = std::fmax(out, std::fabs(m(i, 0)) + std::fabs(m(i, 1)) + std::fabs(m(i, 2)));
    return out;
}

bool is_finite(const Mat3& m) {
    for (double e : m.a)
        if (!std::isfinite(e)) return false;
    return true;
}

Mat3 inverse3(const Mat3& m) {
    // cofactors, laid out already transposed (adjugate)
    Mat3 adj;
    adj(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    adj(0, 1) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
    adj(0, 2) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
    adj(1, 0) = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
    adj(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
    adj(1, 2) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
    adj(2, 0) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
    adj(2, 1) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
    adj(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);

    const double det = m(0, 0) * adj(0, 0) + m(0, 1) * adj(1, 0) + m(0, 2) * adj(2, 0);
    const double scale = max_abs(m);
    if (!std::isfinite(det) || std::fabs(det) < 1e-300 * scale * scale * scale || det == 0.0)
        throw SingularMatrixError("inverse3: matrix is singular");
    return adj * (1.0 / det);
}

std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
}

std::ostream& operator<<(std::ostream& os, const Mat3& m) {
    return os << '[' << m.row(0) << ", " << m.row(1) << ", " << m.row(2) << ']';
}

}  // namespace fvi
