#include "fvi/fields.hpp"

#include <cmath>
#include <numbers>

#include "fvi/errors.hpp"

namespace fvi {

namespace {

constexpr Mat3 kRotationGeneratorE3{{0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0}};

Mat3 central_difference_jacobian(const VectorField& g, const Vec3& x) {
    const double step = 1e-6 * (1.0 + norm(x));
    Mat3 jac;
    for (int j = 0; j < 3; ++j) {
        Vec3 xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        const Vec3 d = (g(xp) - g(xm)) / (2.0 * step);
        jac(0, j) = d.x;
        jac(1, j) = d.y;
        jac(2, j) = d.z;
    }
    return jac;
}

double planar_radius_checked(const Vec3& x) {
    const double r2 = x.x * x.x + x.y * x.y;
    if (r2 < 1e-12)
        throw DomainError("problem p1: potential is singular on the x3-axis");
    return std::sqrt(r2);
}

}  // namespace

void validate_model(const FieldModel& model) {
    if (!(model.epsilon > 0.0) || !std::isfinite(model.epsilon))
        throw InvalidArgument("field model: epsilon must be positive and finite");
    if (!is_finite(model.b0) || std::fabs(norm(model.b0) - 1.0) > 1e-12)
        throw InvalidArgument("field model: |b0| must equal 1");
    if (!model.b1 || !model.a1 || !model.u || !model.f)
        throw InvalidArgument("field model: b1, a1, u and f are required");
    if (model.s_matrix && max_abs(*model.s_matrix + transpose(*model.s_matrix)) > 1e-14)
        throw InvalidArgument("field model: S must be skew-symmetric");
}

Vec3 total_potential(const FieldModel& model, const Vec3& x) {
    return (0.5 / model.epsilon) * cross(model.b0, x) + model.a1(x);
}

Mat3 potential_jacobian(const FieldModel& model, const Vec3& x) {
    if (model.a1_jac) return model.a1_jac(x);
    return central_difference_jacobian(model.a1, x);
}

Mat3 total_potential_jacobian(const FieldModel& model, const Vec3& x) {
    return (0.5 / model.epsilon) * hat(model.b0) + potential_jacobian(model, x);
}

Vec3 total_field(const FieldModel& model, const Vec3& x) {
    return model.b0 / model.epsilon + model.b1(x);
}

FieldModel problem1() {
    // A = (-x2 r/3, x1 r/3, 0). With b0 = e3 the constant-field part
    // (-x2/2, x1/2, 0) is split off, leaving a1 = (-x2 g, x1 g, 0), g = r/3 - 1/2.
    FieldModel m;
    m.label = "p1";
    m.epsilon = 1.0;
    m.b0 = {0.0, 0.0, 1.0};
    m.b1 = [](const Vec3& x) {
        return Vec3{0.0, 0.0, std::sqrt(x.x * x.x + x.y * x.y) - 1.0};
    };
    m.a1 = [](const Vec3& x) {
        const double g = std::sqrt(x.x * x.x + x.y * x.y) / 3.0 - 0.5;
        return Vec3{-x.y * g, x.x * g, 0.0};
    };
    m.a1_jac = [](const Vec3& x) {
        const double r = std::sqrt(x.x * x.x + x.y * x.y);
        const double g = r / 3.0 - 0.5;
        // terms x_i x_j / (3r) are bounded and vanish at r = 0
        const double c = r > 0.0 ? 1.0 / (3.0 * r) : 0.0;
        return Mat3{{-x.x * x.y * c, -g - x.y * x.y * c, 0.0,
                     g + x.x * x.x * c, x.x * x.y * c, 0.0,
                     0.0, 0.0, 0.0}};
    };
    m.u = [](const Vec3& x) { return 0.01 / planar_radius_checked(x); };
    m.f = [](const Vec3& x) {
        const double r = planar_radius_checked(x);
        const double c = 0.01 / (r * r * r);
        return Vec3{c * x.x, c * x.y, 0.0};
    };
    m.s_matrix = kRotationGeneratorE3;
    m.x0 = {0.0, 1.0, 0.1};
    m.v0 = {0.09, 0.05, 0.2};
    m.t_end = 1.0;
    return m;
}

FieldModel problem2() {
    // A = (x3^2 - x2^2 - x2, x3^2 - x1^2 + x1, x2^2 - x1^2) / 2; the linear part
    // (-x2, x1, 0)/2 is the constant field e3.
    FieldModel m;
    m.label = "p2";
    m.epsilon = 1.0;
    m.b0 = {0.0, 0.0, 1.0};
    m.b1 = [](const Vec3& x) { return Vec3{x.y - x.z, x.x + x.z, x.y - x.x}; };
    m.a1 = [](const Vec3& x) {
        return 0.5 * Vec3{x.z * x.z - x.y * x.y, x.z * x.z - x.x * x.x, x.y * x.y - x.x * x.x};
    };
    m.a1_jac = [](const Vec3& x) {
        return Mat3{{0.0, -x.y, x.z,
                     -x.x, 0.0, x.z,
                     -x.x, x.y, 0.0}};
    };
    m.u = [](const Vec3& x) { return x.x * x.x + 2.0 * x.y * x.y + 3.0 * x.z * x.z - x.x; };
    m.f = [](const Vec3& x) { return Vec3{1.0 - 2.0 * x.x, -4.0 * x.y, -6.0 * x.z}; };
    m.s_matrix = kRotationGeneratorE3;
    m.x0 = {0.0, 0.1, 0.5};
    m.v0 = {0.02, 0.1, 0.7};
    m.t_end = 1.0;
    return m;
}

FieldModel problem3(double epsilon) {
    if (!(epsilon > 0.0)) throw InvalidArgument("problem p3: epsilon must be positive");
    FieldModel m;
    m.label = "p3";
    m.epsilon = epsilon;
    m.b0 = {0.0, 0.0, 1.0};
    // curl of a1 below
    m.b1 = [](const Vec3& x) {
        return Vec3{x.x * (x.z - x.y), x.y * (x.x - x.z), x.z * (x.y - x.x)};
    };
    m.a1 = [](const Vec3& x) {
        const double p = x.x * x.y * x.z;
        return Vec3{p, p, p};
    };
    m.a1_jac = [](const Vec3& x) {
        const Vec3 grad{x.y * x.z, x.x * x.z, x.x * x.y};
        return Mat3::rows(grad, grad, grad);
    };
    m.u = [](const Vec3& x) { return 0.5 * dot(x, x); };
    m.f = [](const Vec3& x) { return -x; };
    m.x0 = {0.3, 0.2, -1.4};
    m.v0 = {-0.7, 0.08, 0.2};
    m.t_end = std::numbers::pi / 2.0;
    return m;
}

FieldModel problem4(double epsilon) {
    if (!(epsilon > 0.0)) throw InvalidArgument("problem p4: epsilon must be positive");
    // Bhat(y) = (1, 1, 0) + (y2, -y1, 0) / sqrt(1 + |y|^2), B(x) = Bhat(eps x) / eps.
    // Writing g(x) = 1 / sqrt(1 + eps^2 |x|^2):
    //   B(x) = (1, 1, 0) / eps + (x2, -x1, 0) g(x)
    //   curl (0, 0, a) = (x2, -x1, 0) g  for  a = (sqrt(1 + eps^2 |x|^2) - 1) / eps^2
    // The constant part Bhat(eps x0) / eps goes into b0 / eps_eff; the remainder
    // b1(x) = (x2, -x1, 0) g(x) - c with c = (x0_2, -x0_1, 0) g(x0) stays O(1).
    FieldModel m;
    m.label = "p4";
    m.x0 = {0.1, 0.03, -0.04};
    m.v0 = {-0.2, 0.01, 0.7};
    m.t_end = std::numbers::pi / 2.0;

    const double e2 = epsilon * epsilon;
    auto g = [e2](const Vec3& x) { return 1.0 / std::sqrt(1.0 + e2 * dot(x, x)); };
    const Vec3 x0 = m.x0;
    const Vec3 c = g(x0) * Vec3{x0.y, -x0.x, 0.0};
    const Vec3 strong = Vec3{1.0, 1.0, 0.0} + epsilon * c;  // Bhat(eps x0)
    const double strength = norm(strong);

    m.epsilon = epsilon / strength;
    m.b0 = strong / strength;
    m.b1 = [g, c](const Vec3& x) { return g(x) * Vec3{x.y, -x.x, 0.0} - c; };
    m.a1 = [e2, c](const Vec3& x) {
        const double s = dot(x, x);
        const double a = s / (std::sqrt(1.0 + e2 * s) + 1.0);
        return Vec3{0.0, 0.0, a} - 0.5 * cross(c, x);
    };
    m.a1_jac = [g, c](const Vec3& x) {
        Mat3 jac = -0.5 * hat(c);
        const Vec3 grad = g(x) * x;
        jac(2, 0) += grad.x;
        jac(2, 1) += grad.y;
        jac(2, 2) += grad.z;
        return jac;
    };
    m.u = [](const Vec3& x) { return x.x * x.x + 2.0 * x.y * x.y + 3.0 * x.z * x.z - x.x; };
    m.f = [](const Vec3& x) { return Vec3{1.0 - 2.0 * x.x, -4.0 * x.y, -6.0 * x.z}; };
    return m;
}

bool is_builtin_problem(std::string_view label) {
    return label == "p1" || label == "p2" || label == "p3" || label == "p4";
}

FieldModel problem_by_label(std::string_view label, double epsilon) {
    if (label == "p1") return problem1();
    if (label == "p2") return problem2();
    if (label == "p3") return problem3(epsilon);
    if (label == "p4") return problem4(epsilon);
    throw InvalidArgument("unknown problem label '" + std::string(label) + "' (expected p1..p4)");
}

}  // namespace fvi
