#pragma once
// Electromagnetic problem definitions.
//
// A FieldModel describes B(x) = b0 / epsilon + b1(x) together with the vector
// potential A(x) = hat(b0) x / (2 epsilon) + a1(x), an electric field
// F = -grad U, and (optionally) the skew generator S of a rotational symmetry.

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "fvi/linalg3.hpp"

namespace fvi {

using VectorField = std::function<Vec3(const Vec3&)>;
using MatrixField = std::function<Mat3(const Vec3&)>;
using ScalarField = std::function<double(const Vec3&)>;

struct FieldModel {
    std::string label;
    double epsilon = 1.0;
    Vec3 b0{0.0, 0.0, 1.0};

    VectorField b1;
    VectorField a1;
    /// Jacobian of a1, entries d_j a1_i. Optional; a central-difference
    /// fallback is used when empty.
    MatrixField a1_jac;
    ScalarField u;
    VectorField f;
    std::optional<Mat3> s_matrix;

    // Built-in problems also carry their experiment setup.
    Vec3 x0{};
    Vec3 v0{};
    double t_end = 1.0;
};

/// Throws InvalidArgument if the model violates its structural invariants
/// (epsilon > 0, |b0| = 1, skew S, callables present).
void validate_model(const FieldModel& model);

/// A(x) = hat(b0) x / (2 eps) + a1(x).
Vec3 total_potential(const FieldModel& model, const Vec3& x);

/// A'(x) = hat(b0) / (2 eps) + a1'(x).
Mat3 total_potential_jacobian(const FieldModel& model, const Vec3& x);

/// B(x) = b0 / eps + b1(x).
Vec3 total_field(const FieldModel& model, const Vec3& x);

/// a1'(x), analytic when supplied, otherwise central differences with
/// step 1e-6 * (1 + |x|) (roughly 1e-10 relative accuracy).
Mat3 potential_jacobian(const FieldModel& model, const Vec3& x);

/// Moderate field with rotational invariance: B = (0, 0, sqrt(x1^2 + x2^2)).
FieldModel problem1();

/// Moderate field without the invariance conditions.
FieldModel problem2();

/// Strong field, A1 = x1 x2 x3 (1, 1, 1), U = |x|^2 / 2.
FieldModel problem3(double epsilon);

/// Maximal-ordering field B(x) = Bhat(eps x) / eps split around the initial
/// position. The returned model's epsilon is the effective parameter
/// eps / |Bhat(eps x0)| so that b0 stays a unit vector.
FieldModel problem4(double epsilon);

/// Looks up "p1".."p4". epsilon is ignored for p1 and p2.
FieldModel problem_by_label(std::string_view label, double epsilon);

bool is_builtin_problem(std::string_view label);

}  // namespace fvi
