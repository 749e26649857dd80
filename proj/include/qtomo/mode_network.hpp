#pragma once

// The six measurement modes. Modes 1 and 2 are the physical modes a, b; modes
// 3-6 are c = (a+b)/sqrt2, d = (a-b)/sqrt2, e = (a+ib)/sqrt2, f = (a-ib)/sqrt2.
//
// Derived-mode forms keep the global factor 1/2 of the homodyne quadratures,
// so [X_k(0), X_k(pi/2)] = i/2 for k >= 3. canonical_scale(k) restores a
// canonical pair ([Q, P] = i) when one-mode inequalities are evaluated.

#include <array>

#include "json.hpp"
#include "qtomo/common.hpp"

namespace qtomo {

inline constexpr int kModeCount = 6;

struct QuadratureForm {
    Vec4 coeffs = Vec4::Zero();  // over (Q1, P1, Q2, P2)
    int mode = 1;
    double mu = 1.0;
    double nu = 0.0;

    double apply(const Vec4& x) const { return coeffs.dot(x); }
};

void check_mode(int mode);

QuadratureForm symplectic_form(int mode, double mu, double nu);
QuadratureForm quadrature_form(int mode, double theta);

/// 1 for modes 1, 2 and sqrt(2) for modes 3-6.
double canonical_scale(int mode);

/// Commutator constant c with [v.x, w.x] = i c.
double commutator(const Vec4& v, const Vec4& w);

struct PhaseSet {
    double theta3 = kPi / 4;
    double theta4 = kPi / 2;
    double theta5 = 0.0;
    double theta6 = kPi / 4;
};

nlohmann::json to_json(const PhaseSet& phases);
PhaseSet phase_set_from_json(const nlohmann::json& j);

/// Maps (P1, P2, Q1, Q2) to (X3, X4, X5, X6) at the given phases.
struct SMatrix {
    Eigen::Matrix4d entries = Eigen::Matrix4d::Zero();
    PhaseSet phases;
    double determinant = 0.0;
    /// |det| divided by the product of row norms; 0 for singular, 1 for orthogonal rows.
    double hadamard_ratio = 0.0;
    double condition_number = 0.0;
};

inline constexpr double kSingularTolerance = 1e-10;

SMatrix build_s_matrix(const PhaseSet& phases);
SMatrix build_s_matrix(double theta3, double theta4, double theta5, double theta6);

/// Throws SingularConfiguration naming the phases when the rows are degenerate.
Mat4 invert_s(const SMatrix& s);

/// Mean of (P1, P2, Q1, Q2) from the means of X3..X6 at the phases of s.
Vec4 means_from_derived(const SMatrix& s, const Vec4& derived_means);

}  // namespace qtomo
