#include "qtomo/mode_network.hpp"

#include <sstream>

namespace qtomo {

void check_mode(int mode) {
    if (mode < 1 || mode > kModeCount) throw InvalidArgument("mode must be in 1..6, got " + std::to_string(mode));
}

QuadratureForm symplectic_form(int mode, double mu, double nu) {
    check_mode(mode);
    Vec4 v;
    switch (mode) {
        case 1: v << mu, nu, 0, 0; break;
        case 2: v << 0, 0, mu, nu; break;
        case 3: v << mu, nu, mu, nu; break;
        case 4: v << mu, nu, -mu, -nu; break;
        case 5: v << mu, nu, nu, -mu; break;
        default: v << mu, nu, -nu, mu; break;
    }
    if (mode >= 3) v *= 0.5;
    return {v, mode, mu, nu};
}

QuadratureForm quadrature_form(int mode, double theta) {
    return symplectic_form(mode, std::cos(theta), std::sin(theta));
}

double canonical_scale(int mode) {
    check_mode(mode);
    return mode <= 2 ? 1.0 : std::numbers::sqrt2;
}

double commutator(const Vec4& v, const Vec4& w) {
    // [Q_j, P_j] = i within each mode, cross-mode pairs commute.
    return v[0] * w[1] - v[1] * w[0] + v[2] * w[3] - v[3] * w[2];
}

nlohmann::json to_json(const PhaseSet& p) {
    return {{"theta3", p.theta3}, {"theta4", p.theta4}, {"theta5", p.theta5}, {"theta6", p.theta6}};
}

PhaseSet phase_set_from_json(const nlohmann::json& j) {
    PhaseSet p;
    p.theta3 = j.value("theta3", p.theta3);
    p.theta4 = j.value("theta4", p.theta4);
    p.theta5 = j.value("theta5", p.theta5);
    p.theta6 = j.value("theta6", p.theta6);
    return p;
}

SMatrix build_s_matrix(const PhaseSet& phases) {
    SMatrix s;
    s.phases = phases;
    const std::array<double, 4> thetas{phases.theta3, phases.theta4, phases.theta5, phases.theta6};
    for (int row = 0; row < 4; ++row) {
        Vec4 v = quadrature_form(row + 3, thetas[static_cast<std::size_t>(row)]).coeffs;
        // (Q1, P1, Q2, P2) -> (P1, P2, Q1, Q2)
        s.entries.row(row) << v[1], v[3], v[0], v[2];
    }
    s.determinant = s.entries.determinant();
    double norms = 1.0;
    for (int row = 0; row < 4; ++row) norms *= s.entries.row(row).norm();
    s.hadamard_ratio = norms > 0 ? std::fabs(s.determinant) / norms : 0.0;
    Eigen::JacobiSVD<Mat4> svd(s.entries);
    const auto& sv = svd.singularValues();
    s.condition_number = sv[3] > 0 ? sv[0] / sv[3] : std::numeric_limits<double>::infinity();
    return s;
}

SMatrix build_s_matrix(double theta3, double theta4, double theta5, double theta6) {
    return build_s_matrix(PhaseSet{theta3, theta4, theta5, theta6});
}

Mat4 invert_s(const SMatrix& s) {
    if (s.hadamard_ratio < kSingularTolerance) {
        std::ostringstream os;
        os << "S matrix is singular for phases theta3=" << s.phases.theta3 << " theta4=" << s.phases.theta4
           << " theta5=" << s.phases.theta5 << " theta6=" << s.phases.theta6 << " (det=" << s.determinant
           << ", condition number=" << s.condition_number << ")";
        throw SingularConfiguration(os.str());
    }
    return s.entries.inverse();
}

Vec4 means_from_derived(const SMatrix& s, const Vec4& derived_means) { return invert_s(s) * derived_means; }

}  // namespace qtomo
