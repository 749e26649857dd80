#pragma once

// Robertson matrix assembly and every inequality check, each reported with a
// margin, a bootstrap error and a verdict.

#include <string>
#include <vector>

#include "json.hpp"
#include "qtomo/moment_engine.hpp"
#include "qtomo/quantum_state.hpp"

namespace qtomo {

enum class Verdict { pass, violation, inconclusive };

std::string to_string(Verdict v);

/// pass: margin >= -tolerance. violation: margin < -(z * error + tolerance).
/// Anything in between is inconclusive.
struct VerdictRule {
    double z = 3.0;
    double tolerance = 1e-10;
    double saturation = 1e-8;  // |margin| below this (plus z * error) is flagged saturated
};

Verdict decide(double margin, double error, const VerdictRule& rule);

struct InequalityReport {
    std::string name;
    double lhs = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    double error = 0.0;
    Verdict verdict = Verdict::pass;
    bool saturated = false;
    std::string note;
};

InequalityReport make_report(std::string name, Estimate lhs, double bound, const VerdictRule& rule);

/// Dispersion matrix plus (i/2) J in the basis of `ordering`.
struct RobertsonMatrix {
    Ordering ordering = Ordering::sigma;
    Mat4c entries = Mat4c::Zero();
};

/// `dispersion` is in canonical order (Q1, P1, Q2, P2).
RobertsonMatrix assemble(const Mat4& dispersion, Ordering ordering);
RobertsonMatrix assemble(const MomentSource& src, Ordering ordering);

struct PrincipalMinor {
    std::vector<int> indices;  // positions in the ordering's basis
    std::string label;         // e.g. "{P1,P2,Q1}"
    double value = 0.0;
};

inline constexpr double kImaginaryResidueTolerance = 1e-8;

/// All 15 principal minors, by size and then lexicographically.
std::vector<PrincipalMinor> principal_minors(const RobertsonMatrix& sigma);
/// The four leading minors in the ordering's basis.
std::vector<PrincipalMinor> leading_minors(const RobertsonMatrix& sigma);

InequalityReport sr_per_mode(const MomentSource& src, int mode, const VerdictRule& rule = {});
InequalityReport f_theta(const MomentSource& src, int mode, double theta, const VerdictRule& rule = {});

/// <Q^2><P^4> - <QP^2><P^2Q> >= 0 in the frame rotated by theta.
InequalityReport cubic_quadrature_inequality(const MomentSource& src, int mode, double theta,
                                             const VerdictRule& rule = {}, const SolverPhases& phases = {});

/// sigma_Q1Q1 sigma_Q2Q2 - sigma_Q1Q2^2 >= 0 (no hbar involved).
InequalityReport m2_classical(const MomentSource& src, const VerdictRule& rule = {});
/// det(dispersion) >= 1/16.
InequalityReport quartic_bound(const MomentSource& src, const VerdictRule& rule = {});

std::vector<InequalityReport> minor_reports(const MomentSource& src, const VerdictRule& rule = {});

struct ReportOptions {
    VerdictRule rule;
    CrossValidationOptions cross;
    std::vector<int> f_modes{1, 2};
    std::vector<double> f_thetas;  // empty: k pi / 8 for k = 0..8
    std::vector<double> cubic_thetas{0.0};
    SolverPhases solver_phases;
};

struct FullReport {
    std::vector<InequalityReport> checks;
    std::vector<std::string> skipped;
    CrossValidation cross;

    /// 2 on any violation or flagged discrepancy, else 3 on any inconclusive, else 0.
    int exit_code() const;
    std::size_t count(Verdict v) const;
};

/// Runs every check the source has data for; the rest are listed as skipped.
FullReport full_report(const MomentSource& src, const ReportOptions& opts = {});

nlohmann::json to_json(const InequalityReport& r);
nlohmann::json to_json(const CrossValidation& c);
nlohmann::json to_json(const FullReport& r);

}  // namespace qtomo
