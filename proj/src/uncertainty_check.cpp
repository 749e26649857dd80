#include "qtomo/uncertainty_check.hpp"

#include <bit>
#include <numeric>

namespace qtomo {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::violation: return "violation";
        default: return "inconclusive";
    }
}

Verdict decide(double margin, double error, const VerdictRule& rule) {
    if (margin >= -rule.tolerance) return Verdict::pass;
    if (margin < -(rule.z * error + rule.tolerance)) return Verdict::violation;
    return Verdict::inconclusive;
}

InequalityReport make_report(std::string name, Estimate lhs, double bound, const VerdictRule& rule) {
    InequalityReport r;
    r.name = std::move(name);
    r.lhs = lhs.value;
    r.bound = bound;
    r.margin = lhs.value - bound;
    r.error = lhs.error;
    r.verdict = decide(r.margin, r.error, rule);
    r.saturated = std::fabs(r.margin) <= rule.z * r.error + rule.saturation;
    return r;
}

RobertsonMatrix assemble(const Mat4& dispersion, Ordering ordering) {
    if ((dispersion - dispersion.transpose()).norm() > 1e-12 * std::max(1.0, dispersion.norm()))
        throw InvalidArgument("dispersion matrix is not symmetric");
    Mat4 perm = permutation_from_canonical(ordering);
    Mat4 d = perm * dispersion * perm.transpose();
    RobertsonMatrix s;
    s.ordering = ordering;
    s.entries = d.cast<Complex>() + Complex(0.0, 0.5) * commutator_matrix(ordering).entries.cast<Complex>();
    return s;
}

RobertsonMatrix assemble(const MomentSource& src, Ordering ordering) { return assemble(dispersion_value(src), ordering); }

namespace {

PrincipalMinor minor_of(const RobertsonMatrix& sigma, const std::vector<int>& idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXcd sub(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) sub(i, j) = sigma.entries(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    Complex det = sub.determinant();
    if (std::fabs(det.imag()) > kImaginaryResidueTolerance)
        throw InternalConsistencyError("principal minor has imaginary residue " + format_number(det.imag(), 3));
    auto b = basis(sigma.ordering);
    std::string label = "{";
    for (std::size_t i = 0; i < idx.size(); ++i)
        label += (i ? "," : "") + to_string(b[static_cast<std::size_t>(idx[i])]);
    label += "}";
    return {idx, label, det.real()};
}

}  // namespace

std::vector<PrincipalMinor> principal_minors(const RobertsonMatrix& sigma) {
    std::vector<PrincipalMinor> out;
    for (int size = 1; size <= 4; ++size)
        for (unsigned mask = 1; mask < 16; ++mask) {
            if (std::popcount(mask) != size) continue;
            std::vector<int> idx;
            for (int i = 0; i < 4; ++i)
                if (mask & (1u << i)) idx.push_back(i);
            out.push_back(minor_of(sigma, idx));
        }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.indices.size() != b.indices.size() ? a.indices.size() < b.indices.size() : a.indices < b.indices;
    });
    return out;
}

std::vector<PrincipalMinor> leading_minors(const RobertsonMatrix& sigma) {
    std::vector<PrincipalMinor> out;
    for (int size = 1; size <= 4; ++size) {
        std::vector<int> idx(static_cast<std::size_t>(size));
        std::iota(idx.begin(), idx.end(), 0);
        out.push_back(minor_of(sigma, idx));
    }
    return out;
}

InequalityReport sr_per_mode(const MomentSource& src, int mode, const VerdictRule& rule) {
    check_mode(mode);
    auto lhs = evaluate(src, [mode](const MomentSource& s) {
        double qq = slice_variance(s, mode, 0), pp = slice_variance(s, mode, kPi / 2);
        double qp = slice_variance(s, mode, kPi / 4) - 0.5 * (qq + pp);
        return qq * pp - qp * qp;
    });
    return make_report("SR-mode-" + std::to_string(mode), lhs, 0.25, rule);
}

InequalityReport f_theta(const MomentSource& src, int mode, double theta, const VerdictRule& rule) {
    check_mode(mode);
    auto lhs = evaluate(src, [mode, theta](const MomentSource& s) {
        double a = slice_variance(s, mode, theta), b = slice_variance(s, mode, theta + kPi / 2);
        double c = slice_variance(s, mode, theta + kPi / 4) - 0.5 * (a + b);
        return a * b - c * c - 0.25;
    });
    return make_report("F-mode-" + std::to_string(mode) + "-theta-" + format_number(theta), lhs, 0.0, rule);
}

InequalityReport cubic_quadrature_inequality(const MomentSource& src, int mode, double theta, const VerdictRule& rule,
                                             const SolverPhases& phases) {
    check_mode(mode);
    const ModeFrame frame{mode, theta};
    auto lhs = evaluate(src, [&](const MomentSource& s) {
        OrderedMoments t = solve_ordered_moments(s, frame, 3, phases, true);
        const Complex p2q = t.at(2, 1);
        const Complex qp2 = p2q + Complex(0.0, 2.0) * t.at(1, 0);  // QP^2 = P^2 Q + 2i P
        return frame_moment(s, frame, 0.0, 2) * frame_moment(s, frame, kPi / 2, 4) - (qp2 * p2q).real();
    });
    return make_report("cubic-mode-" + std::to_string(mode) + "-theta-" + format_number(theta), lhs, 0.0, rule);
}

InequalityReport m2_classical(const MomentSource& src, const VerdictRule& rule) {
    auto lhs = evaluate(src, [](const MomentSource& s) {
        Mat4 d = dispersion_value(s);
        return d(0, 0) * d(2, 2) - d(0, 2) * d(0, 2);
    });
    auto r = make_report("M2-classical", lhs, 0.0, rule);
    r.note = "Planck-constant-free";
    return r;
}

InequalityReport quartic_bound(const MomentSource& src, const VerdictRule& rule) {
    auto lhs = evaluate(src, [](const MomentSource& s) { return dispersion_value(s).determinant(); });
    return make_report("quartic-det-dispersion", lhs, 1.0 / 16.0, rule);
}

std::vector<InequalityReport> minor_reports(const MomentSource& src, const VerdictRule& rule) {
    // Sigma' is a relabeling of Sigma, so the 15 principal minors are shared;
    // the leading minors differ and are reported per ordering.
    auto values = [](const MomentSource& s) {
        Mat4 d = dispersion_value(s);
        std::vector<double> v;
        for (const auto& m : principal_minors(assemble(d, Ordering::sigma))) v.push_back(m.value);
        for (Ordering o : {Ordering::sigma, Ordering::sigma_prime})
            for (const auto& m : leading_minors(assemble(d, o))) v.push_back(m.value);
        return v;
    };
    auto est = evaluate_vector(src, values);
    Mat4 d = dispersion_value(src);
    std::vector<std::string> names;
    for (const auto& m : principal_minors(assemble(d, Ordering::sigma))) names.push_back("minor-" + m.label);
    for (Ordering o : {Ordering::sigma, Ordering::sigma_prime})
        for (int k = 1; k <= 4; ++k) names.push_back("leading-" + to_string(o) + "-" + std::to_string(k));
    std::vector<InequalityReport> out;
    for (std::size_t i = 0; i < names.size(); ++i) out.push_back(make_report(names[i], est[i], 0.0, rule));
    return out;
}

int FullReport::exit_code() const {
    if (count(Verdict::violation) > 0 || !cross.consistent()) return 2;
    if (count(Verdict::inconclusive) > 0) return 3;
    return 0;
}

std::size_t FullReport::count(Verdict v) const {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [v](const auto& c) { return c.verdict == v; }));
}

FullReport full_report(const MomentSource& src, const ReportOptions& opts) {
    FullReport report;
    auto attempt = [&](const std::string& name, const std::function<void()>& run) {
        try {
            run();
        } catch (const MissingData& e) {
            report.skipped.push_back(name + ": " + e.what());
        }
    };
    for (int mode = 1; mode <= kModeCount; ++mode) attempt("SR-mode-" + std::to_string(mode), [&] { report.checks.push_back(sr_per_mode(src, mode, opts.rule)); });

    auto missing = missing_dispersion_entries(src);
    if (missing.empty()) {
        for (auto& r : minor_reports(src, opts.rule)) report.checks.push_back(std::move(r));
        report.checks.push_back(quartic_bound(src, opts.rule));
        report.checks.push_back(m2_classical(src, opts.rule));
    } else {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : " ") + m;
        report.skipped.push_back("Robertson minors, quartic and M2 checks: missing " + list);
    }

    std::vector<double> thetas = opts.f_thetas;
    if (thetas.empty())
        for (int k = 0; k <= 8; ++k) thetas.push_back(k * kPi / 8);
    for (int mode : opts.f_modes)
        for (double t : thetas)
            attempt("F-mode-" + std::to_string(mode) + "-theta-" + format_number(t),
                    [&] { report.checks.push_back(f_theta(src, mode, t, opts.rule)); });

    for (int mode = 1; mode <= kModeCount; ++mode)
        for (double t : opts.cubic_thetas)
            attempt("cubic-mode-" + std::to_string(mode) + "-theta-" + format_number(t),
                    [&] { report.checks.push_back(cubic_quadrature_inequality(src, mode, t, opts.rule, opts.solver_phases)); });

    report.cross = cross_validate(src, opts.cross);
    return report;
}

nlohmann::json to_json(const InequalityReport& r) {
    nlohmann::json j = {{"name", r.name},     {"lhs", r.lhs},         {"bound", r.bound},
                        {"margin", r.margin}, {"stderr", r.error},    {"verdict", to_string(r.verdict)},
                        {"saturated", r.saturated}};
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

nlohmann::json to_json(const CrossValidation& c) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : c.entries)
        entries.push_back({{"name", e.name},
                           {"primary", e.primary.value},
                           {"redundant", e.redundant.value},
                           {"difference", e.difference.value},
                           {"stderr", e.difference.error},
                           {"flagged", e.flagged}});
    return {{"entries", entries}, {"skipped", c.skipped}, {"consistent", c.consistent()}};
}

nlohmann::json to_json(const FullReport& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back(to_json(c));
    return {{"checks", checks},
            {"skipped", r.skipped},
            {"cross_validation", to_json(r.cross)},
            {"summary",
             {{"pass", r.count(Verdict::pass)},
              {"violation", r.count(Verdict::violation)},
              {"inconclusive", r.count(Verdict::inconclusive)},
              {"discrepancies", std::count_if(r.cross.entries.begin(), r.cross.entries.end(),
                                              [](const auto& e) { return e.flagged; })},
              {"exit_code", r.exit_code()}}}};
}

}  // namespace qtomo
