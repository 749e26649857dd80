// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qtomo/pipeline.hpp"

using namespace qtomo;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kVacuumFTol = 1e-9;
constexpr double kSampledZ = 3.0;
constexpr double kRecoveryZ = 5.0;
constexpr double kMinorTol = 1e-10;
constexpr double kQuarticSaturationTol = 1e-10;
constexpr double kCrossTol = 1e-8;
constexpr double kCubicOracleTol = 1e-8;
constexpr double kCubicVacuumTol = 1e-9;
constexpr double kSweepTol = 1e-8;
constexpr double kTomogramTol = 1e-3;
constexpr double kRoundTripTol = 2e-2;
constexpr double kPhotonTol = 1e-8;
constexpr double kMarginalAnalyticTol = 1e-8;
constexpr double kMarginalGridTol = 1e-3;
constexpr double kFRuntime = 10.0;
constexpr double kReconstructionRuntime = 120.0;

constexpr std::size_t kShots = 100000;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            if (ok) detail << "failed: ";
            else detail << "; ";
            detail << what;
            ok = false;
        }
    }
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Fixture {
    std::string name;
    StateDescriptor desc;
};

Fixture rotated_squeezed() {
    return {"squeezed(0.8, rotated)",
            fixtures::named(StateKind::squeezed, {{"r1", 0.3}, {"phi1", 0.4}, {"r2", 0.8}, {"phi2", 0.7}})};
}

// The listed fixtures; `rotated` adds a squeezed state whose mode-2 ellipse is
// tilted off the grid axes.
std::vector<Fixture> fixture_set(bool rotated = true) {
    using fixtures::named;
    std::vector<Fixture> f;
    f.push_back({"vacuum", named(StateKind::vacuum)});
    f.push_back({"coherent", named(StateKind::coherent, {{"alpha1_re", 1.0}, {"alpha1_im", 0.5}, {"alpha2_re", -0.3}})});
    for (double n : {0.5, 1.0, 2.0})
        f.push_back({"thermal(" + format_number(n, 1) + ")", named(StateKind::thermal, {{"nbar1", n}, {"nbar2", n}})});
    for (double r : {0.3, 0.8})
        f.push_back({"squeezed(" + format_number(r, 1) + ")",
                     named(StateKind::squeezed, {{"r1", r}, {"r2", r}})});
    for (double r : {0.3, 0.6})
        f.push_back({"tmsv(" + format_number(r, 1) + ")", named(StateKind::two_mode_squeezed, {{"r", r}})});
    if (rotated) f.push_back(rotated_squeezed());
    return f;
}

HomodyneDataset sampled(const StateDescriptor& desc, const std::string& schedule, std::uint64_t salt) {
    return acquire(make_state(desc), make_phase_schedule(schedule, kShots), mix_seed(kSeed, salt));
}

std::vector<double> f_thetas() {
    std::vector<double> t;
    for (int k = 0; k <= 8; ++k) t.push_back(k * kPi / 8);
    return t;
}

// 1. Vacuum saturation of F(theta).
Outcome criterion_1() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto vac = fixtures::named(StateKind::vacuum);
    const StateSource exact(make_state(vac));
    double worst = 0.0;
    for (int mode : {1, 2})
        for (double t : f_thetas()) worst = std::max(worst, std::fabs(f_theta(exact, mode, t).lhs));
    o.require(worst < kVacuumFTol, "analytic |F| = " + sci(worst));

    const DatasetSource src(sampled(vac, "fgrid", 1));
    double worst_z = 0.0;
    for (int mode : {1, 2})
        for (double t : f_thetas()) {
            const auto r = f_theta(src, mode, t);
            worst_z = std::max(worst_z, std::fabs(r.lhs) / r.error);
        }
    o.require(worst_z < kSampledZ, "sampled max |F|/stderr = " + sci(worst_z));
    const double dt = seconds_since(t0);
    o.require(dt < kFRuntime, "runtime " + format_number(dt, 2) + " s");
    o.detail << (o.ok ? "" : "; ") << "analytic max |F| " << sci(worst) << ", sampled max |F|/stderr "
             << sci(worst_z) << ", " << format_number(dt, 2) << " s";
    return o;
}

// 2. Robertson positivity and the quartic bound.
Outcome criterion_2() {
    Outcome o;
    double worst_analytic = INFINITY, worst_z = INFINITY;
    std::size_t salt = 100;
    for (const auto& f : fixture_set()) {
        const StateSource exact(make_state(f.desc));
        const Mat4 d = dispersion_value(exact);
        for (Ordering ord : {Ordering::sigma, Ordering::sigma_prime})
            for (const auto& m : principal_minors(assemble(d, ord))) {
                worst_analytic = std::min(worst_analytic, m.value);
                o.require(m.value >= -kMinorTol, f.name + " " + to_string(ord) + " minor " + m.label);
            }
        const double det = d.determinant();
        o.require(det >= 1.0 / 16 - kMinorTol, f.name + " quartic det " + format_number(det, 6));
        if (f.name == "vacuum")
            o.require(std::fabs(det - 1.0 / 16) < kQuarticSaturationTol, "vacuum det " + format_number(det, 12));

        const DatasetSource src(sampled(f.desc, "uncertainty,redundant", salt++));
        for (const auto& r : minor_reports(src)) {
            if (r.error > 0) worst_z = std::min(worst_z, r.lhs / r.error);
            o.require(r.lhs >= -kSampledZ * r.error, f.name + " sampled " + r.name + " = " + format_number(r.lhs, 4) +
                                                         " (stderr " + format_number(r.error, 4) + ")");
        }
        const auto q = quartic_bound(src);
        o.require(q.verdict != Verdict::violation, f.name + " sampled quartic bound");
    }
    o.detail << (o.ok ? "" : "; ") << fixture_set().size() << " fixtures, min analytic minor " << sci(worst_analytic)
             << ", min sampled minor/stderr " << sci(worst_z);
    return o;
}

// 3. Cross covariance of TMSV(0.4) from the derived modes.
Outcome criterion_3() {
    Outcome o;
    const auto desc = fixtures::named(StateKind::two_mode_squeezed, {{"r", 0.4}});
    const double expected = std::sinh(0.8) / 2;
    const StateSource exact(make_state(desc));
    const double a = cross_covariances(exact).q1q2.value;
    o.require(std::fabs(a - expected) < kCrossTol, "analytic q1q2 " + format_number(a, 10));

    const DatasetSource src(sampled(desc, "uncertainty,redundant", 3));
    const Estimate s = cross_covariances(src).q1q2;
    o.require(std::fabs(s.value - expected) < kRecoveryZ * s.error,
              "sampled q1q2 " + format_number(s.value, 5) + " +- " + format_number(s.error, 5));
    CrossValidationOptions cv;
    cv.z = kRecoveryZ;
    const CrossValidation c = cross_validate(src, cv);
    double worst = 0.0;
    for (const auto& e : c.entries) worst = std::max(worst, std::fabs(e.difference.value) / e.difference.error);
    o.require(c.consistent() && c.skipped.empty(), "mode-4/6 cross-validation flagged");
    o.detail << (o.ok ? "" : "; ") << "analytic error " << sci(std::fabs(a - expected))
             << ", sampled z " << sci(std::fabs(s.value - expected) / s.error)
             << ", worst cross-validation z " << sci(worst);
    return o;
}

Complex oracle_ordered(const GaussianState& g, int mode, double theta, int m, int k) {
    const double sc = canonical_scale(mode);
    const Vec4 q = sc * quadrature_form(mode, theta).coeffs, p = sc * quadrature_form(mode, theta + kPi / 2).coeffs;
    std::vector<oracle::Vec4> ops;
    for (int i = 0; i < m; ++i) ops.push_back(p);
    for (int i = 0; i < k; ++i) ops.push_back(q);
    return oracle::wick_expectation(ops, g.mean(), g.cov());
}

// 4. Cubic solver against the Wick oracle.
Outcome criterion_4() {
    Outcome o;
    double worst = 0.0, worst_pair = 0.0;
    for (const auto& f : fixture_set()) {
        if (f.name != "coherent" && f.name.rfind("squeezed", 0) != 0) continue;
        const GaussianState g = make_gaussian(f.desc);
        const StateSource src(g);
        for (int mode = 1; mode <= kModeCount; ++mode)
            for (double theta : {0.0, 0.4, kPi / 2}) {
                const auto a = solve_ordered_moments(src, {mode, theta}, 3);
                const auto b = solve_ordered_moments(src, {mode, theta}, 3, {{3, {kPi / 6, 5 * kPi / 12}}});
                for (int m = 0; m <= 3; ++m) {
                    worst = std::max(worst, std::abs(a.at(m, 3 - m) - oracle_ordered(g, mode, theta, m, 3 - m)));
                    worst_pair = std::max(worst_pair, std::abs(a.at(m, 3 - m) - b.at(m, 3 - m)));
                }
            }
    }
    o.require(worst < kCubicOracleTol, "oracle deviation " + sci(worst));
    o.require(worst_pair < kCubicOracleTol, "phase-pair deviation " + sci(worst_pair));
    o.detail << (o.ok ? "" : "; ") << "max oracle deviation " << sci(worst) << ", phase pairs "
             << sci(worst_pair);
    return o;
}

// 5. Third-order inequality.
Outcome criterion_5() {
    Outcome o;
    const StateSource vac(make_state(fixtures::named(StateKind::vacuum)));
    double worst_value = 0.0, spread = 0.0;
    for (int mode = 1; mode <= kModeCount; ++mode) {
        double lo = INFINITY, hi = -INFINITY;
        for (double t : f_thetas()) {
            const double v = cubic_quadrature_inequality(vac, mode, t).lhs;
            worst_value = std::max(worst_value, std::fabs(v - 3.0 / 8));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        spread = std::max(spread, hi - lo);
    }
    o.require(worst_value < kCubicVacuumTol, "vacuum lhs off 3/8 by " + sci(worst_value));
    o.require(spread < kSweepTol, "theta sweep spread " + sci(spread));
    std::size_t checks = 0;
    for (const auto& f : fixture_set()) {
        const StateSource src(make_state(f.desc));
        for (int mode = 1; mode <= kModeCount; ++mode)
            for (double t : {0.0, kPi / 4, kPi / 2, 2.0}) {
                const auto r = cubic_quadrature_inequality(src, mode, t);
                ++checks;
                o.require(r.verdict == Verdict::pass, f.name + " " + r.name + " margin " + format_number(r.margin, 4));
            }
    }
    o.detail << (o.ok ? "" : "; ") << "vacuum |lhs - 3/8| " << sci(worst_value) << ", sweep spread "
             << sci(spread) << ", " << checks << " fixture checks";
    return o;
}

// 6. Reconstruction closed loop.
Outcome criterion_6() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    ReconstructionOptions opts;
    opts.order = 8;
    double worst_tomo = 0.0, worst_trip = 0.0, rotated_trip = 0.0;
    auto fixtures = fixture_set(false);
    fixtures.push_back(rotated_squeezed());
    for (const auto& f : fixtures) {
        const bool gated = f.name != rotated_squeezed().name;
        const State s = make_state(f.desc);
        const StateSource src(s);
        for (auto [t1, t2] : {std::pair{0.0, 0.0}, {kPi / 3, 0.2}}) {
            const JointTomogram rec = invert_to_tomogram(charfn_from_moments(src, t1, t2, opts));
            const JointTomogram exact = optical_tomogram(s, t1, t2);
            double err = linf_at_nodes(rec, exact);
            for (int keep : {1, 2}) err = std::max(err, linf_at_nodes(marginalize(rec, keep), marginalize(exact, keep)));
            worst_tomo = std::max(worst_tomo, err);
            o.require(err < kTomogramTol, f.name + " tomogram error " + sci(err));
        }
        const GridWigner w = invert_to_wigner(wigner_charfn_from_moments(solve_cross_moments(src, opts.order), opts));
        const State rec = w;
        for (int mode : {1, 2})
            for (double theta : {0.0, kPi / 4, kPi / 2}) {
                const double err =
                    linf_at_nodes(derived_mode_tomogram(rec, mode, theta), derived_mode_tomogram(s, mode, theta));
                if (!gated) {
                    rotated_trip = std::max(rotated_trip, err);
                    continue;
                }
                worst_trip = std::max(worst_trip, err);
                o.require(err < kRoundTripTol, f.name + " Wigner round trip " + sci(err));
            }
    }
    const double dt = seconds_since(t0);
    o.require(dt < kReconstructionRuntime, "runtime " + format_number(dt, 1) + " s");
    o.detail << (o.ok ? "" : "; ") << "max tomogram error " << sci(worst_tomo) << ", max round trip "
             << sci(worst_trip) << ", " << format_number(dt, 1) << " s; not gated: "
             << rotated_squeezed().name << " round trip " << sci(rotated_trip)
             << " (tilted ellipse narrower than the 32-point grid step)";
    return o;
}

// 7. Photon statistics.
Outcome criterion_7() {
    Outcome o;
    using fixtures::named;
    const double r = 0.5, sh2 = std::sinh(r) * std::sinh(r);
    struct Case {
        std::string name;
        StateDescriptor desc;
        double n1, n1_sq, n1n2;
    };
    const std::vector<Case> cases{
        {"thermal(1)", named(StateKind::thermal, {{"nbar1", 1.0}, {"nbar2", 1.0}}), oracle::geometric_moment(1.0, 1),
         oracle::geometric_moment(1.0, 2), 1.0},
        {"coherent(2)", named(StateKind::coherent, {{"alpha1_re", 1.0}, {"alpha1_im", 1.0}}),
         oracle::poisson_moment(2.0, 1), oracle::poisson_moment(2.0, 2), 0.0},
        {"tmsv(0.5)", named(StateKind::two_mode_squeezed, {{"r", r}}), oracle::geometric_moment(sh2, 1),
         oracle::geometric_moment(sh2, 2), oracle::tmsv_cross(r)},
    };
    o.require(std::fabs(cases[0].n1 - 1) < 1e-12 && std::fabs(cases[0].n1_sq - 3) < 1e-12, "thermal oracle");
    o.require(std::fabs(cases[1].n1 - 2) < 1e-12 && std::fabs(cases[1].n1_sq - 6) < 1e-12, "coherent oracle");
    o.require(std::fabs(cases[2].n1n2 - (2 * sh2 * sh2 + sh2)) < 1e-12, "tmsv oracle");
    double worst = 0.0, worst_z = 0.0;
    std::uint64_t salt = 700;
    for (const auto& c : cases) {
        const auto exact = photon_moments(StateSource(make_state(c.desc)));
        for (auto [got, want] : {std::pair{exact.n1.value, c.n1}, {exact.n1_sq.value, c.n1_sq}, {exact.n1n2.value, c.n1n2}}) {
            worst = std::max(worst, std::fabs(got - want));
            o.require(std::fabs(got - want) < kPhotonTol, c.name + " analytic " + format_number(got, 10));
        }
        const auto s = photon_moments(DatasetSource(sampled(c.desc, "uncertainty,redundant,cubic,quartic", salt++)));
        for (auto [est, want] : {std::pair{s.n1, c.n1}, {s.n1_sq, c.n1_sq}, {s.n1n2, c.n1n2}}) {
            const double z = std::fabs(est.value - want) / est.error;
            worst_z = std::max(worst_z, z);
            o.require(z < kRecoveryZ, c.name + " sampled " + format_number(est.value, 5) + " +- " + format_number(est.error, 5));
        }
    }
    o.detail << (o.ok ? "" : "; ") << "max analytic error " << sci(worst) << ", max sampled z "
             << sci(worst_z);
    return o;
}

// 8. Marginals do not depend on the phase of the integrated mode.
Outcome criterion_8() {
    Outcome o;
    const std::vector<double> phases{0.0, kPi / 5, 2 * kPi / 5, 3 * kPi / 5, 4 * kPi / 5};
    double worst_a = 0.0, worst_g = 0.0;
    for (const auto& f : fixture_set()) {
        const GaussianState g = make_gaussian(f.desc);
        const State exact = g;
        const State grid = sample_wigner_grid(g, 32);
        for (int keep : {1, 2})
            for (double own : {0.0, 1.0}) {
                auto marginal = [&](const State& s, double other) {
                    return keep == 1 ? marginalize(optical_tomogram(s, own, other), 1)
                                     : marginalize(optical_tomogram(s, other, own), 2);
                };
                const TomogramSlice ra = marginal(exact, phases[0]), rg = marginal(grid, phases[0]);
                for (std::size_t i = 1; i < phases.size(); ++i) {
                    const TomogramSlice a = marginal(exact, phases[i]), b = marginal(grid, phases[i]);
                    const double da = linf_distance(a, ra, probe_axis(ra));
                    const double dg = linf_at_nodes(b, rg);
                    worst_a = std::max(worst_a, da);
                    worst_g = std::max(worst_g, dg);
                    o.require(da < kMarginalAnalyticTol, f.name + " analytic marginal drift " + sci(da));
                    o.require(dg < kMarginalGridTol, f.name + " grid marginal drift " + sci(dg));
                }
            }
    }
    o.detail << (o.ok ? "" : "; ") << "max analytic drift " << sci(worst_a) << ", max grid drift "
             << sci(worst_g);
    return o;
}

// 9. Injected faults.
Outcome criterion_9() {
    Outcome o;
    const auto desc = fixtures::named(StateKind::two_mode_squeezed, {{"r", 0.3}});
    const HomodyneDataset clean = sampled(desc, "uncertainty,redundant", 9);

    HomodyneDataset squeezed_below = clean;
    for (auto& rec : squeezed_below.records)
        if (rec.mode == 1 && rec.theta == 0.0 && !rec.paired()) rec.x *= std::sqrt(0.2);
    const FullReport a = full_report(DatasetSource(squeezed_below));
    o.require(a.count(Verdict::violation) > 0, "sub-vacuum variance not reported as violation");
    o.require(a.exit_code() == 2, "sub-vacuum exit code " + std::to_string(a.exit_code()));

    HomodyneDataset shifted = clean;
    for (auto& rec : shifted.records)
        if (rec.mode == 4) rec.x += 0.1;
    const FullReport b = full_report(DatasetSource(shifted));
    o.require(!b.cross.consistent(), "shifted mode-4 records not flagged");
    o.require(b.exit_code() == 2, "shifted exit code " + std::to_string(b.exit_code()));
    o.detail << (o.ok ? "" : "; ") << "sub-vacuum: " << a.count(Verdict::violation) << " violations, exit "
             << a.exit_code() << "; shifted mode 4: exit " << b.exit_code();
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 10. Determinism.
Outcome criterion_10() {
    Outcome o;
    RunConfig c;
    c.state = fixtures::named(StateKind::two_mode_squeezed, {{"r", 0.4}});
    c.seed = kSeed;
    c.shots_per_phase = 20000;
    const fs::path root = fs::temp_directory_path() / "qtomo_acceptance_determinism";
    fs::remove_all(root);
    std::vector<std::string> reports;
    for (const char* run : {"a", "b"}) {
        c.out_dir = (root / run).string();
        cmd_report(c);
        reports.push_back(slurp(root / run / "report.json"));
    }
    o.require(!reports[0].empty(), "no report written");
    o.require(reports[0] == reports[1], "reports differ");
    o.require(slurp(root / "a" / "data.jsonl") == slurp(root / "b" / "data.jsonl"), "datasets differ");
    o.detail << (o.ok ? "" : "; ") << reports[0].size() << " byte report identical across runs";
    fs::remove_all(root);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"vacuum saturation", criterion_1},
        {"Robertson positivity", criterion_2},
        {"cross-covariance recovery", criterion_3},
        {"cubic solver oracle", criterion_4},
        {"third-order inequality", criterion_5},
        {"reconstruction closed loop", criterion_6},
        {"photon statistics", criterion_7},
        {"marginal phase independence", criterion_8},
        {"fault detection", criterion_9},
        {"determinism", criterion_10},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail << "exception: " << e.what();
        }
        std::printf("%s criterion %zu (%s): %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.str().c_str());
        std::fflush(stdout);
        if (!o.ok) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
