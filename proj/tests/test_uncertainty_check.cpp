#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "qtomo/uncertainty_check.hpp"

using namespace qtomo;

namespace {

const InequalityReport* find(const FullReport& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return &c;
    return nullptr;
}

}  // namespace

TEST_CASE("verdict rule") {
    const VerdictRule rule;
    CHECK(decide(0.1, 0.01, rule) == Verdict::pass);
    CHECK(decide(0.0, 0.0, rule) == Verdict::pass);
    CHECK(decide(-1e-11, 0.0, rule) == Verdict::pass);
    CHECK(decide(-0.01, 0.01, rule) == Verdict::inconclusive);
    CHECK(decide(-0.05, 0.01, rule) == Verdict::violation);
    CHECK(decide(-1e-6, 0.0, rule) == Verdict::violation);
    const auto r = make_report("x", {0.25, 0.0}, 0.25, rule);
    CHECK(r.saturated);
    CHECK(r.verdict == Verdict::pass);
    CHECK_FALSE(make_report("y", {0.5, 0.0}, 0.25, rule).saturated);
}

TEST_CASE("Robertson matrix is Hermitian with the commutator part") {
    const Mat4 d = 0.5 * Mat4::Identity();
    const RobertsonMatrix s = assemble(d, Ordering::sigma);
    CHECK(s.entries.isApprox(s.entries.adjoint()));
    // Basis (P1, P2, Q1, Q2): [P1, Q1] = -i, so Sigma(P1, Q1) = -i/2.
    CHECK(s.entries(0, 2).imag() == doctest::Approx(-0.5));
    CHECK(s.entries(2, 0).imag() == doctest::Approx(0.5));
}

TEST_CASE("principal minors match cofactor expansion") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 10; ++t) {
        const GaussianState g = fixtures::random_gaussian(rng);
        for (Ordering o : {Ordering::sigma, Ordering::sigma_prime}) {
            const RobertsonMatrix s = assemble(g.cov(), o);
            const auto minors = principal_minors(s);
            REQUIRE(minors.size() == 15);
            for (const auto& m : minors) {
                oracle::MatC sub(m.indices.size(), m.indices.size());
                for (std::size_t i = 0; i < m.indices.size(); ++i)
                    for (std::size_t j = 0; j < m.indices.size(); ++j) sub(i, j) = s.entries(m.indices[i], m.indices[j]);
                const Complex det = oracle::cofactor_det(sub);
                CHECK(std::abs(det.imag()) < 1e-10);
                CHECK(m.value == doctest::Approx(det.real()).epsilon(1e-10));
                CHECK(m.value > -1e-10);  // physical state
            }
            const auto leading = leading_minors(s);
            CHECK(leading.size() == 4);
            CHECK(leading.back().value == doctest::Approx(minors.back().value).epsilon(1e-10));
        }
    }
}

TEST_CASE("pure states have a singular Robertson matrix") {
    for (auto d : {fixtures::named(StateKind::vacuum), fixtures::named(StateKind::two_mode_squeezed, {{"r", 0.6}}),
                   fixtures::named(StateKind::squeezed, {{"r1", 0.8}, {"phi1", 0.4}})}) {
        const auto s = assemble(make_gaussian(d).cov(), Ordering::sigma);
        CHECK(std::abs(principal_minors(s).back().value) < 1e-8);
    }
}

TEST_CASE("vacuum saturates the one-mode relations") {
    const StateSource src(GaussianState::vacuum());
    for (int mode = 1; mode <= 6; ++mode) {
        const auto sr = sr_per_mode(src, mode);
        CHECK(sr.lhs == doctest::Approx(0.25));
        CHECK(std::abs(sr.margin) < 1e-12);
        CHECK(sr.saturated);
        CHECK(sr.verdict == Verdict::pass);
    }
    for (int k = 0; k <= 8; ++k) CHECK(std::abs(f_theta(src, 1, k * kPi / 8).margin) < 1e-9);
    const auto q = quartic_bound(src);
    CHECK(q.lhs == doctest::Approx(1.0 / 16).epsilon(1e-12));
    CHECK(q.saturated);
}

TEST_CASE("third-order relation") {
    const StateSource vac(GaussianState::vacuum());
    const auto c = cubic_quadrature_inequality(vac, 1, 0.0);
    CHECK(c.lhs == doctest::Approx(3.0 / 8).epsilon(1e-10));
    CHECK(c.verdict == Verdict::pass);
    for (double theta : {0.3, 1.0, 2.0}) CHECK(cubic_quadrature_inequality(vac, 1, theta).lhs == doctest::Approx(3.0 / 8));
    // Oracle for a squeezed vacuum along Q: <Q^2> = s/2, <P^4> = 3/(4 s^2),
    // <QP^2> = i<P> + ..., centered: <QP^2><P^2Q> = |<QPP>|^2 = 0 for an even state.
    const double r = 0.5, s = std::exp(-2 * r);
    const StateSource sq(make_gaussian(fixtures::named(StateKind::squeezed, {{"r1", r}})));
    CHECK(cubic_quadrature_inequality(sq, 1, 0.0).lhs == doctest::Approx(0.5 * s * 0.75 / (s * s)));
}

TEST_CASE("classical and quartic checks") {
    const StateSource src(make_gaussian(fixtures::named(StateKind::two_mode_squeezed, {{"r", 0.3}})));
    const auto m2 = m2_classical(src);
    CHECK(m2.note == "Planck-constant-free");
    CHECK(m2.bound == 0.0);
    const double c = std::cosh(0.6) / 2, x = std::sinh(0.6) / 2;
    CHECK(m2.lhs == doctest::Approx(c * c - x * x));
    CHECK(quartic_bound(src).lhs == doctest::Approx(1.0 / 16));
}

TEST_CASE("unphysical states are flagged") {
    Mat4 cov = 0.5 * Mat4::Identity();
    cov(0, 0) = 0.1;
    const StateSource src(GaussianState(Vec4::Zero(), cov));
    CHECK(sr_per_mode(src, 1).verdict == Verdict::violation);
    const FullReport r = full_report(src);
    CHECK(r.exit_code() == 2);
    CHECK(r.count(Verdict::violation) > 0);
}

TEST_CASE("full analytic report") {
    const StateSource src(make_gaussian(fixtures::named(StateKind::two_mode_squeezed, {{"r", 0.3}})));
    const FullReport r = full_report(src);
    CHECK(r.exit_code() == 0);
    CHECK(r.skipped.empty());
    CHECK(find(r, "SR-mode-6") != nullptr);
    CHECK(find(r, "quartic-det-dispersion") != nullptr);
    CHECK(find(r, "cubic-mode-3-theta-0.0000") != nullptr);
    int minors = 0;
    for (const auto& c : r.checks) minors += c.name.rfind("minor-", 0) == 0;
    CHECK(minors == 15);
    const auto j = to_json(r);
    CHECK(j["summary"]["exit_code"] == 0);
    CHECK(j["checks"].size() == r.checks.size());
}

TEST_CASE("report over partial data skips what is missing") {
    const auto data = acquire(GaussianState::vacuum(), make_phase_schedule("uncertainty", 2000), 3);
    const DatasetSource src(data);
    const FullReport r = full_report(src);
    CHECK_FALSE(r.skipped.empty());
    CHECK(find(r, "SR-mode-1") != nullptr);
    CHECK(find(r, "SR-mode-1")->error > 0.0);
}

TEST_CASE("property: random physical states pass every analytic check") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 8; ++t) {
        const StateSource src(fixtures::random_gaussian(rng));
        const FullReport r = full_report(src);
        CHECK(r.count(Verdict::violation) == 0);
        CHECK(r.cross.consistent());
    }
}
