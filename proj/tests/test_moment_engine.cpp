#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "qtomo/mode_network.hpp"
#include "qtomo/moment_engine.hpp"

using namespace qtomo;

namespace {

// Canonical frame pair of a mode as linear forms over (Q1, P1, Q2, P2).
std::pair<Vec4, Vec4> frame_forms(int mode, double theta) {
    const double s = canonical_scale(mode);
    return {s * quadrature_form(mode, theta).coeffs, s * quadrature_form(mode, theta + kPi / 2).coeffs};
}

Complex oracle_ordered(const GaussianState& g, int mode, double theta, int m, int k) {
    const auto [q, p] = frame_forms(mode, theta);
    std::vector<oracle::Vec4> ops;
    for (int i = 0; i < m; ++i) ops.push_back(p);
    for (int i = 0; i < k; ++i) ops.push_back(q);
    return oracle::wick_expectation(ops, g.mean(), g.cov());
}

}  // namespace

TEST_CASE("variances and covariances of every mode") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 5; ++t) {
        const GaussianState g = fixtures::random_gaussian(rng);
        const StateSource src(g);
        for (int mode = 1; mode <= 6; ++mode) {
            const auto [q, p] = frame_forms(mode, 0.0);
            const ModeCovariance c = variances_covariances(src, mode);
            CHECK(c.qq.value == doctest::Approx(q.dot(g.cov() * q)));
            CHECK(c.pp.value == doctest::Approx(p.dot(g.cov() * p)));
            CHECK(c.qp.value == doctest::Approx(q.dot(g.cov() * p)));
            CHECK(c.qq.error == 0.0);
        }
        const CrossCovariances x = cross_covariances(src);
        CHECK(x.q1q2.value == doctest::Approx(g.cov()(0, 2)));
        CHECK(x.p1p2.value == doctest::Approx(g.cov()(1, 3)));
        CHECK(x.q1p2.value == doctest::Approx(g.cov()(0, 3)));
        CHECK(x.q2p1.value == doctest::Approx(g.cov()(2, 1)));
        const CrossCovariances y = cross_covariances_redundant(src);
        CHECK(y.q1q2.value == doctest::Approx(g.cov()(0, 2)));
        CHECK(y.q2p1.value == doctest::Approx(g.cov()(2, 1)));
        CHECK((dispersion_value(src) - g.cov()).norm() < 1e-10);
        CHECK((mean_value(src) - g.mean()).norm() < 1e-10);
        CHECK(cross_validate(src).consistent());
    }
}

TEST_CASE("ordered moments match the Wick and commutator oracle") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 4; ++t) {
        const GaussianState g = fixtures::random_gaussian(rng);
        const StateSource src(g);
        for (auto [mode, theta] : {std::pair{1, 0.0}, {2, 0.7}, {3, 0.2}, {6, 1.9}}) {
            const OrderedMoments table = solve_ordered_moments(src, {mode, theta}, 6);
            for (int n = 1; n <= 6; ++n)
                for (int m = 0; m <= n; ++m) {
                    const Complex expected = oracle_ordered(g, mode, theta, m, n - m);
                    const Complex got = table.at(m, n - m);
                    CHECK(std::abs(got - expected) < 1e-7 * std::max(1.0, std::abs(expected)));
                }
        }
    }
}

TEST_CASE("solver phases: alternatives agree, degenerate ones are singular") {
    std::mt19937_64 rng(3);
    const GaussianState g = fixtures::random_gaussian(rng);
    const StateSource src(g);
    const auto a = solve_ordered_moments(src, {1, 0.0}, 3);
    const auto b = solve_ordered_moments(src, {1, 0.0}, 3, {{3, {kPi / 6, 5 * kPi / 12}}});
    const auto c = solve_ordered_moments(src, {1, 0.0}, 3, {{3, {kPi / 6, 5 * kPi / 12, 0.4}}});
    for (int m = 0; m <= 3; ++m) {
        CHECK(std::abs(a.at(m, 3 - m) - b.at(m, 3 - m)) < 1e-10);
        CHECK(std::abs(a.at(m, 3 - m) - c.at(m, 3 - m)) < 1e-10);
    }
    CHECK_THROWS_AS(solve_ordered_moments(src, {1, 0.0}, 3, {{3, {1.0, 1.0}}}), SingularConfiguration);
    CHECK(default_solver_phases(2) == std::vector<double>{kPi / 4});
    for (int n = 4; n <= 8; ++n) {
        const auto ph = default_solver_phases(n);
        CHECK(ph.size() == static_cast<std::size_t>(n - 1));
        for (double p : ph) CHECK(std::abs(p - kPi / 2) > 1e-9);
    }
}

TEST_CASE("recomposed quadrature moments equal direct tomogram moments") {
    std::mt19937_64 rng(4);
    const GaussianState g = fixtures::random_gaussian(rng);
    const StateSource src(g);
    const OrderedMoments table = solve_ordered_moments(src, {1, 0.0}, 4);
    for (double phi : {0.2, 1.0, 2.5})
        for (int n = 1; n <= 4; ++n) {
            const Complex r = recompose_quadrature_moment(table, phi, n);
            CHECK(std::abs(r.imag()) < 1e-9);
            CHECK(r.real() == doctest::Approx(frame_moment(src, {1, 0.0}, phi, n)));
        }
}

TEST_CASE("two-mode ordered table and Weyl-symmetric moments") {
    std::mt19937_64 rng(5);
    const GaussianState g = fixtures::random_gaussian(rng, 0.3);
    const StateSource src(g);
    const CrossMoments table = solve_cross_moments(src, 4);
    for (const auto& [key, value] : table.values()) {
        std::vector<oracle::Vec4> ops;
        for (int i = 0; i < key[0]; ++i) ops.push_back(Vec4::Unit(1));
        for (int i = 0; i < key[1]; ++i) ops.push_back(Vec4::Unit(0));
        for (int i = 0; i < key[2]; ++i) ops.push_back(Vec4::Unit(3));
        for (int i = 0; i < key[3]; ++i) ops.push_back(Vec4::Unit(2));
        const Complex expected = oracle::wick_expectation(ops, g.mean(), g.cov());
        CHECK(std::abs(value - expected) < 1e-7 * std::max(1.0, std::abs(expected)));
    }
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; b <= 2; ++b)
            for (int c = 0; c + a + b <= 4; ++c)
                for (int d = 0; a + b + c + d <= 4; ++d) {
                    const Complex got = table.symmetric_moment(a, b, c, d);
                    const double expected = oracle::isserlis_moment({a, b, c, d}, g.mean(), g.cov());
                    CHECK(std::abs(got.imag()) < 1e-8);
                    CHECK(got.real() == doctest::Approx(expected).epsilon(1e-7));
                }
}

TEST_CASE("missing data is named") {
    HomodyneDataset data = acquire(GaussianState::vacuum(), {{1, 0.0, std::nullopt, 200}, {1, kPi / 2, std::nullopt, 200}}, 1);
    const DatasetSource src(data);
    const auto missing = missing_dispersion_entries(src);
    CHECK_FALSE(missing.empty());
    try {
        dispersion_value(src);
        FAIL("expected MissingData");
    } catch (const MissingData& e) {
        CHECK(std::string(e.what()).find(missing.front()) != std::string::npos);
    }
}

TEST_CASE("sampled estimates agree with the exact ones within their errors") {
    StateDescriptor d = fixtures::named(StateKind::two_mode_squeezed, {{"r", 0.4}});
    const State s = make_state(d);
    const HomodyneDataset data = acquire(s, make_phase_schedule("uncertainty,redundant", 20000), 17);
    const DatasetSource sampled(data);
    const StateSource exact(s);
    const auto e = dispersion_matrix(sampled);
    const Mat4 truth = dispersion_value(exact);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            CHECK(e.error(i, j) > 0.0);
            CHECK(std::abs(e.value(i, j) - truth(i, j)) < 5 * e.error(i, j));
        }
    const CrossValidation cv = cross_validate(sampled);
    CHECK(cv.consistent());
}
