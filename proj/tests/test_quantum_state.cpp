#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "qtomo/quantum_state.hpp"

using namespace qtomo;

namespace {

StateDescriptor desc(StateKind kind, std::map<std::string, double> params = {}) {
    StateDescriptor d;
    d.kind = kind;
    d.params = std::move(params);
    return d;
}

}  // namespace

TEST_CASE("vacuum has covariance one half and saturates physicality") {
    const GaussianState v = make_gaussian(desc(StateKind::vacuum));
    CHECK(v.cov().isApprox(0.5 * Mat4::Identity()));
    CHECK(v.mean().isZero());
    const auto phys = validate_physicality(v);
    CHECK(phys.physical);
    CHECK(std::abs(phys.min_eigenvalue) < 1e-12);
}

TEST_CASE("named Gaussian families") {
    SUBCASE("coherent means") {
        const auto s = make_gaussian(desc(StateKind::coherent, {{"alpha1_re", 1.5}, {"alpha1_im", -0.5}, {"alpha2_im", 2.0}}));
        CHECK(s.mean()(0) == doctest::Approx(std::sqrt(2.0) * 1.5));
        CHECK(s.mean()(1) == doctest::Approx(-std::sqrt(2.0) * 0.5));
        CHECK(s.mean()(2) == doctest::Approx(0.0));
        CHECK(s.mean()(3) == doctest::Approx(std::sqrt(2.0) * 2.0));
        CHECK(s.cov().isApprox(0.5 * Mat4::Identity()));
    }
    SUBCASE("squeezed along Q") {
        const double r = 0.7;
        const auto s = make_gaussian(desc(StateKind::squeezed, {{"r1", r}}));
        CHECK(s.cov()(0, 0) == doctest::Approx(0.5 * std::exp(-2 * r)));
        CHECK(s.cov()(1, 1) == doctest::Approx(0.5 * std::exp(2 * r)));
    }
    SUBCASE("squeezed along a rotated axis") {
        const double r = 0.5, phi = 0.3;
        const auto s = make_gaussian(desc(StateKind::squeezed, {{"r1", r}, {"phi1", phi}}));
        const Eigen::Vector2d u(std::cos(phi), std::sin(phi)), w(-std::sin(phi), std::cos(phi));
        const Eigen::Matrix2d c = s.cov().topLeftCorner<2, 2>();
        CHECK(u.dot(c * u) == doctest::Approx(0.5 * std::exp(-2 * r)));
        CHECK(w.dot(c * w) == doctest::Approx(0.5 * std::exp(2 * r)));
    }
    SUBCASE("thermal") {
        const auto s = make_gaussian(desc(StateKind::thermal, {{"nbar1", 2.0}, {"nbar2", 0.5}}));
        CHECK(s.cov()(0, 0) == doctest::Approx(2.5));
        CHECK(s.cov()(3, 3) == doctest::Approx(1.0));
    }
    SUBCASE("two-mode squeezed vacuum") {
        const double r = 0.4;
        const auto s = make_gaussian(desc(StateKind::two_mode_squeezed, {{"r", r}}));
        CHECK(s.cov()(0, 0) == doctest::Approx(std::cosh(2 * r) / 2));
        CHECK(s.cov()(0, 2) == doctest::Approx(std::sinh(2 * r) / 2));
        CHECK(s.cov()(1, 3) == doctest::Approx(-std::sinh(2 * r) / 2));
        CHECK(s.cov()(0, 3) == doctest::Approx(0.0));
        CHECK(std::abs(validate_physicality(s).min_eigenvalue) < 1e-10);
    }
}

TEST_CASE("unphysical covariance is rejected unless allowed") {
    StateDescriptor d = desc(StateKind::gaussian);
    Mat4 cov = 0.5 * Mat4::Identity();
    cov(0, 0) = 0.1;
    d.cov = cov;
    d.mean = Vec4::Zero();
    CHECK_THROWS_AS(make_state(d), InvalidArgument);
    d.allow_unphysical = true;
    CHECK_NOTHROW(make_state(d));
    CHECK_FALSE(validate_physicality(cov).physical);
}

TEST_CASE("non-symmetric covariance is an argument error") {
    Mat4 cov = 0.5 * Mat4::Identity();
    cov(0, 1) = 0.1;
    CHECK_THROWS_AS(validate_physicality(cov), InvalidArgument);
}

TEST_CASE("Wigner normalization and vacuum peak") {
    const GaussianState v = GaussianState::vacuum();
    CHECK(wigner_eval(v, Vec4::Zero()) == doctest::Approx(4.0));
    const auto grid = sample_wigner_grid(reduce_to_mode(v, 1), 128);
    CHECK(grid.normalization() == doctest::Approx(1.0).epsilon(1e-6));
    const auto grid4 = sample_wigner_grid(make_gaussian(desc(StateKind::two_mode_squeezed, {{"r", 0.3}})), 24);
    CHECK(grid4.normalization() == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("reduced TMSV mode is thermal") {
    const double r = 0.6;
    const auto one = reduce_to_mode(make_gaussian(desc(StateKind::two_mode_squeezed, {{"r", r}})), 2);
    const double nbar = std::sinh(r) * std::sinh(r);
    CHECK(one.cov.isApprox((nbar + 0.5) * Eigen::Matrix2d::Identity()));
}

TEST_CASE("grid interpolation is exact at nodes and throws outside") {
    const auto g = sample_wigner_grid(OneModeGaussian{}, 33);
    const auto& ax = g.axes();
    const std::array<std::size_t, 2> idx{10, 20};
    const std::array<double, 2> at{ax[0].at(10), ax[1].at(20)};
    CHECK(g.interpolate(at) == doctest::Approx(g.values()[g.flat_index(idx)]));
    const std::array<double, 2> outside{ax[0].max() + 1.0, 0.0};
    CHECK_THROWS_AS(g.interpolate(outside), InvalidArgument);
}

TEST_CASE("grid file and descriptor round trips") {
    const auto g = sample_wigner_grid(make_gaussian(desc(StateKind::thermal, {{"nbar1", 1.0}})), 8);
    const auto path = (std::filesystem::temp_directory_path() / "qtomo_grid_roundtrip.bin").string();
    write_grid_file(path, g);
    const GridWigner back = read_grid_file(path);
    REQUIRE(back.values().size() == g.values().size());
    for (std::size_t i = 0; i < g.values().size(); ++i) CHECK(back.values()[i] == g.values()[i]);
    std::filesystem::remove(path);

    const StateDescriptor d = desc(StateKind::coherent, {{"alpha1_re", 0.25}, {"q2", 1.0}});
    const StateDescriptor e = descriptor_from_json(to_json(d));
    CHECK(make_gaussian(e).mean().isApprox(make_gaussian(d).mean()));
    CHECK_THROWS_AS(make_state(descriptor_from_json(nlohmann::json{{"kind", "coherent"}, {"params", {{"bogus", 1}}}})),
                    InvalidArgument);
    CHECK_THROWS_AS(state_kind_from_string("cat"), InvalidArgument);
}

TEST_CASE("property: random physical states pass, scaled-down ones fail") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        StateDescriptor d = desc(StateKind::squeezed, {{"r1", u(rng)}, {"phi1", 3 * u(rng)}, {"r2", u(rng)}, {"phi2", 3 * u(rng)}});
        const auto s = make_gaussian(d);
        CHECK(validate_physicality(s).min_eigenvalue > -1e-10);
        // Pure states have det(cov) = 1/16.
        CHECK(s.cov().determinant() == doctest::Approx(1.0 / 16));
        CHECK_FALSE(validate_physicality(Mat4(0.9 * s.cov())).physical);
    }
}

TEST_CASE("orderings are permutations with matching commutator matrices") {
    for (Ordering o : {Ordering::canonical, Ordering::sigma, Ordering::sigma_prime}) {
        const Mat4 p = permutation_from_canonical(o);
        CHECK((p * p.transpose()).isApprox(Mat4::Identity()));
        const Mat4 j = commutator_matrix(o).entries;
        CHECK(j.isApprox(p * commutator_matrix(Ordering::canonical).entries * p.transpose()));
    }
    CHECK(basis(Ordering::sigma)[0] == Quadrature::P1);
    CHECK(basis(Ordering::sigma_prime)[1] == Quadrature::Q2);
}
