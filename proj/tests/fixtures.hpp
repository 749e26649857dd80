#pragma once

// Random and named Gaussian fixtures shared by the unit tests.

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "qtomo/quantum_state.hpp"

namespace fixtures {

using namespace qtomo;

inline StateDescriptor named(StateKind kind, std::map<std::string, double> params = {}) {
    StateDescriptor d;
    d.kind = kind;
    d.params = std::move(params);
    return d;
}

// exp(J H) is symplectic for symmetric H; adding thermal noise keeps the state physical.
inline GaussianState random_gaussian(std::mt19937_64& rng, double scale = 0.4, double noise = 0.1) {
    std::normal_distribution<double> n;
    Mat4 h;
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) h(i, j) = h(j, i) = scale * n(rng);
    Mat4 j = Mat4::Zero();
    j(0, 1) = j(2, 3) = 1.0;
    j(1, 0) = j(3, 2) = -1.0;
    const Mat4 s = (j * h).exp();
    const Mat4 cov = 0.5 * s * s.transpose() + noise * std::abs(n(rng)) * Mat4::Identity();
    const Vec4 mean(n(rng), n(rng), n(rng), n(rng));
    return GaussianState(mean, 0.5 * (cov + cov.transpose()));
}

}  // namespace fixtures
