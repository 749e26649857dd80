#pragma once

// Reference computations that share no code with the library.

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using MatC = Eigen::MatrixXcd;

inline constexpr double pi = 3.14159265358979323846;

// [v.x, w.x] = i * symp(v, w) for x = (Q1, P1, Q2, P2).
inline double symp(const Vec4& v, const Vec4& w) { return v(0) * w(1) - v(1) * w(0) + v(2) * w(3) - v(3) * w(2); }

// Centered Wick expansion with ordered two-point functions
// <dA dB> = v^T C w + (i/2) symp(v, w).
inline Complex centered_wick(const std::vector<Vec4>& ops, const Mat4& cov) {
    if (ops.empty()) return 1.0;
    if (ops.size() % 2) return 0.0;
    Complex total = 0.0;
    for (std::size_t j = 1; j < ops.size(); ++j) {
        const Complex pair = ops[0].dot(cov * ops[j]) + Complex(0, 0.5 * symp(ops[0], ops[j]));
        std::vector<Vec4> rest;
        for (std::size_t k = 1; k < ops.size(); ++k)
            if (k != j) rest.push_back(ops[k]);
        total += pair * centered_wick(rest, cov);
    }
    return total;
}

// <A1 A2 ... An> for Gaussian states, A_i = v_i . x; mean parts commute out.
inline Complex wick_expectation(const std::vector<Vec4>& ops, const Vec4& mean, const Mat4& cov) {
    const std::size_t n = ops.size();
    Complex total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        Complex scalar = 1.0;
        std::vector<Vec4> rest;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1) scalar *= ops[i].dot(mean);
            else rest.push_back(ops[i]);
        }
        total += scalar * centered_wick(rest, cov);
    }
    return total;
}

// Classical Isserlis: phase-space moment E[prod x^e] of a Gaussian density.
inline double isserlis_moment(const std::vector<int>& exps, const Vec4& mean, const Mat4& cov) {
    std::vector<Vec4> ops;
    for (int v = 0; v < 4; ++v)
        for (int k = 0; k < exps[static_cast<std::size_t>(v)]; ++k) ops.push_back(Vec4::Unit(v));
    // Symmetrized products carry no commutator terms.
    std::function<double(const std::vector<Vec4>&)> rec = [&](const std::vector<Vec4>& o) -> double {
        if (o.empty()) return 1.0;
        if (o.size() % 2) return 0.0;
        double t = 0.0;
        for (std::size_t j = 1; j < o.size(); ++j) {
            std::vector<Vec4> rest;
            for (std::size_t k = 1; k < o.size(); ++k)
                if (k != j) rest.push_back(o[k]);
            t += o[0].dot(cov * o[j]) * rec(rest);
        }
        return t;
    };
    double total = 0.0;
    const std::size_t n = ops.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double scalar = 1.0;
        std::vector<Vec4> rest;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1) scalar *= ops[i].dot(mean);
            else rest.push_back(ops[i]);
        }
        total += scalar * rec(rest);
    }
    return total;
}

// Truncated Fock-basis Q and P with a|n> = sqrt(n)|n-1>.
inline MatC fock_q(int dim) {
    MatC q = MatC::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) q(n - 1, n) = q(n, n - 1) = std::sqrt(n / 2.0);
    return q;
}

inline MatC fock_p(int dim) {
    MatC p = MatC::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) {
        p(n - 1, n) = Complex(0, -std::sqrt(n / 2.0));
        p(n, n - 1) = Complex(0, std::sqrt(n / 2.0));
    }
    return p;
}

// Laplace expansion along the first row.
inline Complex cofactor_det(const MatC& m) {
    const auto n = m.rows();
    if (n == 0) return 1.0;
    if (n == 1) return m(0, 0);
    Complex det = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        MatC minor(n - 1, n - 1);
        for (Eigen::Index r = 1; r < n; ++r)
            for (Eigen::Index c = 0, cc = 0; c < n; ++c)
                if (c != j) minor(r - 1, cc++) = m(r, c);
        det += (j % 2 ? -1.0 : 1.0) * m(0, j) * cofactor_det(minor);
    }
    return det;
}

// sum_n n^k p_n for the geometric (thermal) distribution.
inline double geometric_moment(double nbar, int k) {
    double total = 0.0, p = 1.0 / (nbar + 1.0);
    const double ratio = nbar / (nbar + 1.0);
    for (int n = 0; n < 4000; ++n, p *= ratio) total += std::pow(n, k) * p;
    return total;
}

inline double poisson_moment(double mean, int k) {
    double total = 0.0, p = std::exp(-mean);
    for (int n = 0; n < 400; ++n) {
        total += std::pow(n, k) * p;
        p *= mean / (n + 1);
    }
    return total;
}

// <n1 n2> for the two-mode squeezed vacuum from its Schmidt decomposition
// sum_n tanh(r)^n / cosh(r) |n, n>.
inline double tmsv_cross(double r) {
    const double t2 = std::tanh(r) * std::tanh(r);
    double total = 0.0, p = 1.0 / (std::cosh(r) * std::cosh(r));
    for (int n = 0; n < 4000; ++n, p *= t2) total += double(n) * n * p;
    return total;
}

// Density of X = mu Q + nu P for a one-mode Gaussian Wigner function,
// integrated along the line by the trapezoid rule.
inline double line_integral_density(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov, double mu, double nu,
                                    double x) {
    const double s2 = mu * mu + nu * nu, s = std::sqrt(s2);
    const Eigen::Matrix2d inv = cov.inverse();
    const double norm = 1.0 / (2 * pi * std::sqrt(cov.determinant()));
    const double h = 1e-3, lim = 12.0;
    double total = 0.0;
    for (double t = -lim; t <= lim + 1e-12; t += h) {
        Eigen::Vector2d z(x * mu / s2 - t * nu / s, x * nu / s2 + t * mu / s);
        const Eigen::Vector2d d = z - mean;
        total += norm * std::exp(-0.5 * d.dot(inv * d));
    }
    return total * h / s;
}

}  // namespace oracle
