#pragma once

// Quadrature moments from tomogram moments: variances and covariances of all
// four quadratures, antistandard-ordered one-mode moments <P^m Q^k> and the
// two-mode table <P1^m1 Q1^k1 P2^m2 Q2^k2>.

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "qtomo/moment_source.hpp"
#include "qtomo/weyl_algebra.hpp"

namespace qtomo {

/// Variance of X_mode(theta); canonical=true rescales derived modes by 2.
double slice_variance(const MomentSource& src, int mode, double theta, bool canonical = true);

struct ModeCovariance {
    Estimate qq, pp, qp;
};

/// sigma_QQ from theta = 0, sigma_PP from pi/2, sigma_QP from pi/4; canonical
/// quadratures for every mode.
ModeCovariance variances_covariances(const MomentSource& src, int mode);

struct CrossCovariances {
    Estimate q1q2, p1p2, q1p2, q2p1;
};

/// From modes 3 and 5 at theta in {0, pi/2}.
CrossCovariances cross_covariances(const MomentSource& src);
/// Same four entries from modes 4 and 6.
CrossCovariances cross_covariances_redundant(const MomentSource& src);

struct ConsistencyEntry {
    std::string name;
    Estimate primary;
    Estimate redundant;
    Estimate difference;
    bool flagged = false;
};

struct CrossValidation {
    std::vector<ConsistencyEntry> entries;
    std::vector<std::string> skipped;

    bool consistent() const;
};

struct CrossValidationOptions {
    double z = 5.0;
    double tolerance = 1e-10;
};

/// Compares the mode-3/5 cross covariances with the mode-4/6 ones and every
/// derived-mode mean with the value predicted from the mode 1/2 means.
CrossValidation cross_validate(const MomentSource& src, const CrossValidationOptions& opts = {});

/// Canonical ordering (Q1, P1, Q2, P2). Throws MissingData listing every
/// entry that cannot be formed.
Mat4 dispersion_value(const MomentSource& src);
Vec4 mean_value(const MomentSource& src);

struct DispersionEstimate {
    Mat4 value = Mat4::Zero();
    Mat4 error = Mat4::Zero();
};

DispersionEstimate dispersion_matrix(const MomentSource& src);

/// Names of the ten independent dispersion entries that src cannot supply.
std::vector<std::string> missing_dispersion_entries(const MomentSource& src);

/// Canonical pair of a mode rotated by theta: Q = X(theta), P = X(theta + pi/2),
/// rescaled so that [Q, P] = i.
struct ModeFrame {
    int mode = 1;
    double theta = 0.0;
};

/// <X^n> at frame angle phi, i.e. of cos(phi) Q + sin(phi) P.
double frame_moment(const MomentSource& src, const ModeFrame& frame, double phi, int n);

/// Solver phases for degree n: pi/4 for n = 2, (pi/3, 2pi/3) for n = 3,
/// otherwise the first n - 1 of j pi / (n + 1) that avoid pi/2.
std::vector<double> default_solver_phases(int n);

using SolverPhases = std::map<int, std::vector<double>>;

/// Exact <P^m Q^k> values of one source in one frame.
class OrderedMoments {
public:
    OrderedMoments();

    bool has(int m, int k) const { return values_.count({m, k}) != 0; }
    Complex at(int m, int k) const;
    void set(int m, int k, Complex v) { values_[{m, k}] = v; }
    const std::map<OrderedMonomial, Complex>& values() const { return values_; }
    int max_degree() const;

private:
    std::map<OrderedMonomial, Complex> values_;
};

struct SolveDiagnostics {
    int degree = 0;
    std::vector<double> phases;
    double relative_determinant = 1.0;
    double condition_number = 1.0;
};

inline constexpr double kDesignTolerance = 1e-10;

/// Solves the degree-n entries in place. Entries of degree n-2, n-4, ... must
/// already be present. Throws SingularConfiguration for degenerate phases.
SolveDiagnostics solve_ordered_degree(const MomentSource& src, const ModeFrame& frame, int n,
                                      const std::vector<double>& phases, OrderedMoments& table);

/// Every degree 1..max_degree (or only those with the parity of max_degree).
OrderedMoments solve_ordered_moments(const MomentSource& src, const ModeFrame& frame, int max_degree,
                                     const SolverPhases& phases = {}, bool same_parity_only = false,
                                     std::vector<SolveDiagnostics>* diagnostics = nullptr);

struct OrderedEntry {
    int m = 0;
    int k = 0;
    Complex value;
    double error = 0.0;  // sqrt(var Re + var Im) over bootstrap replicates
};

struct OrderedMomentTable {
    ModeFrame frame;
    std::vector<OrderedEntry> entries;

    const OrderedEntry& entry(int m, int k) const;
    Complex at(int m, int k) const { return entry(m, k).value; }
};

OrderedMomentTable ordered_moment_table(const MomentSource& src, const ModeFrame& frame, int max_degree,
                                        const SolverPhases& phases = {}, bool same_parity_only = false);

nlohmann::json to_json(const OrderedMomentTable& table);

/// Recomposes <X^n> at frame angle phi from the table via the antistandard
/// expansion of (cos phi Q + sin phi P)^n.
Complex recompose_quadrature_moment(const OrderedMoments& table, double phi, int n);

/// Two-mode antistandard table: key (m1, k1, m2, k2).
class CrossMoments {
public:
    using Key = std::array<int, 4>;

    bool has(const Key& key) const { return values_.count(key) != 0; }
    Complex at(const Key& key) const;
    void set(const Key& key, Complex v) { values_[key] = v; }
    const std::map<Key, Complex>& values() const { return values_; }

    /// One-mode view (the other mode's powers set to zero).
    OrderedMoments mode_view(int mode) const;

    /// <W(q1^a p1^b) W(q2^c p2^d)>: Weyl-symmetric moment, i.e. the phase-space
    /// moment of the Wigner function.
    Complex symmetric_moment(int a, int b, int c, int d) const;

private:
    std::map<Key, Complex> values_;
};

/// Solves every entry with total degree <= max_degree from joint moments at
/// phases i pi / (n + 1), i = 0..n for each mode.
CrossMoments solve_cross_moments(const MomentSource& src, int max_degree);

}  // namespace qtomo
