#pragma once

// Symplectic and optical tomograms. Gaussian states are handled in closed
// form; grid Wigner functions go through a rotate-and-accumulate Radon
// transform with bilinear interpolation.

#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "qtomo/mode_network.hpp"
#include "qtomo/quantum_state.hpp"

namespace qtomo {

struct SliceQuality {
    double raw_normalization = 1.0;  // before renormalization
    double min_value = 0.0;          // before clamping
    bool negativity_warning = false;
};

inline constexpr double kNegativityTolerance = 1e-9;

enum class Interpolation { bilinear, cubic };

struct RadonOptions {
    // Cubic convolution (Keys, a = -1/2) reproduces quadratics, so line sums
    // carry no h^2 smoothing bias; bilinear is kept for comparison.
    Interpolation interpolation = Interpolation::cubic;
};

struct AnalyticSlice {
    double mean = 0.0;
    double variance = 0.5;
};

struct GridSlice {
    GridAxis axis;
    std::vector<double> density;
};

/// Probability density of one quadrature X = v . (Q1, P1, Q2, P2).
struct TomogramSlice {
    std::variant<AnalyticSlice, GridSlice> data;
    QuadratureForm form;
    SliceQuality quality;

    bool analytic() const { return std::holds_alternative<AnalyticSlice>(data); }
    /// Grid slices interpolate linearly and vanish outside the axis.
    double density(double x) const;
    double normalization() const;
    double moment(int n) const;
    double mean() const { return moment(1); }
    double variance() const;
};

struct AnalyticJoint {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov = 0.5 * Eigen::Matrix2d::Identity();
};

/// density is row-major over (x1, x2).
struct GridJoint {
    GridAxis x1;
    GridAxis x2;
    std::vector<double> density;
};

/// Joint density of X1 = mu1 Q1 + nu1 P1 and X2 = mu2 Q2 + nu2 P2.
struct JointTomogram {
    std::variant<AnalyticJoint, GridJoint> data;
    double mu1 = 1.0, nu1 = 0.0, mu2 = 1.0, nu2 = 0.0;
    SliceQuality quality;

    bool analytic() const { return std::holds_alternative<AnalyticJoint>(data); }
    double density(double x1, double x2) const;
    double normalization() const;
    double moment(int n, int m) const;
};

double gaussian_density(double mean, double variance, double x);

/// Slice for an arbitrary linear form over (Q1, P1, Q2, P2).
TomogramSlice form_tomogram(const State& state, const QuadratureForm& form, const RadonOptions& opts = {});
TomogramSlice derived_mode_tomogram(const State& state, int mode, double theta, const RadonOptions& opts = {});

/// One-mode states (mode 1 of the form is used).
TomogramSlice one_mode_tomogram(const OneModeState& state, double mu, double nu, const RadonOptions& opts = {});

JointTomogram symplectic_tomogram(const State& state, double mu1, double nu1, double mu2, double nu2,
                                  const RadonOptions& opts = {});
JointTomogram optical_tomogram(const State& state, double theta1, double theta2, const RadonOptions& opts = {});

TomogramSlice marginalize(const JointTomogram& joint, int keep);

/// Line integrals of a 2D Wigner plane (values at index (a, b) are
/// values[(a * ap.count + b) * stride]) along X = mu q + nu p, written to
/// result[i] for every point of `out`. Uses the dq dp / (2 pi) measure.
void radon_plane(const double* values, std::size_t stride, const GridAxis& aq, const GridAxis& ap, double mu,
                 double nu, const GridAxis& out, double* result, Interpolation interp = Interpolation::cubic);

/// Keys cubic convolution kernel (a = -1/2).
double keys_weight(double x);
/// Cubic resampling of uniformly spaced values onto a grid `factor` times finer
/// (same end points); values outside are taken as 0.
std::vector<double> refine_cubic(std::span<const double> values, std::size_t factor);

/// Output axis covering the projection of the (aq, ap) box on X = mu q + nu p
/// with the given X step.
GridAxis projection_axis(const GridAxis& aq, const GridAxis& ap, double mu, double nu, double step);

/// Largest |a(x) - b(x)| over the probe points.
double linf_distance(const TomogramSlice& a, const TomogramSlice& b, const GridAxis& probe);
double linf_distance(const JointTomogram& a, const JointTomogram& b, const GridAxis& probe1, const GridAxis& probe2);
/// Largest deviation at the nodes of a grid tomogram, so no interpolation of
/// the grid enters the comparison.
double linf_at_nodes(const TomogramSlice& grid, const TomogramSlice& reference);
double linf_at_nodes(const JointTomogram& grid, const JointTomogram& reference);

/// Probe axis: the grid axis of `s` if it has one, else mean +- 8 sigma.
GridAxis probe_axis(const TomogramSlice& s, std::size_t count = 257);

/// Two-column CSV "x,density"; analytic slices are sampled on probe_axis.
void write_slice_csv(std::ostream& out, const TomogramSlice& slice);
/// Long-format CSV "x1,x2,density".
void write_joint_csv(std::ostream& out, const JointTomogram& joint, std::size_t count = 129);

}  // namespace qtomo
