#pragma once

// Ground-truth two-mode states.
//
// Conventions used throughout the library:
//   * hbar = 1, [Q, P] = i, vacuum variance 1/2.
//   * Canonical quadrature ordering (Q1, P1, Q2, P2). Other orderings only
//     appear at the Robertson-matrix boundary (see Ordering).
//   * Wigner functions are normalized with measure dq dp / (2 pi) per mode, so
//     the two-mode vacuum is W = 4 exp(-(q1^2 + p1^2 + q2^2 + p2^2)).
//   * squeezed(r, phi) shrinks the variance along the direction phi by
//     exp(-2r); phi = 0 squeezes Q.
//   * coherent(alpha) has <Q> = sqrt(2) Re alpha, <P> = sqrt(2) Im alpha.

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qtomo/common.hpp"

namespace qtomo {

enum class Quadrature { Q1 = 0, P1 = 1, Q2 = 2, P2 = 3 };

std::string to_string(Quadrature q);

/// Basis orderings for dispersion / Robertson matrices.
enum class Ordering {
    canonical,    // (Q1, P1, Q2, P2)
    sigma,        // (P1, P2, Q1, Q2)
    sigma_prime,  // (Q1, Q2, P1, P2)
};

std::array<Quadrature, 4> basis(Ordering ordering);
std::string to_string(Ordering ordering);

/// Antisymmetric matrix J with [A, B] = i J_AB for the basis of `ordering`.
struct CommutatorMatrix {
    Ordering ordering = Ordering::canonical;
    Mat4 entries = Mat4::Zero();
};

CommutatorMatrix commutator_matrix(Ordering ordering);

/// Permutation P with (P x)_i = x_{basis(ordering)[i]} for canonical x.
Mat4 permutation_from_canonical(Ordering ordering);

class GaussianState {
public:
    /// Throws InvalidArgument when cov is not symmetric or not finite.
    GaussianState(const Vec4& mean, const Mat4& cov);

    static GaussianState vacuum();

    const Vec4& mean() const { return mean_; }
    const Mat4& cov() const { return cov_; }

private:
    Vec4 mean_;
    Mat4 cov_;
};

struct OneModeGaussian {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov = 0.5 * Eigen::Matrix2d::Identity();
};

struct GridAxis {
    double min = 0.0;
    double step = 1.0;
    std::size_t count = 0;

    double at(std::size_t i) const { return min + step * static_cast<double>(i); }
    double max() const { return at(count - 1); }
};

/// Wigner function sampled on a uniform grid. One-mode grids have axes (q, p);
/// two-mode grids have axes (q1, p1, q2, p2). Values are stored row-major with
/// the last axis fastest.
class GridWigner {
public:
    GridWigner(std::vector<GridAxis> axes, std::vector<double> values);

    int modes() const { return static_cast<int>(axes_.size()) / 2; }
    const std::vector<GridAxis>& axes() const { return axes_; }
    std::span<const double> values() const { return values_; }

    std::size_t flat_index(std::span<const std::size_t> idx) const;

    /// Sum of values times cell volume divided by (2 pi)^modes.
    double normalization() const;
    double cell_volume() const;

    /// Multilinear interpolation; throws InvalidArgument outside the grid.
    double interpolate(std::span<const double> point) const;

    /// Returns a copy rescaled so that normalization() == 1.
    GridWigner normalized() const;

private:
    std::vector<GridAxis> axes_;
    std::vector<double> values_;
};

using State = std::variant<GaussianState, GridWigner>;
using OneModeState = std::variant<OneModeGaussian, GridWigner>;

enum class StateKind { vacuum, coherent, squeezed, two_mode_squeezed, thermal, gaussian, grid };

std::string to_string(StateKind kind);
StateKind state_kind_from_string(const std::string& name);

/// Declarative description of a state; serialized as {"kind": ..., "params": {...}}.
///
/// Recognized params:
///   coherent:  alpha1_re, alpha1_im, alpha2_re, alpha2_im
///   squeezed:  r1, phi1, r2, phi2
///   two_mode_squeezed: r
///   thermal:   nbar1, nbar2
///   gaussian:  mean (4-vector), cov (4x4), allow_unphysical (bool)
///   grid:      file (path to a binary grid file)
/// Every Gaussian kind also accepts displacement offsets q1, p1, q2, p2.
struct StateDescriptor {
    StateKind kind = StateKind::vacuum;
    std::map<std::string, double> params;
    std::optional<Vec4> mean;
    std::optional<Mat4> cov;
    bool allow_unphysical = false;
    std::string grid_file;
};

nlohmann::json to_json(const StateDescriptor& desc);
StateDescriptor descriptor_from_json(const nlohmann::json& j);

State make_state(const StateDescriptor& desc);
/// make_state for descriptors known to be Gaussian; throws for grid kinds.
GaussianState make_gaussian(const StateDescriptor& desc);

struct PhysicalityResult {
    bool physical = false;
    double min_eigenvalue = 0.0;
};

inline constexpr double kPhysicalityTolerance = 1e-10;

/// Checks cov + (i/2) J >= -tol. Throws InvalidArgument on non-symmetric input.
PhysicalityResult validate_physicality(const Mat4& cov, double tol = kPhysicalityTolerance);
PhysicalityResult validate_physicality(const GaussianState& state,
                                       double tol = kPhysicalityTolerance);

double wigner_eval(const GaussianState& state, const Vec4& point);
double wigner_eval(const OneModeGaussian& state, double q, double p);
double wigner_eval(const State& state, double q1, double p1, double q2, double p2);

OneModeGaussian reduce_to_mode(const GaussianState& state, int mode);
OneModeState reduce_to_mode(const State& state, int mode);
GridWigner reduce_to_mode(const GridWigner& grid, int mode);

/// Sample a Gaussian Wigner function on a grid spanning mean +- window_sigmas
/// standard deviations along every axis.
GridWigner sample_wigner_grid(const GaussianState& state, std::size_t points_per_axis = 32,
                              double window_sigmas = 6.0);
GridWigner sample_wigner_grid(const OneModeGaussian& state, std::size_t points_per_axis = 128,
                              double window_sigmas = 6.0);

// Binary grid file: one line of JSON header, then little-endian float64 values.
void write_grid_file(const std::string& path, const GridWigner& grid);
GridWigner read_grid_file(const std::string& path);

nlohmann::json gaussian_to_json(const GaussianState& state);
GaussianState gaussian_from_json(const nlohmann::json& j);

}  // namespace qtomo
