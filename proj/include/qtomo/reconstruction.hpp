#pragma once

// Moments -> characteristic function -> tomogram / Wigner function.
//
// The characteristic function is the truncated series
//   sum_e (i K)^e / e! <x^e>,  |e| <= N
// either evaluated as written (SeriesForm::moment) or after converting the
// moments to cumulants and exponentiating the truncated log-series
// (SeriesForm::cumulant). Both agree term by term up to order N; the cumulant
// form has no truncation error for Gaussian states.

#include <array>
#include <optional>
#include <vector>

#include "qtomo/moment_engine.hpp"
#include "qtomo/tomography.hpp"

namespace qtomo {

enum class SeriesForm { moment, cumulant };

std::string to_string(SeriesForm f);
SeriesForm series_form_from_string(const std::string& s);

struct ReconstructionOptions {
    int order = 8;
    SeriesForm form = SeriesForm::cumulant;
    double truncation_epsilon = 1e-3;   // bound on the order-N term at the window edge
    std::optional<double> window;       // explicit K_max; must not exceed the admitted one
    double decay_sigmas = 6.0;          // otherwise axis v spans decay_sigmas * sqrt((C^-1)_vv)
    double x_window_sigmas = 6.0;       // output grids span mean +- this many sigma
    std::size_t tomogram_points = 129;  // output points per axis (2D)
    std::size_t wigner_points = 32;     // output points per axis (4D)
    std::size_t max_charfn_points = 65; // cap per axis for 4D characteristic functions
};

/// Exponent e of the monomial prod_v K_v^(e_v); unused dimensions are 0.
using Exponent = std::array<int, 4>;

struct SeriesTerm {
    Exponent exponent{};
    Complex coeff;  // of prod K^e in the series (moment form) or in the log (cumulant form)
};

struct CharFnSeries {
    int dims = 2;
    int order = 8;
    SeriesForm form = SeriesForm::cumulant;
    std::vector<SeriesTerm> terms;
    Eigen::VectorXd mean;  // first moments
    Eigen::MatrixXd cov;   // second cumulants
    double top_sum = 0.0;  // sum of |coeff| over the order-N terms
    double admitted_window = 0.0;
    std::array<double, 2> phases{0.0, 0.0};  // tomogram series only
};

/// Joint tomogram moments <X1^n X2^m> at (theta1, theta2).
CharFnSeries tomogram_series(const MomentSource& src, double theta1, double theta2,
                             const ReconstructionOptions& opts = {});
/// Weyl-symmetric phase-space moments in (q1, p1, q2, p2).
CharFnSeries wigner_series(const CrossMoments& moments, const ReconstructionOptions& opts = {});

Complex evaluate_series(const CharFnSeries& series, std::span<const double> k);

/// Complex field on a uniform grid, row-major with the last axis fastest.
struct GridField {
    std::vector<GridAxis> axes;
    std::vector<Complex> values;
    std::vector<GridAxis> target_axes;  // suggested output grid for the inverse
    std::array<double, 2> phases{0.0, 0.0};
    double window = 0.0;

    Complex at_origin() const;
};

GridField charfn_grid(const CharFnSeries& series, const ReconstructionOptions& opts = {});

GridField charfn_from_moments(const MomentSource& src, double theta1, double theta2,
                              const ReconstructionOptions& opts = {});
GridField wigner_charfn_from_moments(const CrossMoments& moments, const ReconstructionOptions& opts = {});

struct InversionQuality {
    double imaginary_residue = 0.0;  // max |Im| / max |Re|
    double raw_normalization = 1.0;
    double min_value = 0.0;
};

inline constexpr double kMaxImaginaryResidue = 1e-3;

/// Inverse transform with the 1/(2 pi)^2 normalization; renormalized joint density.
JointTomogram invert_to_tomogram(const GridField& field, InversionQuality* quality = nullptr);
/// Not renormalized: the raw normalization is part of the quality report.
GridWigner invert_to_wigner(const GridField& field, InversionQuality* quality = nullptr);

/// Moment and cumulant coefficient tables for a multivariate moment set
/// (key = exponent, value = raw moment); exposed for tests.
std::vector<SeriesTerm> moment_series_terms(const std::vector<std::pair<Exponent, double>>& moments, int dims,
                                            int order);
std::vector<SeriesTerm> cumulant_series_terms(const std::vector<std::pair<Exponent, double>>& moments, int dims,
                                              int order);

}  // namespace qtomo
