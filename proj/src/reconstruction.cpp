#include "qtomo/reconstruction.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace qtomo {

std::string to_string(SeriesForm f) { return f == SeriesForm::moment ? "moment" : "cumulant"; }

SeriesForm series_form_from_string(const std::string& s) {
    if (s == "moment") return SeriesForm::moment;
    if (s == "cumulant") return SeriesForm::cumulant;
    throw InvalidArgument("unknown series form '" + s + "' (expected moment or cumulant)");
}

namespace {

using Poly = std::map<Exponent, Complex>;

int total_degree(const Exponent& e) { return e[0] + e[1] + e[2] + e[3]; }

double exponent_factorial(const Exponent& e) {
    return factorial(e[0]) * factorial(e[1]) * factorial(e[2]) * factorial(e[3]);
}

Complex i_power(int n) {
    static const Complex table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return table[n % 4];
}

Poly truncated_product(const Poly& a, const Poly& b, int order) {
    Poly out;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) {
            Exponent e{ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]};
            if (total_degree(e) > order) continue;
            out[e] += ca * cb;
        }
    return out;
}

// f_e = i^|e| <x^e> / e!
Poly moment_poly(const std::vector<std::pair<Exponent, double>>& moments, int dims, int order) {
    Poly f;
    for (const auto& [e, m] : moments) {
        for (int v = dims; v < 4; ++v)
            if (e[static_cast<std::size_t>(v)] != 0) throw InvalidArgument("exponent uses an unused dimension");
        if (total_degree(e) > order) continue;
        f[e] = i_power(total_degree(e)) * m / exponent_factorial(e);
    }
    const Exponent zero{};
    if (!f.count(zero)) throw MissingData("zeroth moment missing");
    return f;
}

std::vector<SeriesTerm> to_terms(const Poly& p) {
    std::vector<SeriesTerm> out;
    for (const auto& [e, c] : p)
        if (c != Complex{}) out.push_back({e, c});
    return out;
}

}  // namespace

std::vector<SeriesTerm> moment_series_terms(const std::vector<std::pair<Exponent, double>>& moments, int dims,
                                            int order) {
    return to_terms(moment_poly(moments, dims, order));
}

std::vector<SeriesTerm> cumulant_series_terms(const std::vector<std::pair<Exponent, double>>& moments, int dims,
                                              int order) {
    Poly f = moment_poly(moments, dims, order);
    const Complex f0 = f[Exponent{}];
    if (std::abs(f0) < 1e-300) throw DataQualityError("zeroth moment vanishes");
    // log f = log f0 + log(1 + u), u = f / f0 - 1 has no constant term.
    Poly u;
    for (const auto& [e, c] : f)
        if (total_degree(e) > 0) u[e] = c / f0;
    Poly log_f, power = u;
    for (int k = 1; k <= order && !power.empty(); ++k) {
        const double sign = k % 2 ? 1.0 : -1.0;
        for (const auto& [e, c] : power) log_f[e] += sign * c / static_cast<double>(k);
        power = truncated_product(power, u, order);
    }
    log_f[Exponent{}] += std::log(f0);
    return to_terms(log_f);
}

namespace {

CharFnSeries finish_series(const std::vector<std::pair<Exponent, double>>& moments, int dims,
                           const ReconstructionOptions& opts) {
    if (opts.order < 2 || opts.order > kMaxOrder)
        throw InvalidArgument("series order must be in [2, " + std::to_string(kMaxOrder) + "]");
    if (!(opts.truncation_epsilon > 0)) throw InvalidArgument("truncation epsilon must be positive");
    CharFnSeries s;
    s.dims = dims;
    s.order = opts.order;
    s.form = opts.form;
    s.terms = opts.form == SeriesForm::moment ? moment_series_terms(moments, dims, opts.order)
                                              : cumulant_series_terms(moments, dims, opts.order);

    std::map<Exponent, double> raw(moments.begin(), moments.end());
    auto raw_at = [&](Exponent e) {
        auto it = raw.find(e);
        if (it == raw.end()) throw MissingData("moment of order " + std::to_string(total_degree(e)) + " missing");
        return it->second;
    };
    s.mean = Eigen::VectorXd(dims);
    s.cov = Eigen::MatrixXd(dims, dims);
    for (int v = 0; v < dims; ++v) {
        Exponent e{};
        e[static_cast<std::size_t>(v)] = 1;
        s.mean(v) = raw_at(e);
    }
    for (int v = 0; v < dims; ++v)
        for (int w = 0; w < dims; ++w) {
            Exponent e{};
            e[static_cast<std::size_t>(v)] += 1;
            e[static_cast<std::size_t>(w)] += 1;
            s.cov(v, w) = raw_at(e) - s.mean(v) * s.mean(w);
        }

    for (const auto& t : s.terms)
        if (total_degree(t.exponent) == s.order) s.top_sum += std::abs(t.coeff);
    s.admitted_window = s.top_sum > 0 ? std::pow(opts.truncation_epsilon / s.top_sum, 1.0 / s.order)
                                      : std::numeric_limits<double>::infinity();
    return s;
}

}  // namespace

CharFnSeries tomogram_series(const MomentSource& src, double theta1, double theta2,
                             const ReconstructionOptions& opts) {
    if (!src.has_joint(theta1, theta2))
        throw MissingData("no joint data at phases (" + format_number(theta1) + ", " + format_number(theta2) + ")");
    std::vector<std::pair<Exponent, double>> moments;
    for (int n = 0; n <= opts.order; ++n)
        for (int m = 0; n + m <= opts.order; ++m)
            moments.push_back({Exponent{n, m, 0, 0}, src.joint_moment(theta1, theta2, n, m)});
    CharFnSeries s = finish_series(moments, 2, opts);
    s.phases = {theta1, theta2};
    return s;
}

CharFnSeries wigner_series(const CrossMoments& table, const ReconstructionOptions& opts) {
    std::vector<std::pair<Exponent, double>> moments;
    double worst_imag = 0.0;
    for (int a = 0; a <= opts.order; ++a)
        for (int b = 0; a + b <= opts.order; ++b)
            for (int c = 0; a + b + c <= opts.order; ++c)
                for (int d = 0; a + b + c + d <= opts.order; ++d) {
                    const Complex m = table.symmetric_moment(a, b, c, d);
                    worst_imag = std::max(worst_imag, std::abs(m.imag()) / std::max(1.0, std::abs(m.real())));
                    moments.push_back({Exponent{a, b, c, d}, m.real()});
                }
    if (worst_imag > 1e-6)
        throw DataQualityError("symmetric moments have an imaginary part of " + format_number(worst_imag, 3));
    return finish_series(moments, 4, opts);
}

Complex evaluate_series(const CharFnSeries& series, std::span<const double> k) {
    if (k.size() != static_cast<std::size_t>(series.dims)) throw InvalidArgument("wrong number of arguments");
    Complex sum{};
    for (const auto& t : series.terms) {
        Complex term = t.coeff;
        for (int v = 0; v < series.dims; ++v) term *= std::pow(k[static_cast<std::size_t>(v)], t.exponent[static_cast<std::size_t>(v)]);
        sum += term;
    }
    return series.form == SeriesForm::cumulant ? std::exp(sum) : sum;
}

Complex GridField::at_origin() const {
    std::size_t flat = 0;
    for (const auto& a : axes) {
        const auto i = static_cast<std::size_t>(std::llround(-a.min / a.step));
        if (i >= a.count || std::abs(a.at(i)) > 1e-12 * a.step) throw InvalidArgument("grid does not contain the origin");
        flat = flat * a.count + i;
    }
    return values.at(flat);
}

GridField charfn_grid(const CharFnSeries& series, const ReconstructionOptions& opts) {
    const int d = series.dims;
    if (d != 2 && d != 4) throw InvalidArgument("series must have 2 or 4 dimensions");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(series.cov);
    const double var_min = eig.eigenvalues().minCoeff();
    if (!(var_min > 0)) throw DataQualityError("second moments do not form a positive covariance");

    // Each axis spans the bounding box of K^T C K <= decay^2, i.e.
    // decay * sqrt((C^-1)_vv), unless an explicit window is given.
    const Eigen::MatrixXd precision = series.cov.inverse();
    std::vector<double> extent(static_cast<std::size_t>(d));
    for (int v = 0; v < d; ++v)
        extent[static_cast<std::size_t>(v)] =
            std::min(opts.decay_sigmas * std::sqrt(precision(v, v)), series.admitted_window);
    double window = *std::max_element(extent.begin(), extent.end());
    if (opts.window) {
        if (!(*opts.window > 0)) throw InvalidArgument("window must be positive");
        if (*opts.window > series.admitted_window * (1 + 1e-12))
            throw InvalidArgument("window " + format_number(*opts.window) + " too large for order " +
                                  std::to_string(series.order) + " (admitted " +
                                  format_number(series.admitted_window) + ")");
        window = *opts.window;
        std::fill(extent.begin(), extent.end(), window);
    }

    GridField field;
    field.window = window;
    field.phases = series.phases;
    const std::size_t cap = d == 4 ? opts.max_charfn_points : std::size_t{2049};
    const std::size_t out_points = d == 4 ? opts.wigner_points : opts.tomogram_points;
    if (out_points < 2) throw InvalidArgument("output grid needs at least 2 points per axis");
    for (int v = 0; v < d; ++v) {
        const double sigma = std::sqrt(series.cov(v, v));
        // Period 2 * x_window * sigma keeps aliases of the output window out of it.
        double step = kTwoPi / (2.0 * opts.x_window_sigmas * sigma);
        const double kmax = extent[static_cast<std::size_t>(v)];
        auto half = static_cast<std::size_t>(std::ceil(kmax / step - 1e-9));
        half = std::max<std::size_t>(half, 1);
        if (2 * half + 1 > cap) {
            half = (cap - 1) / 2;
            step = kmax / static_cast<double>(half);
        }
        field.axes.push_back({-step * static_cast<double>(half), step, 2 * half + 1});
        const double lo = series.mean(v) - opts.x_window_sigmas * sigma;
        const double hi = series.mean(v) + opts.x_window_sigmas * sigma;
        field.target_axes.push_back({lo, (hi - lo) / static_cast<double>(out_points - 1), out_points});
    }

    // Powers of each axis' samples.
    std::vector<std::vector<std::vector<double>>> pw(static_cast<std::size_t>(d));
    for (int v = 0; v < d; ++v) {
        const auto& ax = field.axes[static_cast<std::size_t>(v)];
        auto& table = pw[static_cast<std::size_t>(v)];
        table.assign(ax.count, std::vector<double>(static_cast<std::size_t>(series.order + 1), 1.0));
        for (std::size_t i = 0; i < ax.count; ++i)
            for (int p = 1; p <= series.order; ++p) table[i][static_cast<std::size_t>(p)] = table[i][static_cast<std::size_t>(p - 1)] * ax.at(i);
    }

    // Separable evaluation: the first half of the axes is contracted per outer
    // point, leaving a short polynomial in the remaining axes.
    const int h = d / 2;
    std::map<std::array<int, 2>, std::size_t> inner_index;
    std::vector<std::array<int, 2>> inner_exps;
    std::vector<std::size_t> term_inner;
    for (const auto& t : series.terms) {
        std::array<int, 2> ie{t.exponent[static_cast<std::size_t>(h)], h + 1 < d ? t.exponent[static_cast<std::size_t>(h + 1)] : 0};
        auto [it, fresh] = inner_index.emplace(ie, inner_exps.size());
        if (fresh) inner_exps.push_back(ie);
        term_inner.push_back(it->second);
    }
    auto count_of = [&](int v) { return field.axes[static_cast<std::size_t>(v)].count; };
    std::size_t n_outer = 1, n_inner = 1;
    for (int v = 0; v < h; ++v) n_outer *= count_of(v);
    for (int v = h; v < d; ++v) n_inner *= count_of(v);

    std::vector<double> inner_mono(n_inner * inner_exps.size());
    for (std::size_t ii = 0; ii < n_inner; ++ii) {
        const std::size_t i0 = h + 1 < d ? ii / count_of(h + 1) : ii;
        const std::size_t i1 = h + 1 < d ? ii % count_of(h + 1) : 0;
        for (std::size_t j = 0; j < inner_exps.size(); ++j) {
            double m = pw[static_cast<std::size_t>(h)][i0][static_cast<std::size_t>(inner_exps[j][0])];
            if (h + 1 < d) m *= pw[static_cast<std::size_t>(h + 1)][i1][static_cast<std::size_t>(inner_exps[j][1])];
            inner_mono[ii * inner_exps.size() + j] = m;
        }
    }

    field.values.resize(n_outer * n_inner);
    std::vector<Complex> coef(inner_exps.size());
    for (std::size_t oo = 0; oo < n_outer; ++oo) {
        const std::size_t o0 = h > 1 ? oo / count_of(1) : oo;
        const std::size_t o1 = h > 1 ? oo % count_of(1) : 0;
        std::fill(coef.begin(), coef.end(), Complex{});
        for (std::size_t t = 0; t < series.terms.size(); ++t) {
            const auto& e = series.terms[t].exponent;
            double m = pw[0][o0][static_cast<std::size_t>(e[0])];
            if (h > 1) m *= pw[1][o1][static_cast<std::size_t>(e[1])];
            coef[term_inner[t]] += series.terms[t].coeff * m;
        }
        for (std::size_t ii = 0; ii < n_inner; ++ii) {
            Complex s{};
            const double* mono = &inner_mono[ii * inner_exps.size()];
            for (std::size_t j = 0; j < coef.size(); ++j) s += coef[j] * mono[j];
            field.values[oo * n_inner + ii] = series.form == SeriesForm::cumulant ? std::exp(s) : s;
        }
    }
    return field;
}

GridField charfn_from_moments(const MomentSource& src, double theta1, double theta2,
                              const ReconstructionOptions& opts) {
    return charfn_grid(tomogram_series(src, theta1, theta2, opts), opts);
}

GridField wigner_charfn_from_moments(const CrossMoments& moments, const ReconstructionOptions& opts) {
    return charfn_grid(wigner_series(moments, opts), opts);
}

namespace {

// values(K) -> (1/(2 pi)^2) sum_K values(K) exp(-i K . x) prod dK, one axis at a time.
std::vector<double> inverse_transform(const GridField& field, InversionQuality& q) {
    const std::size_t d = field.axes.size();
    if (field.target_axes.size() != d) throw InvalidArgument("field has no output grid");
    std::vector<std::size_t> dims;
    for (const auto& a : field.axes) dims.push_back(a.count);
    std::vector<Complex> cur = field.values;
    for (std::size_t a = 0; a < d; ++a) {
        const auto& kin = field.axes[a];
        const auto& xout = field.target_axes[a];
        std::size_t outer = 1, inner = 1;
        for (std::size_t v = 0; v < a; ++v) outer *= dims[v];
        for (std::size_t v = a + 1; v < d; ++v) inner *= dims[v];
        std::vector<Complex> kernel(xout.count * kin.count);
        for (std::size_t x = 0; x < xout.count; ++x)
            for (std::size_t k = 0; k < kin.count; ++k)
                kernel[x * kin.count + k] = std::polar(kin.step, -kin.at(k) * xout.at(x));
        std::vector<Complex> next(outer * xout.count * inner);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t x = 0; x < xout.count; ++x) {
                Complex* dst = &next[(o * xout.count + x) * inner];
                for (std::size_t k = 0; k < kin.count; ++k) {
                    const Complex w = kernel[x * kin.count + k];
                    const Complex* srcp = &cur[(o * kin.count + k) * inner];
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += w * srcp[i];
                }
            }
        cur.swap(next);
        dims[a] = xout.count;
    }
    const double norm = 1.0 / (kTwoPi * kTwoPi);
    std::vector<double> out(cur.size());
    double max_re = 0.0, max_im = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
        out[i] = cur[i].real() * norm;
        max_re = std::max(max_re, std::abs(cur[i].real()));
        max_im = std::max(max_im, std::abs(cur[i].imag()));
    }
    q.imaginary_residue = max_re > 0 ? max_im / max_re : 0.0;
    if (q.imaginary_residue > kMaxImaginaryResidue)
        throw DataQualityError("inverse transform has imaginary residue " + format_number(q.imaginary_residue, 3) +
                               "; moments are inconsistent or insufficient");
    q.min_value = out.empty() ? 0.0 : *std::min_element(out.begin(), out.end());
    return out;
}

}  // namespace

JointTomogram invert_to_tomogram(const GridField& field, InversionQuality* quality) {
    if (field.axes.size() != 2) throw InvalidArgument("tomogram inversion needs a 2D field");
    InversionQuality q;
    std::vector<double> w = inverse_transform(field, q);
    const double cell = field.target_axes[0].step * field.target_axes[1].step;
    double sum = 0.0;
    for (double v : w) sum += v;
    q.raw_normalization = sum * cell;
    double clamped = 0.0;
    for (double& v : w) {
        v = std::max(v, 0.0);
        clamped += v;
    }
    if (!(clamped > 0)) throw DataQualityError("reconstructed tomogram has no positive mass");
    for (double& v : w) v /= clamped * cell;

    JointTomogram t;
    t.data = GridJoint{field.target_axes[0], field.target_axes[1], std::move(w)};
    t.mu1 = std::cos(field.phases[0]);
    t.nu1 = std::sin(field.phases[0]);
    t.mu2 = std::cos(field.phases[1]);
    t.nu2 = std::sin(field.phases[1]);
    t.quality.raw_normalization = q.raw_normalization;
    t.quality.min_value = q.min_value;
    t.quality.negativity_warning = q.min_value < -kNegativityTolerance;
    if (quality) *quality = q;
    return t;
}

GridWigner invert_to_wigner(const GridField& field, InversionQuality* quality) {
    if (field.axes.size() != 4) throw InvalidArgument("Wigner inversion needs a 4D field");
    InversionQuality q;
    std::vector<double> w = inverse_transform(field, q);
    GridWigner grid(field.target_axes, std::move(w));
    q.raw_normalization = grid.normalization();
    if (quality) *quality = q;
    return grid;
}

}  // namespace qtomo
