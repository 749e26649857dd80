#include "qtomo/tomography.hpp"

#include <array>
#include <cstdio>
#include <ostream>

namespace qtomo {

namespace {

double double_factorial_odd(int j) {
    // (j - 1)!! for even j
    double r = 1.0;
    for (int k = j - 1; k > 1; k -= 2) r *= k;
    return r;
}

double axis_density(const GridAxis& axis, const std::vector<double>& d, double x) {
    double u = (x - axis.min) / axis.step;
    if (u < 0.0 || u > static_cast<double>(axis.count - 1)) return 0.0;
    auto i = static_cast<std::size_t>(u);
    if (i >= axis.count - 1) return d[axis.count - 1];
    double f = u - static_cast<double>(i);
    return (1.0 - f) * d[i] + f * d[i + 1];
}

// Clamps negatives, records quality and renormalizes so that sum * cell == 1.
SliceQuality finish_density(std::vector<double>& d, double cell) {
    SliceQuality q;
    double sum = 0.0;
    double lo = 0.0;
    for (double v : d) {
        sum += v;
        lo = std::min(lo, v);
    }
    q.raw_normalization = sum * cell;
    q.min_value = lo;
    q.negativity_warning = lo < -kNegativityTolerance;
    double clamped = 0.0;
    for (double& v : d) {
        v = std::max(v, 0.0);
        clamped += v;
    }
    if (!(clamped > 0.0)) throw DataQualityError("tomogram has no positive mass on the grid");
    for (double& v : d) v /= clamped * cell;
    return q;
}

const GridWigner& two_mode_grid(const State& state) {
    const auto& g = std::get<GridWigner>(state);
    if (g.modes() != 2) throw InvalidArgument("two-mode tomograms need a two-mode grid");
    return g;
}

double min_step(const GridAxis& a, const GridAxis& b) { return std::min(a.step, b.step); }

GridJoint grid_joint(const GridWigner& grid, double mu1, double nu1, double mu2, double nu2, double step,
                     Interpolation interp) {
    const auto& ax = grid.axes();
    const std::size_t n2n3 = ax[2].count * ax[3].count;
    GridAxis out1 = projection_axis(ax[0], ax[1], mu1, nu1, step);
    GridAxis out2 = projection_axis(ax[2], ax[3], mu2, nu2, step);
    auto v = grid.values();

    // Stage 1: integrate mode 1 for every (q2, p2) node.
    std::vector<double> stage1(out1.count * n2n3);
    std::vector<double> line(out1.count);
    for (std::size_t k = 0; k < n2n3; ++k) {
        radon_plane(v.data() + k, n2n3, ax[0], ax[1], mu1, nu1, out1, line.data(), interp);
        for (std::size_t i = 0; i < out1.count; ++i) stage1[i * n2n3 + k] = line[i];
    }
    // Stage 2: integrate mode 2 for every X1 bin.
    GridJoint joint{out1, out2, std::vector<double>(out1.count * out2.count)};
    for (std::size_t i = 0; i < out1.count; ++i)
        radon_plane(stage1.data() + i * n2n3, 1, ax[2], ax[3], mu2, nu2, out2, joint.density.data() + i * out2.count,
                    interp);
    return joint;
}

void require_form(double mu, double nu) {
    if (mu == 0.0 && nu == 0.0) throw InvalidArgument("degenerate quadrature form: mu = nu = 0");
}

}  // namespace

double keys_weight(double x) {
    x = std::fabs(x);
    if (x < 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
    if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
    return 0.0;
}

std::vector<double> refine_cubic(std::span<const double> values, std::size_t factor) {
    if (factor == 0) throw InvalidArgument("refinement factor must be at least 1");
    const std::size_t n = values.size();
    if (n < 2 || factor == 1) return {values.begin(), values.end()};
    auto at = [&](long i) { return i < 0 || i >= static_cast<long>(n) ? 0.0 : values[static_cast<std::size_t>(i)]; };
    std::vector<double> out((n - 1) * factor + 1);
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(factor);
        const long i0 = static_cast<long>(std::floor(t));
        double v = 0.0;
        for (long k = i0 - 1; k <= i0 + 2; ++k) v += at(k) * keys_weight(t - static_cast<double>(k));
        out[j] = v;
    }
    return out;
}


double gaussian_density(double mean, double variance, double x) {
    double d = x - mean;
    return std::exp(-0.5 * d * d / variance) / std::sqrt(kTwoPi * variance);
}

double TomogramSlice::density(double x) const {
    if (const auto* a = std::get_if<AnalyticSlice>(&data)) return gaussian_density(a->mean, a->variance, x);
    const auto& g = std::get<GridSlice>(data);
    return axis_density(g.axis, g.density, x);
}

double TomogramSlice::normalization() const {
    if (analytic()) return 1.0;
    const auto& g = std::get<GridSlice>(data);
    double s = 0.0;
    for (double v : g.density) s += v;
    return s * g.axis.step;
}

double TomogramSlice::moment(int n) const {
    if (n < 0) throw InvalidArgument("moment order must be non-negative");
    if (const auto* a = std::get_if<AnalyticSlice>(&data)) {
        double sum = 0.0;
        for (int j = 0; j <= n; j += 2)
            sum += binomial(n, j) * std::pow(a->mean, n - j) * std::pow(a->variance, j / 2) * double_factorial_odd(j);
        return sum;
    }
    const auto& g = std::get<GridSlice>(data);
    double s = 0.0;
    for (std::size_t i = 0; i < g.density.size(); ++i) s += std::pow(g.axis.at(i), n) * g.density[i];
    return s * g.axis.step;
}

double TomogramSlice::variance() const {
    if (const auto* a = std::get_if<AnalyticSlice>(&data)) return a->variance;
    double m = moment(1);
    return moment(2) - m * m;
}

double JointTomogram::density(double x1, double x2) const {
    if (const auto* a = std::get_if<AnalyticJoint>(&data)) {
        Eigen::Vector2d d(x1 - a->mean(0), x2 - a->mean(1));
        return std::exp(-0.5 * d.dot(a->cov.inverse() * d)) / (kTwoPi * std::sqrt(a->cov.determinant()));
    }
    const auto& g = std::get<GridJoint>(data);
    double u = (x1 - g.x1.min) / g.x1.step, w = (x2 - g.x2.min) / g.x2.step;
    double l1 = static_cast<double>(g.x1.count - 1), l2 = static_cast<double>(g.x2.count - 1);
    if (u < 0 || w < 0 || u > l1 || w > l2) return 0.0;
    auto i = std::min(static_cast<std::size_t>(u), g.x1.count - 2);
    auto j = std::min(static_cast<std::size_t>(w), g.x2.count - 2);
    double fu = u - static_cast<double>(i), fw = w - static_cast<double>(j);
    auto at = [&](std::size_t a, std::size_t b) { return g.density[a * g.x2.count + b]; };
    return (1 - fu) * ((1 - fw) * at(i, j) + fw * at(i, j + 1)) + fu * ((1 - fw) * at(i + 1, j) + fw * at(i + 1, j + 1));
}

double JointTomogram::normalization() const { return moment(0, 0); }

double JointTomogram::moment(int n, int m) const {
    if (n < 0 || m < 0) throw InvalidArgument("moment order must be non-negative");
    if (const auto* a = std::get_if<AnalyticJoint>(&data)) {
        // Centered moments by Stein's recursion, then shifted by the means.
        const double c11 = a->cov(0, 0), c12 = a->cov(0, 1), c22 = a->cov(1, 1);
        std::vector<std::vector<double>> e(static_cast<std::size_t>(n + 1), std::vector<double>(static_cast<std::size_t>(m + 1)));
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= m; ++j) {
                double v;
                if (i == 0 && j == 0) v = 1.0;
                else if (i == 0) v = j >= 2 ? (j - 1) * c22 * e[0][static_cast<std::size_t>(j - 2)] : 0.0;
                else {
                    v = 0.0;
                    if (i >= 2) v += (i - 1) * c11 * e[static_cast<std::size_t>(i - 2)][static_cast<std::size_t>(j)];
                    if (j >= 1) v += j * c12 * e[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
                }
                e[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
            }
        double sum = 0.0;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= m; ++j)
                sum += binomial(n, i) * binomial(m, j) * std::pow(a->mean(0), n - i) * std::pow(a->mean(1), m - j) *
                       e[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        return sum;
    }
    const auto& g = std::get<GridJoint>(data);
    double s = 0.0;
    for (std::size_t i = 0; i < g.x1.count; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < g.x2.count; ++j) row += std::pow(g.x2.at(j), m) * g.density[i * g.x2.count + j];
        s += std::pow(g.x1.at(i), n) * row;
    }
    return s * g.x1.step * g.x2.step;
}

GridAxis projection_axis(const GridAxis& aq, const GridAxis& ap, double mu, double nu, double step) {
    if (!(step > 0)) throw InvalidArgument("projection step must be positive");
    double lo = 1e300, hi = -1e300;
    for (double q : {aq.min, aq.max()})
        for (double p : {ap.min, ap.max()}) {
            double x = mu * q + nu * p;
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    // Anchored at the lowest corner so axis-aligned projections hit grid nodes.
    auto count = static_cast<std::size_t>(std::ceil((hi - lo) / step - 1e-9)) + 1;
    return {lo, step, count};
}

void radon_plane(const double* values, std::size_t stride, const GridAxis& aq, const GridAxis& ap, double mu,
                 double nu, const GridAxis& out, double* result, Interpolation interp) {
    require_form(mu, nu);
    const double s = std::hypot(mu, nu);
    const double ux = mu / s, uy = nu / s;
    const double vx = -uy, vy = ux;
    const double h = min_step(aq, ap);
    double tlo = 1e300, thi = -1e300;
    for (double q : {aq.min, aq.max()})
        for (double p : {ap.min, ap.max()}) {
            tlo = std::min(tlo, vx * q + vy * p);
            thi = std::max(thi, vx * q + vy * p);
        }
    const auto nt = static_cast<long>(std::ceil((thi - tlo) / h - 1e-9));
    const double lq = static_cast<double>(aq.count - 1), lp = static_cast<double>(ap.count - 1);
    const std::size_t np = ap.count;
    auto at = [&](std::size_t a, std::size_t b) { return values[(a * np + b) * stride]; };
    // Nodes outside the grid count as zero.
    auto cubic_sample = [&](double fq, double fp) {
        const long a0 = static_cast<long>(std::floor(fq)), b0 = static_cast<long>(std::floor(fp));
        std::array<double, 4> wq, wp;
        for (int k = 0; k < 4; ++k) {
            wq[static_cast<std::size_t>(k)] = keys_weight(fq - static_cast<double>(a0 - 1 + k));
            wp[static_cast<std::size_t>(k)] = keys_weight(fp - static_cast<double>(b0 - 1 + k));
        }
        double acc = 0.0;
        for (int i = 0; i < 4; ++i) {
            const long a = a0 - 1 + i;
            if (a < 0 || a >= static_cast<long>(aq.count)) continue;
            double row = 0.0;
            for (int j = 0; j < 4; ++j) {
                const long b = b0 - 1 + j;
                if (b < 0 || b >= static_cast<long>(ap.count)) continue;
                row += wp[static_cast<std::size_t>(j)] * at(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
            }
            acc += wq[static_cast<std::size_t>(i)] * row;
        }
        return acc;
    };

    for (std::size_t i = 0; i < out.count; ++i) {
        const double y = out.at(i) / s;
        double sum = 0.0;
        for (long k = 0; k <= nt; ++k) {
            const double t = tlo + static_cast<double>(k) * h;
            const double fq = (y * ux + t * vx - aq.min) / aq.step;
            const double fp = (y * uy + t * vy - ap.min) / ap.step;
            if (fq < 0.0 || fp < 0.0 || fq > lq || fp > lp) continue;
            if (interp == Interpolation::cubic) {
                sum += cubic_sample(fq, fp);
                continue;
            }
            auto a = std::min(static_cast<std::size_t>(fq), aq.count - 2);
            auto b = std::min(static_cast<std::size_t>(fp), ap.count - 2);
            const double wq = fq - static_cast<double>(a), wp = fp - static_cast<double>(b);
            sum += (1 - wq) * ((1 - wp) * at(a, b) + wp * at(a, b + 1)) +
                   wq * ((1 - wp) * at(a + 1, b) + wp * at(a + 1, b + 1));
        }
        result[i] = sum * h / kTwoPi / s;
    }
}

TomogramSlice form_tomogram(const State& state, const QuadratureForm& form, const RadonOptions& opts) {
    const Vec4& v = form.coeffs;
    if (const auto* g = std::get_if<GaussianState>(&state)) {
        double var = v.dot(g->cov() * v);
        if (!(var > 0.0)) throw InvalidArgument("degenerate quadrature form (zero variance)");
        return {AnalyticSlice{v.dot(g->mean()), var}, form, {}};
    }
    const auto& grid = two_mode_grid(state);
    const auto& ax = grid.axes();
    const bool touches1 = v[0] != 0.0 || v[1] != 0.0;
    const bool touches2 = v[2] != 0.0 || v[3] != 0.0;
    if (!touches1 && !touches2) throw InvalidArgument("degenerate quadrature form: all coefficients zero");

    GridSlice slice;
    if (touches1 != touches2) {
        const int mode = touches1 ? 1 : 2;
        const double mu = touches1 ? v[0] : v[2], nu = touches1 ? v[1] : v[3];
        GridWigner reduced = reduce_to_mode(grid, mode);
        const auto& rx = reduced.axes();
        slice.axis = projection_axis(rx[0], rx[1], mu, nu, std::hypot(mu, nu) * min_step(rx[0], rx[1]));
        slice.density.resize(slice.axis.count);
        radon_plane(reduced.values().data(), 1, rx[0], rx[1], mu, nu, slice.axis, slice.density.data(), opts.interpolation);
    } else {
        // Density of X1 + X2 from the joint density on a common step.
        const double step = std::min(std::hypot(v[0], v[1]) * min_step(ax[0], ax[1]),
                                     std::hypot(v[2], v[3]) * min_step(ax[2], ax[3]));
        GridJoint j = grid_joint(grid, v[0], v[1], v[2], v[3], step, opts.interpolation);
        slice.axis = {j.x1.min + j.x2.min, step, j.x1.count + j.x2.count - 1};
        slice.density.assign(slice.axis.count, 0.0);
        for (std::size_t a = 0; a < j.x1.count; ++a)
            for (std::size_t b = 0; b < j.x2.count; ++b) slice.density[a + b] += j.density[a * j.x2.count + b] * step;
    }
    SliceQuality q = finish_density(slice.density, slice.axis.step);
    return {std::move(slice), form, q};
}

TomogramSlice derived_mode_tomogram(const State& state, int mode, double theta, const RadonOptions& opts) {
    return form_tomogram(state, quadrature_form(mode, theta), opts);
}

TomogramSlice one_mode_tomogram(const OneModeState& state, double mu, double nu, const RadonOptions& opts) {
    require_form(mu, nu);
    QuadratureForm form = symplectic_form(1, mu, nu);
    if (const auto* g = std::get_if<OneModeGaussian>(&state)) {
        Eigen::Vector2d v(mu, nu);
        return {AnalyticSlice{v.dot(g->mean), v.dot(g->cov * v)}, form, {}};
    }
    const auto& grid = std::get<GridWigner>(state);
    if (grid.modes() != 1) throw InvalidArgument("one_mode_tomogram needs a one-mode grid");
    const auto& ax = grid.axes();
    GridSlice slice;
    slice.axis = projection_axis(ax[0], ax[1], mu, nu, std::hypot(mu, nu) * min_step(ax[0], ax[1]));
    slice.density.resize(slice.axis.count);
    radon_plane(grid.values().data(), 1, ax[0], ax[1], mu, nu, slice.axis, slice.density.data(), opts.interpolation);
    SliceQuality q = finish_density(slice.density, slice.axis.step);
    return {std::move(slice), form, q};
}

JointTomogram symplectic_tomogram(const State& state, double mu1, double nu1, double mu2, double nu2,
                                  const RadonOptions& opts) {
    require_form(mu1, nu1);
    require_form(mu2, nu2);
    if (const auto* g = std::get_if<GaussianState>(&state)) {
        Vec4 v1(mu1, nu1, 0, 0), v2(0, 0, mu2, nu2);
        AnalyticJoint a;
        a.mean << v1.dot(g->mean()), v2.dot(g->mean());
        a.cov << v1.dot(g->cov() * v1), v1.dot(g->cov() * v2), v2.dot(g->cov() * v1), v2.dot(g->cov() * v2);
        return {a, mu1, nu1, mu2, nu2, {}};
    }
    const auto& grid = two_mode_grid(state);
    const auto& ax = grid.axes();
    const double step = std::min(std::hypot(mu1, nu1) * min_step(ax[0], ax[1]),
                                 std::hypot(mu2, nu2) * min_step(ax[2], ax[3]));
    GridJoint j = grid_joint(grid, mu1, nu1, mu2, nu2, step, opts.interpolation);
    SliceQuality q = finish_density(j.density, j.x1.step * j.x2.step);
    return {std::move(j), mu1, nu1, mu2, nu2, q};
}

JointTomogram optical_tomogram(const State& state, double theta1, double theta2, const RadonOptions& opts) {
    return symplectic_tomogram(state, std::cos(theta1), std::sin(theta1), std::cos(theta2), std::sin(theta2), opts);
}

TomogramSlice marginalize(const JointTomogram& joint, int keep) {
    if (keep != 1 && keep != 2) throw InvalidArgument("marginalize keeps mode 1 or 2");
    QuadratureForm form = keep == 1 ? symplectic_form(1, joint.mu1, joint.nu1) : symplectic_form(2, joint.mu2, joint.nu2);
    const int k = keep - 1;
    if (const auto* a = std::get_if<AnalyticJoint>(&joint.data)) return {AnalyticSlice{a->mean(k), a->cov(k, k)}, form, {}};
    const auto& g = std::get<GridJoint>(joint.data);
    GridSlice slice;
    slice.axis = keep == 1 ? g.x1 : g.x2;
    slice.density.assign(slice.axis.count, 0.0);
    for (std::size_t i = 0; i < g.x1.count; ++i)
        for (std::size_t j = 0; j < g.x2.count; ++j) {
            double d = g.density[i * g.x2.count + j];
            if (keep == 1) slice.density[i] += d * g.x2.step;
            else slice.density[j] += d * g.x1.step;
        }
    return {std::move(slice), form, joint.quality};
}

double linf_distance(const TomogramSlice& a, const TomogramSlice& b, const GridAxis& probe) {
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.count; ++i) worst = std::max(worst, std::fabs(a.density(probe.at(i)) - b.density(probe.at(i))));
    return worst;
}

double linf_at_nodes(const TomogramSlice& grid, const TomogramSlice& reference) {
    const auto* g = std::get_if<GridSlice>(&grid.data);
    if (!g) throw InvalidArgument("linf_at_nodes needs a grid slice");
    double worst = 0.0;
    for (std::size_t i = 0; i < g->axis.count; ++i)
        worst = std::max(worst, std::fabs(g->density[i] - reference.density(g->axis.at(i))));
    return worst;
}

double linf_at_nodes(const JointTomogram& grid, const JointTomogram& reference) {
    const auto* g = std::get_if<GridJoint>(&grid.data);
    if (!g) throw InvalidArgument("linf_at_nodes needs a grid joint");
    double worst = 0.0;
    for (std::size_t i = 0; i < g->x1.count; ++i)
        for (std::size_t j = 0; j < g->x2.count; ++j)
            worst = std::max(worst, std::fabs(g->density[i * g->x2.count + j] - reference.density(g->x1.at(i), g->x2.at(j))));
    return worst;
}

double linf_distance(const JointTomogram& a, const JointTomogram& b, const GridAxis& p1, const GridAxis& p2) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p1.count; ++i)
        for (std::size_t j = 0; j < p2.count; ++j)
            worst = std::max(worst, std::fabs(a.density(p1.at(i), p2.at(j)) - b.density(p1.at(i), p2.at(j))));
    return worst;
}

GridAxis probe_axis(const TomogramSlice& s, std::size_t count) {
    if (const auto* g = std::get_if<GridSlice>(&s.data)) return g->axis;
    const auto& a = std::get<AnalyticSlice>(s.data);
    double hw = 8.0 * std::sqrt(a.variance);
    return {a.mean - hw, 2.0 * hw / static_cast<double>(count - 1), count};
}

void write_slice_csv(std::ostream& out, const TomogramSlice& slice) {
    GridAxis axis = probe_axis(slice);
    char buf[64];
    out << "x,density\n";
    for (std::size_t i = 0; i < axis.count; ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", axis.at(i), slice.density(axis.at(i)));
        out << buf;
    }
}

void write_joint_csv(std::ostream& out, const JointTomogram& joint, std::size_t count) {
    GridAxis a1, a2;
    if (const auto* g = std::get_if<GridJoint>(&joint.data)) {
        a1 = g->x1;
        a2 = g->x2;
    } else {
        a1 = probe_axis(marginalize(joint, 1), count);
        a2 = probe_axis(marginalize(joint, 2), count);
    }
    char buf[96];
    out << "x1,x2,density\n";
    for (std::size_t i = 0; i < a1.count; ++i)
        for (std::size_t j = 0; j < a2.count; ++j) {
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", a1.at(i), a2.at(j), joint.density(a1.at(i), a2.at(j)));
            out << buf;
        }
}

}  // namespace qtomo
