#include "qtomo/moment_engine.hpp"

#include <numeric>

namespace qtomo {

namespace {

double raw_variance(const MomentSource& src, int mode, double theta) {
    double m1 = src.slice_moment(mode, theta, 1);
    return src.slice_moment(mode, theta, 2) - m1 * m1;
}

double spread(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

struct CrossValues {
    double q1q2, p1p2, q1p2, q2p1;
};

CrossValues cross_primary(const MomentSource& s) {
    const double q1 = raw_variance(s, 1, 0), p1 = raw_variance(s, 1, kPi / 2);
    const double q2 = raw_variance(s, 2, 0), p2 = raw_variance(s, 2, kPi / 2);
    return {2 * raw_variance(s, 3, 0) - 0.5 * (q1 + q2), 2 * raw_variance(s, 3, kPi / 2) - 0.5 * (p1 + p2),
            -2 * raw_variance(s, 5, 0) + 0.5 * (q1 + p2), 2 * raw_variance(s, 5, kPi / 2) - 0.5 * (q2 + p1)};
}

CrossValues cross_secondary(const MomentSource& s) {
    const double q1 = raw_variance(s, 1, 0), p1 = raw_variance(s, 1, kPi / 2);
    const double q2 = raw_variance(s, 2, 0), p2 = raw_variance(s, 2, kPi / 2);
    return {-2 * raw_variance(s, 4, 0) + 0.5 * (q1 + q2), -2 * raw_variance(s, 4, kPi / 2) + 0.5 * (p1 + p2),
            2 * raw_variance(s, 6, 0) - 0.5 * (q1 + p2), -2 * raw_variance(s, 6, kPi / 2) + 0.5 * (q2 + p1)};
}

CrossCovariances to_estimates(const MomentSource& src, CrossValues (*f)(const MomentSource&)) {
    auto e = evaluate_vector(src, [f](const MomentSource& s) {
        CrossValues c = f(s);
        return std::vector<double>{c.q1q2, c.p1p2, c.q1p2, c.q2p1};
    });
    return {e[0], e[1], e[2], e[3]};
}

struct Requirement {
    const char* name;
    std::vector<std::pair<int, double>> slices;
};

const std::vector<Requirement>& dispersion_requirements() {
    static const std::vector<Requirement> req{
        {"sigma_Q1Q1", {{1, 0.0}}},
        {"sigma_P1P1", {{1, kPi / 2}}},
        {"sigma_Q1P1", {{1, 0.0}, {1, kPi / 2}, {1, kPi / 4}}},
        {"sigma_Q2Q2", {{2, 0.0}}},
        {"sigma_P2P2", {{2, kPi / 2}}},
        {"sigma_Q2P2", {{2, 0.0}, {2, kPi / 2}, {2, kPi / 4}}},
        {"sigma_Q1Q2", {{3, 0.0}, {1, 0.0}, {2, 0.0}}},
        {"sigma_P1P2", {{3, kPi / 2}, {1, kPi / 2}, {2, kPi / 2}}},
        {"sigma_Q1P2", {{5, 0.0}, {1, 0.0}, {2, kPi / 2}}},
        {"sigma_Q2P1", {{5, kPi / 2}, {2, 0.0}, {1, kPi / 2}}},
    };
    return req;
}

}  // namespace

double slice_variance(const MomentSource& src, int mode, double theta, bool canonical) {
    double v = raw_variance(src, mode, theta);
    if (canonical) v *= canonical_scale(mode) * canonical_scale(mode);
    return v;
}

ModeCovariance variances_covariances(const MomentSource& src, int mode) {
    auto e = evaluate_vector(src, [mode](const MomentSource& s) {
        double qq = slice_variance(s, mode, 0), pp = slice_variance(s, mode, kPi / 2);
        double diag = slice_variance(s, mode, kPi / 4);
        return std::vector<double>{qq, pp, diag - 0.5 * (qq + pp)};
    });
    return {e[0], e[1], e[2]};
}

CrossCovariances cross_covariances(const MomentSource& src) { return to_estimates(src, cross_primary); }

CrossCovariances cross_covariances_redundant(const MomentSource& src) { return to_estimates(src, cross_secondary); }

bool CrossValidation::consistent() const {
    return std::none_of(entries.begin(), entries.end(), [](const auto& e) { return e.flagged; });
}

CrossValidation cross_validate(const MomentSource& src, const CrossValidationOptions& opts) {
    CrossValidation report;
    auto add = [&](const std::string& name, const std::function<double(const MomentSource&)>& primary,
                   const std::function<double(const MomentSource&)>& redundant) {
        ConsistencyEntry e;
        e.name = name;
        e.primary = evaluate(src, primary);
        e.redundant = evaluate(src, redundant);
        e.difference = evaluate(src, [&](const MomentSource& s) { return primary(s) - redundant(s); });
        e.flagged = std::fabs(e.difference.value) > opts.z * e.difference.error + opts.tolerance;
        report.entries.push_back(std::move(e));
    };

    auto have = [&](std::initializer_list<std::pair<int, double>> need) {
        return std::all_of(need.begin(), need.end(), [&](auto p) { return src.has_slice(p.first, p.second); });
    };
    const bool base = have({{1, 0.0}, {1, kPi / 2}, {2, 0.0}, {2, kPi / 2}});
    if (base && have({{3, 0.0}, {3, kPi / 2}, {5, 0.0}, {5, kPi / 2}, {4, 0.0}, {4, kPi / 2}, {6, 0.0}, {6, kPi / 2}})) {
        const char* names[] = {"sigma_Q1Q2", "sigma_P1P2", "sigma_Q1P2", "sigma_Q2P1"};
        for (int i = 0; i < 4; ++i) {
            auto pick = [i](CrossValues c) { return i == 0 ? c.q1q2 : i == 1 ? c.p1p2 : i == 2 ? c.q1p2 : c.q2p1; };
            add(std::string("cross-") + names[i], [pick](const MomentSource& s) { return pick(cross_primary(s)); },
                [pick](const MomentSource& s) { return pick(cross_secondary(s)); });
        }
    } else {
        report.skipped.push_back("cross covariances (needs modes 1-6 at theta 0 and pi/2)");
    }

    // Derived-mode means against the mode 1/2 means.
    for (int mode = 3; mode <= 6; ++mode)
        for (double theta : {0.0, kPi / 2}) {
            std::string name = "mean-mode-" + std::to_string(mode) + "-theta-" + format_number(theta);
            if (!base || !src.has_slice(mode, theta)) {
                report.skipped.push_back(name);
                continue;
            }
            add(name, [mode, theta](const MomentSource& s) { return s.slice_moment(mode, theta, 1); },
                [mode, theta](const MomentSource& s) {
                    Vec4 m(s.slice_moment(1, 0, 1), s.slice_moment(1, kPi / 2, 1), s.slice_moment(2, 0, 1),
                           s.slice_moment(2, kPi / 2, 1));
                    return quadrature_form(mode, theta).apply(m);
                });
        }
    return report;
}

std::vector<std::string> missing_dispersion_entries(const MomentSource& src) {
    std::vector<std::string> missing;
    for (const auto& r : dispersion_requirements())
        for (auto [mode, theta] : r.slices)
            if (!src.has_slice(mode, theta)) {
                missing.push_back(r.name);
                break;
            }
    return missing;
}

Mat4 dispersion_value(const MomentSource& src) {
    auto missing = missing_dispersion_entries(src);
    if (!missing.empty()) {
        std::string msg = "missing dispersion entries:";
        for (const auto& m : missing) msg += " " + m;
        throw MissingData(msg);
    }
    Mat4 d = Mat4::Zero();
    for (int mode : {1, 2}) {
        const int o = 2 * (mode - 1);
        double qq = slice_variance(src, mode, 0), pp = slice_variance(src, mode, kPi / 2);
        d(o, o) = qq;
        d(o + 1, o + 1) = pp;
        d(o, o + 1) = d(o + 1, o) = slice_variance(src, mode, kPi / 4) - 0.5 * (qq + pp);
    }
    CrossValues c = cross_primary(src);
    d(0, 2) = d(2, 0) = c.q1q2;
    d(1, 3) = d(3, 1) = c.p1p2;
    d(0, 3) = d(3, 0) = c.q1p2;
    d(2, 1) = d(1, 2) = c.q2p1;
    return d;
}

Vec4 mean_value(const MomentSource& src) {
    return {src.slice_moment(1, 0, 1), src.slice_moment(1, kPi / 2, 1), src.slice_moment(2, 0, 1),
            src.slice_moment(2, kPi / 2, 1)};
}

DispersionEstimate dispersion_matrix(const MomentSource& src) {
    auto e = evaluate_vector(src, [](const MomentSource& s) {
        Mat4 d = dispersion_value(s);
        return std::vector<double>(d.data(), d.data() + 16);
    });
    DispersionEstimate out;
    for (int i = 0; i < 16; ++i) {
        out.value.data()[i] = e[static_cast<std::size_t>(i)].value;
        out.error.data()[i] = e[static_cast<std::size_t>(i)].error;
    }
    return out;
}

double frame_moment(const MomentSource& src, const ModeFrame& frame, double phi, int n) {
    return std::pow(canonical_scale(frame.mode), n) * src.slice_moment(frame.mode, frame.theta + phi, n);
}

std::vector<double> default_solver_phases(int n) {
    if (n < 2 || n > kMaxOrder) throw InvalidArgument("solver phases are defined for degrees 2..8");
    if (n == 2) return {kPi / 4};
    if (n == 3) return {kPi / 3, 2 * kPi / 3};
    std::vector<double> phases;
    for (int j = 1; j <= n && static_cast<int>(phases.size()) < n - 1; ++j) {
        if (2 * j == n + 1) continue;  // j pi / (n + 1) == pi / 2
        phases.push_back(j * kPi / (n + 1));
    }
    return phases;
}

OrderedMoments::OrderedMoments() { values_[{0, 0}] = 1.0; }

Complex OrderedMoments::at(int m, int k) const {
    auto it = values_.find({m, k});
    if (it == values_.end())
        throw MissingData("ordered moment <P^" + std::to_string(m) + " Q^" + std::to_string(k) + "> not available");
    return it->second;
}

int OrderedMoments::max_degree() const {
    int d = 0;
    for (const auto& [mono, v] : values_) d = std::max(d, mono.degree());
    return d;
}

SolveDiagnostics solve_ordered_degree(const MomentSource& src, const ModeFrame& frame, int n,
                                      const std::vector<double>& phases, OrderedMoments& table) {
    if (n < 1 || n > kMaxOrder) throw InvalidArgument("ordered moments are solved for degrees 1..8");
    SolveDiagnostics diag;
    diag.degree = n;
    diag.phases = phases;
    for (int d = n - 2; d >= 1; d -= 2)
        for (int k = 0; k <= d; ++k)
            if (!table.has(d - k, k))
                throw MissingData("degree " + std::to_string(n) + " solve needs degree " + std::to_string(d) + " entries");

    table.set(0, n, frame_moment(src, frame, 0.0, n));
    table.set(n, 0, frame_moment(src, frame, kPi / 2, n));
    if (n == 1) return diag;

    const int unknowns = n - 1;
    if (static_cast<int>(phases.size()) < unknowns)
        throw InvalidArgument("degree " + std::to_string(n) + " needs at least " + std::to_string(unknowns) + " phases");
    const auto rows = static_cast<Eigen::Index>(phases.size());
    Eigen::MatrixXd design(rows, unknowns);
    Eigen::VectorXd rhs_re(rows), rhs_im(rows);
    const auto& terms = quadrature_power_terms(n);
    for (Eigen::Index j = 0; j < rows; ++j) {
        const double phi = phases[static_cast<std::size_t>(j)];
        const double mu = std::cos(phi), nu = std::sin(phi);
        Complex a = frame_moment(src, frame, phi, n);
        for (const auto& t : terms) {
            const bool top = t.monomial.degree() == n;
            const bool pinned = t.monomial.p_power == 0 || t.monomial.q_power == 0;
            if (top && !pinned) continue;
            a -= t.coeff.to_complex() * std::pow(mu, t.mu_power) * std::pow(nu, t.nu_power) *
                 table.at(t.monomial.p_power, t.monomial.q_power);
        }
        for (int k = 1; k <= unknowns; ++k) design(j, k - 1) = binomial(n, k) * std::pow(mu, k) * std::pow(nu, n - k);
        rhs_re(j) = a.real();
        rhs_im(j) = a.imag();
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    diag.condition_number = sv(unknowns - 1) > 0 ? sv(0) / sv(unknowns - 1) : std::numeric_limits<double>::infinity();
    if (rows == unknowns) {
        double norms = 1.0;
        for (Eigen::Index j = 0; j < rows; ++j) norms *= design.row(j).norm();
        diag.relative_determinant = norms > 0 ? std::fabs(design.determinant()) / norms : 0.0;
    } else {
        diag.relative_determinant = sv(0) > 0 ? sv(unknowns - 1) / sv(0) : 0.0;
    }
    if (diag.relative_determinant < kDesignTolerance) {
        std::string list;
        for (double p : phases) list += (list.empty() ? "" : ", ") + format_number(p);
        throw SingularConfiguration("degree-" + std::to_string(n) + " design matrix is singular for phases (" + list +
                                    "), condition number " + format_number(diag.condition_number, 3));
    }
    Eigen::VectorXd x_re = svd.solve(rhs_re), x_im = svd.solve(rhs_im);
    for (int k = 1; k <= unknowns; ++k) table.set(n - k, k, Complex(x_re(k - 1), x_im(k - 1)));
    return diag;
}

OrderedMoments solve_ordered_moments(const MomentSource& src, const ModeFrame& frame, int max_degree,
                                     const SolverPhases& phases, bool same_parity_only,
                                     std::vector<SolveDiagnostics>* diagnostics) {
    if (max_degree < 0 || max_degree > kMaxOrder) throw InvalidArgument("moments beyond degree 8 are refused");
    OrderedMoments table;
    for (int n = 1; n <= max_degree; ++n) {
        if (same_parity_only && (max_degree - n) % 2 != 0) continue;
        std::vector<double> ph;
        if (n >= 2) {
            auto it = phases.find(n);
            ph = it != phases.end() ? it->second : default_solver_phases(n);
        }
        auto d = solve_ordered_degree(src, frame, n, ph, table);
        if (diagnostics) diagnostics->push_back(std::move(d));
    }
    return table;
}

const OrderedEntry& OrderedMomentTable::entry(int m, int k) const {
    for (const auto& e : entries)
        if (e.m == m && e.k == k) return e;
    throw MissingData("ordered moment <P^" + std::to_string(m) + " Q^" + std::to_string(k) + "> not in table");
}

OrderedMomentTable ordered_moment_table(const MomentSource& src, const ModeFrame& frame, int max_degree,
                                        const SolverPhases& phases, bool same_parity_only) {
    OrderedMoments main = solve_ordered_moments(src, frame, max_degree, phases, same_parity_only);
    OrderedMomentTable table{frame, {}};
    std::vector<OrderedMoments> reps;
    for (std::size_t b = 0; b < src.replicate_count(); ++b)
        reps.push_back(solve_ordered_moments(src.replicate(b), frame, max_degree, phases, same_parity_only));
    for (const auto& [mono, v] : main.values()) {
        OrderedEntry e{mono.p_power, mono.q_power, v, 0.0};
        if (!reps.empty()) {
            std::vector<double> re, im;
            for (const auto& r : reps) {
                re.push_back(r.at(mono.p_power, mono.q_power).real());
                im.push_back(r.at(mono.p_power, mono.q_power).imag());
            }
            e.error = std::hypot(spread(re), spread(im));
        }
        table.entries.push_back(e);
    }
    return table;
}

nlohmann::json to_json(const OrderedMomentTable& table) {
    auto arr = nlohmann::json::array();
    for (const auto& e : table.entries)
        arr.push_back({{"mode", table.frame.mode},
                       {"m", e.m},
                       {"k", e.k},
                       {"re", e.value.real()},
                       {"im", e.value.imag()},
                       {"stderr", e.error}});
    return arr;
}

Complex recompose_quadrature_moment(const OrderedMoments& table, double phi, int n) {
    Complex sum = 0.0;
    for (const auto& [mono, c] : expand_quadrature_power(std::cos(phi), std::sin(phi), n))
        sum += c * table.at(mono.p_power, mono.q_power);
    return sum;
}

Complex CrossMoments::at(const Key& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw MissingData("cross moment <P1^" + std::to_string(key[0]) + " Q1^" + std::to_string(key[1]) + " P2^" +
                          std::to_string(key[2]) + " Q2^" + std::to_string(key[3]) + "> not available");
    return it->second;
}

OrderedMoments CrossMoments::mode_view(int mode) const {
    if (mode != 1 && mode != 2) throw InvalidArgument("mode_view needs mode 1 or 2");
    OrderedMoments out;
    for (const auto& [k, v] : values_) {
        if (mode == 1 && k[2] == 0 && k[3] == 0) out.set(k[0], k[1], v);
        if (mode == 2 && k[0] == 0 && k[1] == 0) out.set(k[2], k[3], v);
    }
    return out;
}

Complex CrossMoments::symmetric_moment(int a, int b, int c, int d) const {
    const auto& w1 = weyl_symmetrized(a, b);
    const auto& w2 = weyl_symmetrized(c, d);
    Complex sum = 0.0;
    for (const auto& [m1, c1] : w1)
        for (const auto& [m2, c2] : w2) sum += c1 * c2 * at({m1.p_power, m1.q_power, m2.p_power, m2.q_power});
    return sum;
}

CrossMoments solve_cross_moments(const MomentSource& src, int max_degree) {
    if (max_degree < 0 || max_degree > kMaxOrder) throw InvalidArgument("moments beyond degree 8 are refused");
    CrossMoments table;
    table.set({0, 0, 0, 0}, 1.0);
    auto phase = [](int i, int n) { return i * kPi / (n + 1); };
    for (int total = 1; total <= max_degree; ++total)
        for (int n = 0; n <= total; ++n) {
            const int m = total - n;
            // Top-degree design per mode: A[i][k] = C(n, k) mu_i^k nu_i^(n - k) on P^(n-k) Q^k.
            auto design = [&](int deg) {
                Eigen::MatrixXd a(deg + 1, deg + 1);
                for (int i = 0; i <= deg; ++i)
                    for (int k = 0; k <= deg; ++k)
                        a(i, k) = binomial(deg, k) * std::pow(std::cos(phase(i, deg)), k) *
                                  std::pow(std::sin(phase(i, deg)), deg - k);
                return a;
            };
            Eigen::MatrixXd a1 = design(n), a2 = design(m);
            Eigen::MatrixXcd rhs(n + 1, m + 1);
            const auto& t1 = quadrature_power_terms(n);
            const auto& t2 = quadrature_power_terms(m);
            for (int i = 0; i <= n; ++i)
                for (int j = 0; j <= m; ++j) {
                    const double th1 = phase(i, n), th2 = phase(j, m);
                    const double mu1 = std::cos(th1), nu1 = std::sin(th1), mu2 = std::cos(th2), nu2 = std::sin(th2);
                    Complex r = src.joint_moment(th1, th2, n, m);
                    for (const auto& x : t1)
                        for (const auto& y : t2) {
                            if (x.monomial.degree() == n && y.monomial.degree() == m) continue;
                            r -= x.coeff.to_complex() * y.coeff.to_complex() * std::pow(mu1, x.mu_power) *
                                 std::pow(nu1, x.nu_power) * std::pow(mu2, y.mu_power) * std::pow(nu2, y.nu_power) *
                                 table.at({x.monomial.p_power, x.monomial.q_power, y.monomial.p_power,
                                           y.monomial.q_power});
                        }
                    rhs(i, j) = r;
                }
            Eigen::MatrixXcd x = a1.cast<Complex>().partialPivLu().solve(rhs);
            x = a2.cast<Complex>().partialPivLu().solve(x.transpose()).transpose();
            for (int k1 = 0; k1 <= n; ++k1)
                for (int k2 = 0; k2 <= m; ++k2) table.set({n - k1, k1, m - k2, k2}, x(k1, k2));
        }
    return table;
}

}  // namespace qtomo
