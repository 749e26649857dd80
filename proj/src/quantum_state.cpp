#include "qtomo/quantum_state.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace qtomo {

std::string format_number(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string to_string(Quadrature q) {
    switch (q) {
        case Quadrature::Q1: return "Q1";
        case Quadrature::P1: return "P1";
        case Quadrature::Q2: return "Q2";
        case Quadrature::P2: return "P2";
    }
    return "?";
}

std::array<Quadrature, 4> basis(Ordering ordering) {
    using enum Quadrature;
    switch (ordering) {
        case Ordering::canonical: return {Q1, P1, Q2, P2};
        case Ordering::sigma: return {P1, P2, Q1, Q2};
        case Ordering::sigma_prime: return {Q1, Q2, P1, P2};
    }
    return {Q1, P1, Q2, P2};
}

std::string to_string(Ordering ordering) {
    switch (ordering) {
        case Ordering::canonical: return "canonical";
        case Ordering::sigma: return "Sigma";
        case Ordering::sigma_prime: return "SigmaPrime";
    }
    return "?";
}

Mat4 permutation_from_canonical(Ordering ordering) {
    Mat4 p = Mat4::Zero();
    auto b = basis(ordering);
    for (int i = 0; i < 4; ++i) p(i, static_cast<int>(b[i])) = 1.0;
    return p;
}

CommutatorMatrix commutator_matrix(Ordering ordering) {
    Mat4 j = Mat4::Zero();
    j(0, 1) = 1.0;  // [Q1, P1] = i
    j(1, 0) = -1.0;
    j(2, 3) = 1.0;  // [Q2, P2] = i
    j(3, 2) = -1.0;
    Mat4 p = permutation_from_canonical(ordering);
    return {ordering, p * j * p.transpose()};
}

GaussianState::GaussianState(const Vec4& mean, const Mat4& cov) : mean_(mean), cov_(cov) {
    if (!mean.allFinite() || !cov.allFinite())
        throw InvalidArgument("Gaussian state has non-finite mean or covariance");
    double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidArgument("covariance matrix is not symmetric");
    cov_ = 0.5 * (cov + cov.transpose());
}

GaussianState GaussianState::vacuum() { return {Vec4::Zero(), 0.5 * Mat4::Identity()}; }

GridWigner::GridWigner(std::vector<GridAxis> axes, std::vector<double> values)
    : axes_(std::move(axes)), values_(std::move(values)) {
    if (axes_.size() != 2 && axes_.size() != 4)
        throw InvalidArgument("grid Wigner function needs 2 or 4 axes");
    std::size_t total = 1;
    for (const auto& a : axes_) {
        if (a.count < 2 || !(a.step > 0)) throw InvalidArgument("grid axis needs >= 2 points and step > 0");
        total *= a.count;
    }
    if (total != values_.size()) throw InvalidArgument("grid value count does not match axes");
}

std::size_t GridWigner::flat_index(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes_.size(); ++d) flat = flat * axes_[d].count + idx[d];
    return flat;
}

double GridWigner::cell_volume() const {
    double v = 1.0;
    for (const auto& a : axes_) v *= a.step;
    return v;
}

double GridWigner::normalization() const {
    double sum = 0.0;
    for (double v : values_) sum += v;
    return sum * cell_volume() / std::pow(kTwoPi, modes());
}

GridWigner GridWigner::normalized() const {
    double n = normalization();
    if (!(std::fabs(n) > 0)) throw DataQualityError("grid Wigner function has zero normalization");
    std::vector<double> v(values_);
    for (double& x : v) x /= n;
    return {axes_, std::move(v)};
}

double GridWigner::interpolate(std::span<const double> point) const {
    const std::size_t dims = axes_.size();
    if (point.size() != dims) throw InvalidArgument("interpolation point has wrong dimension");
    std::array<std::size_t, 4> lo{};
    std::array<double, 4> frac{};
    for (std::size_t d = 0; d < dims; ++d) {
        const auto& a = axes_[d];
        double u = (point[d] - a.min) / a.step;
        double last = static_cast<double>(a.count - 1);
        if (u < -1e-9 || u > last + 1e-9) throw InvalidArgument("point outside grid domain");
        u = std::clamp(u, 0.0, last);
        auto i = static_cast<std::size_t>(std::floor(u));
        if (i >= a.count - 1) i = a.count - 2;
        lo[d] = i;
        frac[d] = u - static_cast<double>(i);
    }
    double result = 0.0;
    std::array<std::size_t, 4> idx{};
    for (unsigned corner = 0; corner < (1u << dims); ++corner) {
        double w = 1.0;
        for (std::size_t d = 0; d < dims; ++d) {
            bool up = (corner >> d) & 1u;
            idx[d] = lo[d] + (up ? 1 : 0);
            w *= up ? frac[d] : 1.0 - frac[d];
        }
        if (w != 0.0) result += w * values_[flat_index(std::span<const std::size_t>(idx.data(), dims))];
    }
    return result;
}

std::string to_string(StateKind kind) {
    switch (kind) {
        case StateKind::vacuum: return "vacuum";
        case StateKind::coherent: return "coherent";
        case StateKind::squeezed: return "squeezed";
        case StateKind::two_mode_squeezed: return "two_mode_squeezed";
        case StateKind::thermal: return "thermal";
        case StateKind::gaussian: return "gaussian";
        case StateKind::grid: return "grid";
    }
    return "?";
}

StateKind state_kind_from_string(const std::string& name) {
    if (name == "vacuum") return StateKind::vacuum;
    if (name == "coherent") return StateKind::coherent;
    if (name == "squeezed") return StateKind::squeezed;
    if (name == "two_mode_squeezed" || name == "tmsv") return StateKind::two_mode_squeezed;
    if (name == "thermal") return StateKind::thermal;
    if (name == "gaussian") return StateKind::gaussian;
    if (name == "grid") return StateKind::grid;
    throw InvalidArgument("unknown state kind '" + name + "'");
}

namespace {

const std::set<std::string>& allowed_params(StateKind kind) {
    static const std::map<StateKind, std::set<std::string>> table = {
        {StateKind::vacuum, {"q1", "p1", "q2", "p2"}},
        {StateKind::coherent, {"alpha1_re", "alpha1_im", "alpha2_re", "alpha2_im", "q1", "p1", "q2", "p2"}},
        {StateKind::squeezed, {"r1", "phi1", "r2", "phi2", "q1", "p1", "q2", "p2"}},
        {StateKind::two_mode_squeezed, {"r", "q1", "p1", "q2", "p2"}},
        {StateKind::thermal, {"nbar1", "nbar2", "q1", "p1", "q2", "p2"}},
        {StateKind::gaussian, {"q1", "p1", "q2", "p2"}},
        {StateKind::grid, {}},
    };
    return table.at(kind);
}

double param(const StateDescriptor& d, const std::string& key, double fallback = 0.0) {
    auto it = d.params.find(key);
    return it == d.params.end() ? fallback : it->second;
}

Eigen::Matrix2d squeezed_block(double r, double phi) {
    Eigen::Matrix2d rot;
    rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    Eigen::Matrix2d diag = Eigen::Matrix2d::Zero();
    diag(0, 0) = 0.5 * std::exp(-2.0 * r);
    diag(1, 1) = 0.5 * std::exp(2.0 * r);
    return rot * diag * rot.transpose();
}

}  // namespace

nlohmann::json to_json(const StateDescriptor& desc) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : desc.params) params[k] = v;
    if (desc.mean) params["mean"] = std::vector<double>(desc.mean->data(), desc.mean->data() + 4);
    if (desc.cov) {
        nlohmann::json rows = nlohmann::json::array();
        for (int i = 0; i < 4; ++i) rows.push_back({(*desc.cov)(i, 0), (*desc.cov)(i, 1), (*desc.cov)(i, 2), (*desc.cov)(i, 3)});
        params["cov"] = rows;
    }
    if (desc.allow_unphysical) params["allow_unphysical"] = true;
    if (desc.kind == StateKind::grid) params["file"] = desc.grid_file;
    return {{"kind", to_string(desc.kind)}, {"params", params}};
}

StateDescriptor descriptor_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind")) throw InvalidArgument("state descriptor needs a \"kind\" field");
    StateDescriptor d;
    d.kind = state_kind_from_string(j.at("kind").get<std::string>());
    if (!j.contains("params")) return d;
    const auto& params = j.at("params");
    if (!params.is_object()) throw InvalidArgument("state descriptor \"params\" must be an object");
    for (const auto& [key, value] : params.items()) {
        if (key == "mean") {
            auto v = value.get<std::vector<double>>();
            if (v.size() != 4) throw InvalidArgument("gaussian mean must have 4 entries");
            d.mean = Vec4(v[0], v[1], v[2], v[3]);
        } else if (key == "cov") {
            auto rows = value.get<std::vector<std::vector<double>>>();
            if (rows.size() != 4) throw InvalidArgument("gaussian cov must be 4x4");
            Mat4 c;
            for (int i = 0; i < 4; ++i) {
                if (rows[i].size() != 4) throw InvalidArgument("gaussian cov must be 4x4");
                for (int k = 0; k < 4; ++k) c(i, k) = rows[i][k];
            }
            d.cov = c;
        } else if (key == "allow_unphysical") {
            d.allow_unphysical = value.get<bool>();
        } else if (key == "file") {
            d.grid_file = value.get<std::string>();
        } else {
            if (!value.is_number()) throw InvalidArgument("state parameter '" + key + "' must be a number");
            d.params[key] = value.get<double>();
        }
    }
    return d;
}

GaussianState make_gaussian(const StateDescriptor& desc) {
    if (desc.kind == StateKind::grid) throw InvalidArgument("grid descriptors do not describe Gaussian states");
    const auto& allowed = allowed_params(desc.kind);
    for (const auto& [key, value] : desc.params) {
        if (!allowed.count(key))
            throw InvalidArgument("parameter '" + key + "' is not valid for state kind " + to_string(desc.kind));
        if (!std::isfinite(value)) throw InvalidArgument("parameter '" + key + "' is not finite");
    }

    Vec4 mean = Vec4::Zero();
    Mat4 cov = 0.5 * Mat4::Identity();
    switch (desc.kind) {
        case StateKind::vacuum: break;
        case StateKind::coherent:
            mean << std::sqrt(2.0) * param(desc, "alpha1_re"), std::sqrt(2.0) * param(desc, "alpha1_im"),
                std::sqrt(2.0) * param(desc, "alpha2_re"), std::sqrt(2.0) * param(desc, "alpha2_im");
            break;
        case StateKind::squeezed:
            cov.block<2, 2>(0, 0) = squeezed_block(param(desc, "r1"), param(desc, "phi1"));
            cov.block<2, 2>(2, 2) = squeezed_block(param(desc, "r2"), param(desc, "phi2"));
            break;
        case StateKind::two_mode_squeezed: {
            double r = param(desc, "r");
            double c = 0.5 * std::cosh(2.0 * r), s = 0.5 * std::sinh(2.0 * r);
            cov.diagonal().setConstant(c);
            cov(0, 2) = cov(2, 0) = s;
            cov(1, 3) = cov(3, 1) = -s;
            break;
        }
        case StateKind::thermal: {
            double n1 = param(desc, "nbar1"), n2 = param(desc, "nbar2");
            if (n1 < 0 || n2 < 0) throw InvalidArgument("thermal occupation must be >= 0");
            cov(0, 0) = cov(1, 1) = n1 + 0.5;
            cov(2, 2) = cov(3, 3) = n2 + 0.5;
            break;
        }
        case StateKind::gaussian:
            if (!desc.mean || !desc.cov) throw InvalidArgument("gaussian state needs both mean and cov");
            mean = *desc.mean;
            cov = *desc.cov;
            break;
        case StateKind::grid: break;
    }
    mean += Vec4(param(desc, "q1"), param(desc, "p1"), param(desc, "q2"), param(desc, "p2"));

    GaussianState state(mean, cov);
    if (!(desc.kind == StateKind::gaussian && desc.allow_unphysical)) {
        auto phys = validate_physicality(state);
        if (!phys.physical)
            throw InvalidArgument("unphysical state: min eigenvalue of cov + (i/2)J is " +
                                  std::to_string(phys.min_eigenvalue));
    }
    return state;
}

State make_state(const StateDescriptor& desc) {
    if (desc.kind == StateKind::grid) {
        if (desc.grid_file.empty()) throw InvalidArgument("grid state needs a \"file\" parameter");
        return read_grid_file(desc.grid_file);
    }
    return make_gaussian(desc);
}

PhysicalityResult validate_physicality(const Mat4& cov, double tol) {
    double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidArgument("covariance matrix is not symmetric");
    Mat4c robertson = cov.cast<Complex>() + Complex(0, 0.5) * commutator_matrix(Ordering::canonical).entries.cast<Complex>();
    Eigen::SelfAdjointEigenSolver<Mat4c> solver(robertson, Eigen::EigenvaluesOnly);
    double min_eig = solver.eigenvalues().minCoeff();
    return {min_eig >= -tol, min_eig};
}

PhysicalityResult validate_physicality(const GaussianState& state, double tol) {
    return validate_physicality(state.cov(), tol);
}

double wigner_eval(const GaussianState& state, const Vec4& point) {
    Vec4 d = point - state.mean();
    Eigen::LDLT<Mat4> ldlt(state.cov());
    double quad = d.dot(ldlt.solve(d));
    return std::exp(-0.5 * quad) / std::sqrt(state.cov().determinant());
}

double wigner_eval(const OneModeGaussian& state, double q, double p) {
    Eigen::Vector2d d(q - state.mean(0), p - state.mean(1));
    double quad = d.dot(state.cov.inverse() * d);
    return std::exp(-0.5 * quad) / std::sqrt(state.cov.determinant());
}

double wigner_eval(const State& state, double q1, double p1, double q2, double p2) {
    if (const auto* g = std::get_if<GaussianState>(&state)) return wigner_eval(*g, Vec4(q1, p1, q2, p2));
    const auto& grid = std::get<GridWigner>(state);
    if (grid.modes() != 2) throw InvalidArgument("two-mode evaluation of a one-mode grid");
    std::array<double, 4> pt{q1, p1, q2, p2};
    return grid.interpolate(pt);
}

OneModeGaussian reduce_to_mode(const GaussianState& state, int mode) {
    if (mode != 1 && mode != 2) throw InvalidArgument("mode must be 1 or 2");
    int o = 2 * (mode - 1);
    return {state.mean().segment<2>(o), state.cov().block<2, 2>(o, o)};
}

GridWigner reduce_to_mode(const GridWigner& grid, int mode) {
    if (mode != 1 && mode != 2) throw InvalidArgument("mode must be 1 or 2");
    if (grid.modes() != 2) throw InvalidArgument("reduce_to_mode needs a two-mode grid");
    const auto& ax = grid.axes();
    std::size_t n0 = ax[0].count, n1 = ax[1].count, n2 = ax[2].count, n3 = ax[3].count;
    auto v = grid.values();
    std::vector<double> out;
    std::vector<GridAxis> axes;
    if (mode == 1) {
        axes = {ax[0], ax[1]};
        out.assign(n0 * n1, 0.0);
        double w = ax[2].step * ax[3].step / kTwoPi;
        for (std::size_t a = 0; a < n0; ++a)
            for (std::size_t b = 0; b < n1; ++b) {
                double s = 0.0;
                const double* row = v.data() + (a * n1 + b) * n2 * n3;
                for (std::size_t k = 0; k < n2 * n3; ++k) s += row[k];
                out[a * n1 + b] = s * w;
            }
    } else {
        axes = {ax[2], ax[3]};
        out.assign(n2 * n3, 0.0);
        double w = ax[0].step * ax[1].step / kTwoPi;
        for (std::size_t ab = 0; ab < n0 * n1; ++ab) {
            const double* row = v.data() + ab * n2 * n3;
            for (std::size_t k = 0; k < n2 * n3; ++k) out[k] += row[k] * w;
        }
    }
    return GridWigner(std::move(axes), std::move(out)).normalized();
}

OneModeState reduce_to_mode(const State& state, int mode) {
    if (const auto* g = std::get_if<GaussianState>(&state)) return reduce_to_mode(*g, mode);
    return reduce_to_mode(std::get<GridWigner>(state), mode);
}

namespace {

std::vector<GridAxis> window_axes(std::span<const double> mean, std::span<const double> sigma,
                                  std::size_t n, double window) {
    if (n < 2) throw InvalidArgument("grid needs at least 2 points per axis");
    std::vector<GridAxis> axes;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        double hw = window * sigma[i];
        axes.push_back({mean[i] - hw, 2.0 * hw / static_cast<double>(n - 1), n});
    }
    return axes;
}

}  // namespace

GridWigner sample_wigner_grid(const GaussianState& state, std::size_t n, double window) {
    std::array<double, 4> mean{}, sigma{};
    for (int i = 0; i < 4; ++i) {
        mean[i] = state.mean()(i);
        sigma[i] = std::sqrt(state.cov()(i, i));
    }
    auto axes = window_axes(mean, sigma, n, window);
    Mat4 inv = state.cov().inverse();
    double amp = 1.0 / std::sqrt(state.cov().determinant());
    std::vector<double> values(n * n * n * n);
    std::size_t flat = 0;
    Vec4 d;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c)
                for (std::size_t e = 0; e < n; ++e) {
                    d << axes[0].at(a) - mean[0], axes[1].at(b) - mean[1], axes[2].at(c) - mean[2],
                        axes[3].at(e) - mean[3];
                    values[flat++] = amp * std::exp(-0.5 * d.dot(inv * d));
                }
    return {std::move(axes), std::move(values)};
}

GridWigner sample_wigner_grid(const OneModeGaussian& state, std::size_t n, double window) {
    std::array<double, 2> mean{state.mean(0), state.mean(1)};
    std::array<double, 2> sigma{std::sqrt(state.cov(0, 0)), std::sqrt(state.cov(1, 1))};
    auto axes = window_axes(mean, sigma, n, window);
    std::vector<double> values(n * n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) values[a * n + b] = wigner_eval(state, axes[0].at(a), axes[1].at(b));
    return {std::move(axes), std::move(values)};
}

void write_grid_file(const std::string& path, const GridWigner& grid) {
    static_assert(std::endian::native == std::endian::little, "grid files are little-endian");
    nlohmann::json header = {{"schema_version", kSchemaVersion}, {"format", "qtomo-grid"},
                             {"modes", grid.modes()}, {"dtype", "float64-le"}};
    header["axes"] = nlohmann::json::array();
    for (const auto& a : grid.axes()) header["axes"].push_back({{"min", a.min}, {"step", a.step}, {"count", a.count}});
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << header.dump() << '\n';
    auto v = grid.values();
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!out) throw Error("failed writing '" + path + "'");
}

GridWigner read_grid_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open grid file '" + path + "'");
    std::string line;
    std::getline(in, line);
    auto header = nlohmann::json::parse(line);
    if (header.value("schema_version", 0) != kSchemaVersion)
        throw InvalidArgument("grid file '" + path + "' has unsupported schema_version");
    if (header.value("format", "") != "qtomo-grid") throw InvalidArgument("'" + path + "' is not a qtomo grid file");
    std::vector<GridAxis> axes;
    std::size_t total = 1;
    for (const auto& a : header.at("axes")) {
        axes.push_back({a.at("min").get<double>(), a.at("step").get<double>(), a.at("count").get<std::size_t>()});
        total *= axes.back().count;
    }
    std::vector<double> values(total);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(total * sizeof(double)));
    if (!in) throw InvalidArgument("grid file '" + path + "' is truncated");
    return {std::move(axes), std::move(values)};
}

nlohmann::json gaussian_to_json(const GaussianState& state) {
    nlohmann::json cov = nlohmann::json::array();
    for (int i = 0; i < 4; ++i)
        cov.push_back({state.cov()(i, 0), state.cov()(i, 1), state.cov()(i, 2), state.cov()(i, 3)});
    return {{"mean", {state.mean()(0), state.mean()(1), state.mean()(2), state.mean()(3)}}, {"cov", cov}};
}

GaussianState gaussian_from_json(const nlohmann::json& j) {
    auto m = j.at("mean").get<std::vector<double>>();
    auto rows = j.at("cov").get<std::vector<std::vector<double>>>();
    if (m.size() != 4 || rows.size() != 4) throw InvalidArgument("Gaussian state JSON needs 4-vector mean and 4x4 cov");
    Mat4 c;
    for (int i = 0; i < 4; ++i) {
        if (rows[i].size() != 4) throw InvalidArgument("Gaussian state JSON needs 4x4 cov");
        for (int k = 0; k < 4; ++k) c(i, k) = rows[i][k];
    }
    return {Vec4(m[0], m[1], m[2], m[3]), c};
}

}  // namespace qtomo
