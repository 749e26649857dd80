#include "qtomo/moment_source.hpp"

#include <numeric>

namespace qtomo {

const MomentSource& MomentSource::replicate(std::size_t) const {
    throw InvalidArgument("exact moment sources have no bootstrap replicates");
}

namespace {

double spread(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

long long angle_key(double theta) { return std::llround(wrap_angle(theta) * 1e10) % std::llround(kTwoPi * 1e10); }

void check_order(int n) {
    if (n < 0 || n > kMaxOrder) throw InvalidArgument("moment order " + std::to_string(n) + " outside 0..8");
}

}  // namespace

Estimate evaluate(const MomentSource& src, const std::function<double(const MomentSource&)>& f) {
    Estimate e{f(src), 0.0};
    if (src.exact()) return e;
    std::vector<double> reps(src.replicate_count());
    for (std::size_t b = 0; b < reps.size(); ++b) reps[b] = f(src.replicate(b));
    e.error = spread(reps);
    return e;
}

std::vector<Estimate> evaluate_vector(const MomentSource& src,
                                      const std::function<std::vector<double>(const MomentSource&)>& f) {
    auto values = f(src);
    std::vector<Estimate> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i].value = values[i];
    if (src.exact()) return out;
    std::vector<std::vector<double>> reps(values.size(), std::vector<double>(src.replicate_count()));
    for (std::size_t b = 0; b < src.replicate_count(); ++b) {
        auto r = f(src.replicate(b));
        if (r.size() != values.size()) throw InternalConsistencyError("replicate returned a different number of values");
        for (std::size_t i = 0; i < r.size(); ++i) reps[i][b] = r[i];
    }
    for (std::size_t i = 0; i < values.size(); ++i) out[i].error = spread(reps[i]);
    return out;
}

double gaussian_raw_moment(double mean, double variance, int n) {
    return TomogramSlice{AnalyticSlice{mean, variance}, {}, {}}.moment(n);
}

StateSource::StateSource(State state, RadonOptions radon) : state_(std::move(state)), radon_(radon) {}

double StateSource::slice_moment(int mode, double theta, int n) const {
    check_mode(mode);
    check_order(n);
    if (const auto* g = std::get_if<GaussianState>(&state_)) {
        Vec4 v = quadrature_form(mode, theta).coeffs;
        return gaussian_raw_moment(v.dot(g->mean()), v.dot(g->cov() * v), n);
    }
    const auto key = std::make_pair(mode, angle_key(theta));
    {
        std::lock_guard lock(mutex_);
        if (auto it = slice_cache_.find(key); it != slice_cache_.end()) return it->second[static_cast<std::size_t>(n)];
    }
    auto slice = derived_mode_tomogram(state_, mode, theta, radon_);
    std::vector<double> m(kMaxOrder + 1);
    for (int k = 0; k <= kMaxOrder; ++k) m[static_cast<std::size_t>(k)] = slice.moment(k);
    std::lock_guard lock(mutex_);
    return slice_cache_.emplace(key, std::move(m)).first->second[static_cast<std::size_t>(n)];
}

double StateSource::joint_moment(double theta1, double theta2, int n, int m) const {
    check_order(n);
    check_order(m);
    if (std::holds_alternative<GaussianState>(state_)) return optical_tomogram(state_, theta1, theta2).moment(n, m);
    const auto key = std::make_pair(angle_key(theta1), angle_key(theta2));
    const auto idx = static_cast<std::size_t>(n * (kMaxOrder + 1) + m);
    {
        std::lock_guard lock(mutex_);
        if (auto it = joint_cache_.find(key); it != joint_cache_.end()) return it->second[idx];
    }
    auto joint = optical_tomogram(state_, theta1, theta2, radon_);
    std::vector<double> table((kMaxOrder + 1) * (kMaxOrder + 1));
    for (int a = 0; a <= kMaxOrder; ++a)
        for (int b = 0; b <= kMaxOrder; ++b) table[static_cast<std::size_t>(a * (kMaxOrder + 1) + b)] = joint.moment(a, b);
    std::lock_guard lock(mutex_);
    return joint_cache_.emplace(key, std::move(table)).first->second[idx];
}

// Features per record: x^1..x^8 for single groups; x1^a x2^b with
// 1 <= a + b <= 8 for paired groups. Low orders (<= 4) and high orders are
// bootstrapped separately and only on first use.
struct DatasetSource::Group {
    int mode = 1;
    double theta = 0.0;
    std::optional<double> theta2;
    std::vector<double> x, x2;

    std::mutex mutex;
    bool low_ready = false, high_ready = false;
    // sums[rep][feature], rep 0 = full data, rep b + 1 = bootstrap resample b.
    std::vector<std::vector<double>> sums;

    std::size_t size() const { return x.size(); }
};

namespace {

using Group = DatasetSource::Group;

// Feature layout for paired groups: index of x1^a x2^b in a (9 x 9) table.
std::size_t joint_index(int a, int b) { return static_cast<std::size_t>(a * (kMaxOrder + 1) + b); }

bool in_band(int degree, bool high) { return high ? degree > 4 : degree <= 4; }

void fill_band(Group& g, bool high, const BootstrapOptions& opts) {
    const std::size_t n = g.size();
    const std::size_t reps = opts.replicates;
    const bool paired = g.theta2.has_value();
    const std::size_t table = paired ? (kMaxOrder + 1) * (kMaxOrder + 1) : kMaxOrder + 1;
    if (g.sums.empty()) g.sums.assign(reps + 1, std::vector<double>(table, 0.0));

    std::vector<std::size_t> slots;
    if (paired) {
        for (int a = 0; a <= kMaxOrder; ++a)
            for (int b = 0; a + b <= kMaxOrder; ++b)
                if (a + b > 0 && in_band(a + b, high)) slots.push_back(joint_index(a, b));
    } else {
        for (int k = 1; k <= kMaxOrder; ++k)
            if (in_band(k, high)) slots.push_back(static_cast<std::size_t>(k));
    }
    const std::size_t width = slots.size();
    std::vector<double> feats(n * width);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < width; ++f) {
            std::size_t s = slots[f];
            double v = paired ? std::pow(g.x[i], static_cast<int>(s) / (kMaxOrder + 1)) *
                                    std::pow(g.x2[i], static_cast<int>(s) % (kMaxOrder + 1))
                              : std::pow(g.x[i], static_cast<int>(s));
            feats[i * width + f] = v;
        }
    for (std::size_t f = 0; f < width; ++f) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += feats[i * width + f];
        g.sums[0][slots[f]] = s;
    }
    const std::uint64_t seed = mix_seed(opts.seed, group_salt(g.mode, g.theta, g.theta2));
    auto boot = bootstrap_sums(feats, width, reps, seed);
    for (std::size_t b = 0; b < reps; ++b)
        for (std::size_t f = 0; f < width; ++f) g.sums[b + 1][slots[f]] = boot[b][f];
}

double group_mean(Group& g, std::size_t rep, std::size_t slot, int degree, const BootstrapOptions& opts) {
    if (degree == 0) return 1.0;
    std::lock_guard lock(g.mutex);
    bool high = degree > 4;
    bool& ready = high ? g.high_ready : g.low_ready;
    if (!ready) {
        fill_band(g, high, opts);
        ready = true;
    }
    return g.sums[rep][slot] / static_cast<double>(g.size());
}

}  // namespace

class DatasetSource::Replicate final : public MomentSource {
public:
    Replicate(const DatasetSource& parent, std::size_t rep) : parent_(parent), rep_(rep) {}

    bool has_slice(int mode, double theta) const override { return parent_.has_slice(mode, theta); }
    double slice_moment(int mode, double theta, int n) const override {
        return parent_.slice_at(rep_, mode, theta, n);
    }
    bool has_joint(double t1, double t2) const override { return parent_.has_joint(t1, t2); }
    double joint_moment(double t1, double t2, int n, int m) const override {
        return parent_.joint_at(rep_, t1, t2, n, m);
    }

private:
    const DatasetSource& parent_;
    std::size_t rep_;
};

DatasetSource::DatasetSource(const HomodyneDataset& data, BootstrapOptions opts) : opts_(opts) {
    if (opts_.replicates < 2) throw InvalidArgument("bootstrap needs at least 2 replicates");
    std::map<std::tuple<int, long long, long long>, Group*> index;
    for (const auto& r : data.records) {
        auto key = std::make_tuple(r.paired() ? 0 : r.mode, angle_key(r.theta), r.paired() ? angle_key(*r.theta2) : -1LL);
        auto it = index.find(key);
        if (it == index.end()) {
            groups_.push_back(std::make_unique<Group>());
            auto& g = *groups_.back();
            g.mode = r.mode;
            g.theta = r.theta;
            g.theta2 = r.theta2;
            it = index.emplace(key, &g).first;
        }
        it->second->x.push_back(r.x);
        if (r.paired()) it->second->x2.push_back(*r.x2);
    }
    for (std::size_t b = 0; b < opts_.replicates; ++b) replicates_.push_back(std::make_unique<Replicate>(*this, b + 1));
}

DatasetSource::~DatasetSource() = default;

std::size_t DatasetSource::group_count() const { return groups_.size(); }
std::size_t DatasetSource::replicate_count() const { return replicates_.size(); }
const MomentSource& DatasetSource::replicate(std::size_t b) const { return *replicates_.at(b); }

namespace {

struct Match {
    Group* group = nullptr;
    bool flip1 = false;
    bool flip2 = false;
};

Match find_slice(const std::vector<std::unique_ptr<Group>>& groups, int mode, double theta) {
    for (bool flip : {false, true})
        for (const auto& g : groups)
            if (!g->theta2 && g->mode == mode && angle_distance(g->theta, theta + (flip ? kPi : 0.0)) < 1e-9)
                return {g.get(), flip, false};
    return {};
}

Match find_joint(const std::vector<std::unique_ptr<Group>>& groups, double t1, double t2) {
    for (bool f1 : {false, true})
        for (bool f2 : {false, true})
            for (const auto& g : groups)
                if (g->theta2 && angle_distance(g->theta, t1 + (f1 ? kPi : 0.0)) < 1e-9 &&
                    angle_distance(*g->theta2, t2 + (f2 ? kPi : 0.0)) < 1e-9)
                    return {g.get(), f1, f2};
    return {};
}

void check_size(const Group& g, std::size_t min_records, const std::string& what) {
    if (g.size() < min_records)
        throw DataQualityError("only " + std::to_string(g.size()) + " records for " + what + " (need " +
                               std::to_string(min_records) + ")");
}

}  // namespace

bool DatasetSource::has_slice(int mode, double theta) const { return find_slice(groups_, mode, theta).group != nullptr; }

bool DatasetSource::has_joint(double t1, double t2) const { return find_joint(groups_, t1, t2).group != nullptr; }

double DatasetSource::slice_moment(int mode, double theta, int n) const { return slice_at(0, mode, theta, n); }

double DatasetSource::joint_moment(double t1, double t2, int n, int m) const { return joint_at(0, t1, t2, n, m); }

double DatasetSource::slice_at(std::size_t rep, int mode, double theta, int n) const {
    check_mode(mode);
    check_order(n);
    Match hit = find_slice(groups_, mode, theta);
    const std::string what = "mode " + std::to_string(mode) + " at theta=" + format_number(theta);
    if (!hit.group) throw MissingData("no records for " + what);
    check_size(*hit.group, opts_.min_records, what);
    double v = group_mean(*hit.group, rep, static_cast<std::size_t>(n), n, opts_);
    return hit.flip1 && n % 2 == 1 ? -v : v;
}

double DatasetSource::joint_at(std::size_t rep, double t1, double t2, int n, int m) const {
    check_order(n);
    check_order(m);
    if (n + m > kMaxOrder) throw InvalidArgument("joint moment degree exceeds 8");
    Match hit = find_joint(groups_, t1, t2);
    const std::string what = "paired records at theta1=" + format_number(t1) + ", theta2=" + format_number(t2);
    if (!hit.group) throw MissingData("no " + what);
    check_size(*hit.group, opts_.min_records, what);
    double v = group_mean(*hit.group, rep, joint_index(n, m), n + m, opts_);
    if (hit.flip1 && n % 2 == 1) v = -v;
    if (hit.flip2 && m % 2 == 1) v = -v;
    return v;
}

}  // namespace qtomo
