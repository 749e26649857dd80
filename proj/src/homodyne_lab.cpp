#include "qtomo/homodyne_lab.hpp"

#include <atomic>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace qtomo {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Phase as a reduced fraction of pi, so schedule entries dedupe exactly.
struct PiFraction {
    int num = 0;
    int den = 1;

    double value() const { return kPi * num / den; }
    auto operator<=>(const PiFraction& o) const {
        return static_cast<long>(num) * o.den <=> static_cast<long>(o.num) * den;
    }
    bool operator==(const PiFraction& o) const { return (*this <=> o) == 0; }
};

PiFraction frac(int num, int den) {
    int g = std::gcd(num, den);
    if (g == 0) return {0, 1};
    return {num / g, den / g};
}

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Grid densities are refined by cubic interpolation before node-plus-jitter
// sampling: jitter over a cell of width h adds h^2 / 12 to the variance.
constexpr std::size_t kSampleRefinement = 16;

std::vector<double> cumulative_mass(std::vector<double> d) {
    for (double& v : d) v = std::max(v, 0.0);
    std::partial_sum(d.begin(), d.end(), d.begin());
    return d;
}

std::size_t pick_node(const std::vector<double>& cum, double u) {
    auto k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u * cum.back()) - cum.begin());
    return std::min(k, cum.size() - 1);
}

void add_noise(std::mt19937_64& gen, const NoiseModel& noise, double& x) {
    if (noise.sigma > 0.0) x += std::normal_distribution<double>(0.0, noise.sigma)(gen);
}

void check_noise(const NoiseModel& noise) {
    if (!std::isfinite(noise.sigma) || noise.sigma < 0.0) throw InvalidArgument("noise sigma must be finite and >= 0");
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) { return splitmix(seed ^ splitmix(salt)); }

std::vector<PhaseJob> make_phase_schedule(const std::string& list, std::size_t count) {
    if (count == 0) throw InvalidArgument("schedule needs at least one record per phase");
    std::set<std::string> tags;
    std::stringstream ss(list);
    for (std::string tag; std::getline(ss, tag, ',');) {
        tag.erase(0, tag.find_first_not_of(" \t"));
        tag.erase(tag.find_last_not_of(" \t") + 1);
        if (tag.empty()) continue;
        static const std::set<std::string> known{"uncertainty", "redundant", "cubic", "quartic", "fgrid", "joint", "all"};
        if (!known.count(tag)) throw InvalidArgument("unknown schedule tag '" + tag + "'");
        tags.insert(tag);
    }
    if (tags.empty()) throw InvalidArgument("empty schedule");
    if (tags.count("all")) tags = {"uncertainty", "redundant", "cubic", "quartic", "fgrid", "joint"};

    std::set<int> modes;
    std::set<PiFraction> phases;
    const bool single = tags.size() > (tags.count("joint") ? 1u : 0u);
    if (single) {
        modes = {1, 2, 3, 5};
        phases = {frac(0, 1), frac(1, 4), frac(1, 2)};
    }
    if (tags.count("redundant")) modes.insert({4, 6});
    if (tags.count("cubic")) phases.insert({frac(1, 3), frac(2, 3)});
    if (tags.count("quartic")) phases.insert({frac(1, 5), frac(2, 5), frac(3, 5)});

    std::set<std::pair<int, PiFraction>> singles;
    for (int m : modes)
        for (auto p : phases) singles.insert({m, p});
    if (tags.count("fgrid"))
        for (int m : {1, 2})
            for (int k = 0; k < 8; ++k) singles.insert({m, frac(k, 8)});

    std::vector<PhaseJob> jobs;
    for (const auto& [m, p] : singles) jobs.push_back({m, p.value(), std::nullopt, count});
    if (tags.count("joint")) {
        const std::array<PiFraction, 3> grid{frac(0, 1), frac(1, 4), frac(1, 2)};
        for (auto a : grid)
            for (auto b : grid) jobs.push_back({1, a.value(), b.value(), count});
    }
    return jobs;
}

nlohmann::json to_json(const std::vector<PhaseJob>& jobs) {
    auto arr = nlohmann::json::array();
    for (const auto& j : jobs) {
        nlohmann::json e = {{"mode", j.mode}, {"theta", j.theta}, {"count", j.count}};
        if (j.theta2) e["theta2"] = *j.theta2;
        arr.push_back(e);
    }
    return arr;
}

std::vector<double> sample(const TomogramSlice& slice, std::size_t n, std::uint64_t seed, const NoiseModel& noise) {
    if (n == 0) throw InvalidArgument("sample size must be at least 1");
    check_noise(noise);
    std::mt19937_64 gen(seed);
    std::vector<double> out(n);
    if (const auto* a = std::get_if<AnalyticSlice>(&slice.data)) {
        std::normal_distribution<double> dist(a->mean, std::sqrt(a->variance));
        for (double& x : out) {
            x = dist(gen);
            add_noise(gen, noise, x);
        }
        return out;
    }
    const auto& g = std::get<GridSlice>(slice.data);
    const auto cum = cumulative_mass(refine_cubic(g.density, kSampleRefinement));
    if (!(cum.back() > 0.0)) throw DataQualityError("cannot sample an unnormalizable grid slice");
    const double h = g.axis.step / static_cast<double>(kSampleRefinement);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (double& x : out) {
        x = g.axis.min + h * static_cast<double>(pick_node(cum, uni(gen))) + (uni(gen) - 0.5) * h;
        add_noise(gen, noise, x);
    }
    return out;
}

std::vector<std::pair<double, double>> sample(const JointTomogram& joint, std::size_t n, std::uint64_t seed,
                                              const NoiseModel& noise) {
    if (n == 0) throw InvalidArgument("sample size must be at least 1");
    check_noise(noise);
    std::mt19937_64 gen(seed);
    std::vector<std::pair<double, double>> out(n);
    if (const auto* a = std::get_if<AnalyticJoint>(&joint.data)) {
        Eigen::Matrix2d l = a->cov.llt().matrixL();
        std::normal_distribution<double> z(0.0, 1.0);
        for (auto& [x1, x2] : out) {
            double z1 = z(gen), z2 = z(gen);
            x1 = a->mean(0) + l(0, 0) * z1;
            x2 = a->mean(1) + l(1, 0) * z1 + l(1, 1) * z2;
            add_noise(gen, noise, x1);
            add_noise(gen, noise, x2);
        }
        return out;
    }
    const auto& g = std::get<GridJoint>(joint.data);
    const std::size_t f = kSampleRefinement / 2;
    const std::size_t n1 = (g.x1.count - 1) * f + 1, n2 = (g.x2.count - 1) * f + 1;
    // Refine along x2 (rows), then along x1 (columns).
    std::vector<double> rows(g.x1.count * n2);
    for (std::size_t i = 0; i < g.x1.count; ++i) {
        auto r = refine_cubic(std::span(g.density).subspan(i * g.x2.count, g.x2.count), f);
        std::copy(r.begin(), r.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * n2));
    }
    std::vector<double> fine(n1 * n2), column(g.x1.count);
    for (std::size_t j = 0; j < n2; ++j) {
        for (std::size_t i = 0; i < g.x1.count; ++i) column[i] = rows[i * n2 + j];
        auto c = refine_cubic(column, f);
        for (std::size_t i = 0; i < n1; ++i) fine[i * n2 + j] = c[i];
    }
    const auto cum = cumulative_mass(std::move(fine));
    if (!(cum.back() > 0.0)) throw DataQualityError("cannot sample an unnormalizable joint tomogram");
    const double h1 = g.x1.step / static_cast<double>(f), h2 = g.x2.step / static_cast<double>(f);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& [x1, x2] : out) {
        const std::size_t k = pick_node(cum, uni(gen));
        x1 = g.x1.min + h1 * static_cast<double>(k / n2) + (uni(gen) - 0.5) * h1;
        x2 = g.x2.min + h2 * static_cast<double>(k % n2) + (uni(gen) - 0.5) * h2;
        add_noise(gen, noise, x1);
        add_noise(gen, noise, x2);
    }
    return out;
}

HomodyneDataset acquire(const State& state, const std::vector<PhaseJob>& jobs, std::uint64_t seed,
                        const NoiseModel& noise, const RadonOptions& radon, std::size_t workers) {
    if (jobs.empty()) throw InvalidArgument("empty schedule");
    // Each job owns its seed and output buffer, so the result does not depend on workers.
    std::vector<std::vector<HomodyneRecord>> parts(jobs.size());
    auto run = [&](std::size_t i) {
        const auto& job = jobs[i];
        const std::uint64_t s = mix_seed(seed, i);
        auto& out = parts[i];
        out.reserve(job.count);
        if (job.paired()) {
            auto joint = optical_tomogram(state, job.theta, *job.theta2, radon);
            for (auto [x1, x2] : sample(joint, job.count, s, noise)) out.push_back({1, job.theta, x1, job.theta2, x2});
        } else {
            auto slice = derived_mode_tomogram(state, job.mode, job.theta, radon);
            for (double x : sample(slice, job.count, s, noise)) out.push_back({job.mode, job.theta, x, {}, {}});
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, jobs.size());
    if (workers == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next++) < jobs.size();) {
                    try {
                        run(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    HomodyneDataset data;
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    data.records.reserve(total);
    for (auto& p : parts) data.records.insert(data.records.end(), p.begin(), p.end());
    data.metadata = {{"schema_version", kSchemaVersion},
                     {"seed", seed},
                     {"schedule", to_json(jobs)},
                     {"noise", {{"sigma", noise.sigma}}}};
    return data;
}

std::string meta_path(const std::string& jsonl_path) { return jsonl_path + ".meta.json"; }

void write_metadata(const std::string& path, const HomodyneDataset& data) {
    nlohmann::json meta = data.metadata;
    meta["schema_version"] = kSchemaVersion;
    meta["records"] = data.records.size();
    std::ofstream out(meta_path(path));
    if (!out) throw Error("cannot write '" + meta_path(path) + "'");
    out << meta.dump(2) << '\n';
}

void write_jsonl(const std::string& path, const HomodyneDataset& data) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    char buf[192];
    for (const auto& r : data.records) {
        if (r.paired())
            std::snprintf(buf, sizeof buf, "{\"mode\":%d,\"theta\":%.17g,\"x\":%.17g,\"theta2\":%.17g,\"x2\":%.17g}\n",
                          r.mode, r.theta, r.x, *r.theta2, *r.x2);
        else
            std::snprintf(buf, sizeof buf, "{\"mode\":%d,\"theta\":%.17g,\"x\":%.17g}\n", r.mode, r.theta, r.x);
        out << buf;
    }
    if (!out) throw Error("failed writing '" + path + "'");
    write_metadata(path, data);
}

namespace {

// Flat {"key":number,...} objects only; anything else is rejected.
HomodyneRecord parse_record(const std::string& line, std::size_t lineno) {
    auto fail = [&](const std::string& why) {
        return InvalidArgument("record line " + std::to_string(lineno) + ": " + why);
    };
    HomodyneRecord r;
    bool has_mode = false, has_theta = false, has_x = false;
    const char* p = line.c_str();
    auto skip = [&] { while (*p == ' ' || *p == '\t' || *p == '\r') ++p; };
    skip();
    if (*p++ != '{') throw fail("expected '{'");
    for (;;) {
        skip();
        if (*p == '}') break;
        if (*p++ != '"') throw fail("expected key");
        const char* k = p;
        while (*p && *p != '"') ++p;
        std::string key(k, p);
        if (*p++ != '"') throw fail("unterminated key");
        skip();
        if (*p++ != ':') throw fail("expected ':'");
        skip();
        char* end = nullptr;
        double v = std::strtod(p, &end);
        if (end == p) throw fail("value of '" + key + "' is not a number");
        if (!std::isfinite(v)) throw fail("value of '" + key + "' is not finite");
        p = end;
        if (key == "mode") {
            if (v != std::floor(v)) throw fail("mode must be an integer");
            r.mode = static_cast<int>(v);
            has_mode = true;
        } else if (key == "theta") {
            r.theta = v;
            has_theta = true;
        } else if (key == "x") {
            r.x = v;
            has_x = true;
        } else if (key == "theta2") {
            r.theta2 = v;
        } else if (key == "x2") {
            r.x2 = v;
        } else {
            throw fail("unknown key '" + key + "'");
        }
        skip();
        if (*p == ',') ++p;
        else if (*p != '}') throw fail("expected ',' or '}'");
    }
    if (!has_mode || !has_theta || !has_x) throw fail("record needs mode, theta and x");
    if (r.mode < 1 || r.mode > kModeCount) throw fail("mode out of range");
    if (r.theta2.has_value() != r.x2.has_value()) throw fail("paired records need both theta2 and x2");
    if (r.paired() && r.mode != 1) throw fail("paired records must have mode 1");
    return r;
}

}  // namespace

HomodyneDataset read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset '" + path + "'");
    HomodyneDataset data;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        data.records.push_back(parse_record(line, lineno));
    }
    std::ifstream meta(meta_path(path));
    if (meta) {
        data.metadata = nlohmann::json::parse(meta);
        if (data.metadata.value("schema_version", 0) != kSchemaVersion)
            throw InvalidArgument("dataset metadata '" + meta_path(path) + "' has unsupported schema_version");
    }
    return data;
}

std::vector<std::vector<double>> bootstrap_sums(std::span<const double> features, std::size_t width,
                                                std::size_t replicates, std::uint64_t seed) {
    if (width == 0 || features.size() % width != 0) throw InvalidArgument("feature table has wrong shape");
    const std::size_t n = features.size() / width;
    std::vector<std::vector<double>> out(replicates, std::vector<double>(width, 0.0));
    if (n == 0) return out;
    for (std::size_t b = 0; b < replicates; ++b) {
        std::uint64_t state = mix_seed(seed, b);
        double* acc = out[b].data();
        for (std::size_t i = 0; i < n; ++i) {
            state += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = state;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            z ^= z >> 31;
            auto idx = static_cast<std::size_t>((static_cast<unsigned __int128>(z) * n) >> 64);
            const double* row = features.data() + idx * width;
            for (std::size_t f = 0; f < width; ++f) acc[f] += row[f];
        }
    }
    return out;
}

std::uint64_t group_salt(int mode, double theta, std::optional<double> theta2) {
    auto key = [](double t) { return static_cast<std::uint64_t>(std::llround(wrap_angle(t) * 1e8)); };
    std::uint64_t s = splitmix(static_cast<std::uint64_t>(mode)) ^ key(theta);
    if (theta2) s = splitmix(s) ^ (key(*theta2) + 0x2545f4914f6cdd1dULL);
    return s;
}

Estimate empirical_moment(const HomodyneDataset& data, int mode, double theta, int n, const BootstrapOptions& opts) {
    check_mode(mode);
    if (n < 0 || n > kMaxOrder) throw InvalidArgument("moment order out of range");
    std::vector<double> xs;
    double stored = theta, sign = 1.0;
    for (double shift : {0.0, kPi}) {
        for (const auto& r : data.records)
            if (!r.paired() && r.mode == mode && angle_distance(r.theta, theta + shift) < 1e-9) {
                xs.push_back(r.x);
                stored = r.theta;
            }
        if (!xs.empty()) {
            sign = (shift != 0.0 && n % 2 == 1) ? -1.0 : 1.0;
            break;
        }
    }
    if (xs.empty()) throw MissingData("no records for mode " + std::to_string(mode) + " at theta=" + format_number(theta));
    if (xs.size() < opts.min_records)
        throw DataQualityError("only " + std::to_string(xs.size()) + " records for mode " + std::to_string(mode) +
                               " at theta=" + format_number(theta));
    std::vector<double> feats(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) feats[i] = std::pow(xs[i], n);
    const double count = static_cast<double>(xs.size());
    double value = std::accumulate(feats.begin(), feats.end(), 0.0) / count;
    auto sums = bootstrap_sums(feats, 1, opts.replicates, mix_seed(opts.seed, group_salt(mode, stored, std::nullopt)));
    std::vector<double> reps;
    for (const auto& s : sums) reps.push_back(s[0] / count);
    return {sign * value, stddev(reps)};
}

}  // namespace qtomo
