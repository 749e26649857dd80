#include "qtomo/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace qtomo {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw InvalidArgument(where + " must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw InvalidArgument("unknown key '" + key + "' in " + where);
}

void check_schema(const json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("schema_version"))
        throw InvalidArgument(what + " has no schema_version");
    if (j.at("schema_version") != kSchemaVersion)
        throw InvalidArgument(what + " has schema_version " + j.at("schema_version").dump() + ", expected " +
                              std::to_string(kSchemaVersion));
}

std::string interpolation_name(Interpolation i) { return i == Interpolation::cubic ? "cubic" : "bilinear"; }

Interpolation interpolation_from_string(const std::string& s) {
    if (s == "cubic") return Interpolation::cubic;
    if (s == "bilinear") return Interpolation::bilinear;
    throw InvalidArgument("unknown interpolation '" + s + "'");
}

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"stderr", e.error}}; }

json matrix_json(const Mat4& m) {
    json rows = json::array();
    for (int i = 0; i < 4; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2), m(i, 3)});
    return rows;
}

std::string phase_pair_name(double a, double b) { return "(" + format_number(a) + ", " + format_number(b) + ")"; }

}  // namespace

BootstrapOptions RunConfig::effective_bootstrap() const {
    BootstrapOptions b = bootstrap;
    b.seed = bootstrap_seed ? *bootstrap_seed : mix_seed(seed, 0xb0075ull);
    return b;
}

json to_json(const RunConfig& c) {
    json solver = json::object();
    for (const auto& [n, phases] : c.report.solver_phases) solver[std::to_string(n)] = phases;
    json tomo = json::array();
    for (const auto& p : c.tomogram_phases) tomo.push_back({p[0], p[1]});
    const auto& r = c.reconstruction;
    return {
        {"schema_version", kSchemaVersion},
        {"state", to_json(c.state)},
        {"seed", c.seed},
        {"jobs", c.jobs},
        {"acquisition", {{"schedule", c.schedule}, {"shots_per_phase", c.shots_per_phase}, {"noise_sigma", c.noise.sigma}}},
        {"bootstrap",
         {{"replicates", c.bootstrap.replicates},
          {"min_records", c.bootstrap.min_records},
          {"seed", c.bootstrap_seed ? json(*c.bootstrap_seed) : json(nullptr)}}},
        {"radon", {{"interpolation", interpolation_name(c.radon.interpolation)}}},
        {"mode_phases", to_json(c.mode_phases)},
        {"solver_phases", solver},
        {"verdict", {{"z", c.report.rule.z}, {"tolerance", c.report.rule.tolerance}, {"saturation", c.report.rule.saturation}}},
        {"cross_validation", {{"z", c.report.cross.z}, {"tolerance", c.report.cross.tolerance}}},
        {"checks", {{"f_modes", c.report.f_modes}, {"f_thetas", c.report.f_thetas}, {"cubic_thetas", c.report.cubic_thetas}}},
        {"moment_degree", c.moment_degree},
        {"reconstruction",
         {{"order", r.order},
          {"form", to_string(r.form)},
          {"truncation_epsilon", r.truncation_epsilon},
          {"window", r.window ? json(*r.window) : json(nullptr)},
          {"decay_sigmas", r.decay_sigmas},
          {"x_window_sigmas", r.x_window_sigmas},
          {"tomogram_points", r.tomogram_points},
          {"wigner_points", r.wigner_points},
          {"max_charfn_points", r.max_charfn_points},
          {"tomogram_phases", tomo},
          {"wigner", c.reconstruct_wigner}}},
        {"out_dir", c.out_dir},
    };
}

RunConfig config_from_json(const json& j) {
    check_schema(j, "config");
    reject_unknown(j,
                   {"schema_version", "state", "seed", "jobs", "acquisition", "bootstrap", "radon", "mode_phases",
                    "solver_phases", "verdict", "cross_validation", "checks", "moment_degree", "reconstruction",
                    "out_dir"},
                   "config");
    RunConfig c;
    if (j.contains("state")) c.state = descriptor_from_json(j["state"]);
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("acquisition")) {
        const auto& a = j["acquisition"];
        reject_unknown(a, {"schedule", "shots_per_phase", "noise_sigma"}, "acquisition");
        c.schedule = a.value("schedule", c.schedule);
        c.shots_per_phase = a.value("shots_per_phase", c.shots_per_phase);
        c.noise.sigma = a.value("noise_sigma", c.noise.sigma);
    }
    if (j.contains("bootstrap")) {
        const auto& b = j["bootstrap"];
        reject_unknown(b, {"replicates", "min_records", "seed"}, "bootstrap");
        c.bootstrap.replicates = b.value("replicates", c.bootstrap.replicates);
        c.bootstrap.min_records = b.value("min_records", c.bootstrap.min_records);
        if (b.contains("seed") && !b["seed"].is_null()) c.bootstrap_seed = b["seed"].get<std::uint64_t>();
    }
    if (j.contains("radon")) {
        reject_unknown(j["radon"], {"interpolation"}, "radon");
        c.radon.interpolation = interpolation_from_string(j["radon"].value("interpolation", std::string("cubic")));
    }
    if (j.contains("mode_phases")) c.mode_phases = phase_set_from_json(j["mode_phases"]);
    if (j.contains("solver_phases")) {
        for (const auto& [key, value] : j["solver_phases"].items())
            c.report.solver_phases[std::stoi(key)] = value.get<std::vector<double>>();
    }
    if (j.contains("verdict")) {
        const auto& v = j["verdict"];
        reject_unknown(v, {"z", "tolerance", "saturation"}, "verdict");
        c.report.rule.z = v.value("z", c.report.rule.z);
        c.report.rule.tolerance = v.value("tolerance", c.report.rule.tolerance);
        c.report.rule.saturation = v.value("saturation", c.report.rule.saturation);
    }
    if (j.contains("cross_validation")) {
        const auto& v = j["cross_validation"];
        reject_unknown(v, {"z", "tolerance"}, "cross_validation");
        c.report.cross.z = v.value("z", c.report.cross.z);
        c.report.cross.tolerance = v.value("tolerance", c.report.cross.tolerance);
    }
    if (j.contains("checks")) {
        const auto& v = j["checks"];
        reject_unknown(v, {"f_modes", "f_thetas", "cubic_thetas"}, "checks");
        c.report.f_modes = v.value("f_modes", c.report.f_modes);
        c.report.f_thetas = v.value("f_thetas", c.report.f_thetas);
        c.report.cubic_thetas = v.value("cubic_thetas", c.report.cubic_thetas);
    }
    c.moment_degree = j.value("moment_degree", c.moment_degree);
    if (j.contains("reconstruction")) {
        const auto& v = j["reconstruction"];
        reject_unknown(v,
                       {"order", "form", "truncation_epsilon", "window", "decay_sigmas", "x_window_sigmas",
                        "tomogram_points", "wigner_points", "max_charfn_points", "tomogram_phases", "wigner"},
                       "reconstruction");
        auto& r = c.reconstruction;
        r.order = v.value("order", r.order);
        if (v.contains("form")) r.form = series_form_from_string(v["form"].get<std::string>());
        r.truncation_epsilon = v.value("truncation_epsilon", r.truncation_epsilon);
        if (v.contains("window") && !v["window"].is_null()) r.window = v["window"].get<double>();
        r.decay_sigmas = v.value("decay_sigmas", r.decay_sigmas);
        r.x_window_sigmas = v.value("x_window_sigmas", r.x_window_sigmas);
        r.tomogram_points = v.value("tomogram_points", r.tomogram_points);
        r.wigner_points = v.value("wigner_points", r.wigner_points);
        r.max_charfn_points = v.value("max_charfn_points", r.max_charfn_points);
        if (v.contains("tomogram_phases")) {
            c.tomogram_phases.clear();
            for (const auto& p : v["tomogram_phases"]) {
                if (!p.is_array() || p.size() != 2) throw InvalidArgument("tomogram_phases entries must be [theta1, theta2]");
                c.tomogram_phases.push_back({p[0].get<double>(), p[1].get<double>()});
            }
        }
        c.reconstruct_wigner = v.value("wigner", c.reconstruct_wigner);
    }
    c.out_dir = j.value("out_dir", c.out_dir);
    if (c.jobs == 0) throw InvalidArgument("jobs must be at least 1");
    if (c.moment_degree < 1 || c.moment_degree > kMaxOrder) throw InvalidArgument("moment_degree out of range");
    return c;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingData("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
    }
    check_schema(j, "'" + path + "'");
    return j;
}

RunConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

json cmd_state(const StateDescriptor& desc) {
    json doc = {{"schema_version", kSchemaVersion}, {"descriptor", to_json(desc)}};
    if (desc.kind != StateKind::grid) {
        const GaussianState g = make_gaussian(desc);
        doc["gaussian"] = gaussian_to_json(g);
        const auto phys = validate_physicality(g);
        doc["physicality"] = {{"physical", phys.physical}, {"min_eigenvalue", phys.min_eigenvalue}};
    } else {
        const State s = make_state(desc);
        doc["grid"] = {{"normalization", std::get<GridWigner>(s).normalization()}};
    }
    return doc;
}

StateDescriptor descriptor_from_state_file(const json& j) {
    if (j.contains("descriptor")) {
        check_schema(j, "state file");
        return descriptor_from_json(j["descriptor"]);
    }
    return descriptor_from_json(j);
}

HomodyneDataset cmd_sample(const State& state, const RunConfig& config) {
    auto jobs = make_phase_schedule(config.schedule, config.shots_per_phase);
    return acquire(state, jobs, config.seed, config.noise, config.radon, config.jobs);
}

std::unique_ptr<MomentSource> analytic_source(const State& state, const RunConfig& config) {
    return std::make_unique<StateSource>(state, config.radon);
}

std::unique_ptr<MomentSource> dataset_source(const HomodyneDataset& data, const RunConfig& config) {
    return std::make_unique<DatasetSource>(data, config.effective_bootstrap());
}

json cmd_moments(const MomentSource& src, const RunConfig& config) {
    json doc = {{"schema_version", kSchemaVersion}, {"exact", src.exact()}, {"replicates", src.replicate_count()}};
    json skipped = json::array();
    auto attempt = [&](const std::string& what, const std::function<void()>& f) {
        try {
            f();
        } catch (const MissingData& e) {
            skipped.push_back(what + ": " + e.what());
        } catch (const SingularConfiguration& e) {
            skipped.push_back(what + ": " + e.what());
        }
    };

    attempt("mean", [&] {
        auto m = evaluate_vector(src, [](const MomentSource& s) {
            Vec4 v = mean_value(s);
            return std::vector<double>(v.data(), v.data() + 4);
        });
        json arr = json::array();
        for (const auto& e : m) arr.push_back(estimate_json(e));
        doc["mean"] = arr;
    });
    attempt("dispersion", [&] {
        auto d = dispersion_matrix(src);
        doc["dispersion"] = {{"value", matrix_json(d.value)}, {"stderr", matrix_json(d.error)}};
    });
    doc["cross_validation"] = to_json(cross_validate(src, config.report.cross));

    attempt("mode-network", [&] {
        const SMatrix s = build_s_matrix(config.mode_phases);
        json net = {{"phases", to_json(config.mode_phases)},
                    {"determinant", s.determinant},
                    {"hadamard_ratio", s.hadamard_ratio},
                    {"condition_number", s.condition_number}};
        const double th[4] = {config.mode_phases.theta3, config.mode_phases.theta4, config.mode_phases.theta5,
                              config.mode_phases.theta6};
        auto rec = evaluate_vector(src, [&](const MomentSource& x) {
            Vec4 derived;
            for (int k = 0; k < 4; ++k) derived(k) = x.slice_moment(k + 3, th[k], 1);
            Vec4 m = means_from_derived(s, derived);
            return std::vector<double>(m.data(), m.data() + 4);
        });
        json arr = json::array();
        for (const auto& e : rec) arr.push_back(estimate_json(e));
        net["means_p1_p2_q1_q2"] = arr;
        doc["mode_network"] = net;
    });

    json ordered = json::array();
    for (int mode : {1, 2})
        attempt("ordered-mode-" + std::to_string(mode), [&] {
            ordered.push_back(to_json(ordered_moment_table(src, {mode, 0.0}, config.moment_degree, config.report.solver_phases)));
        });
    doc["ordered"] = ordered;
    attempt("photon", [&] { doc["photon"] = to_json(photon_moments(src, config.report.solver_phases)); });
    doc["skipped"] = skipped;
    return doc;
}

CheckResult cmd_check(const MomentSource& src, const RunConfig& config, const std::string& source_label) {
    CheckResult r;
    r.report = full_report(src, config.report);
    r.document = to_json(r.report);
    r.document["schema_version"] = kSchemaVersion;
    r.document["source"] = source_label;
    return r;
}

json cmd_reconstruct(const MomentSource& src, const RunConfig& config, const std::string& out_dir,
                     const State* truth) {
    std::filesystem::create_directories(out_dir);
    const auto& opts = config.reconstruction;
    json doc = {{"schema_version", kSchemaVersion}, {"order", opts.order}, {"form", to_string(opts.form)}};
    json tomograms = json::array();
    json skipped = json::array();

    for (std::size_t i = 0; i < config.tomogram_phases.size(); ++i) {
        const auto [t1, t2] = config.tomogram_phases[i];
        try {
            const CharFnSeries series = tomogram_series(src, t1, t2, opts);
            const GridField field = charfn_grid(series, opts);
            InversionQuality q;
            const JointTomogram joint = invert_to_tomogram(field, &q);
            const std::string file = "tomogram_" + std::to_string(i) + ".csv";
            std::ofstream csv(std::filesystem::path(out_dir) / file);
            write_joint_csv(csv, joint, opts.tomogram_points);
            json entry = {{"theta1", t1},
                          {"theta2", t2},
                          {"file", file},
                          {"window", field.window},
                          {"admitted_window", std::isfinite(series.admitted_window) ? json(series.admitted_window) : json(nullptr)},
                          {"charfn_points", field.axes[0].count},
                          {"charfn_origin", field.at_origin().real()},
                          {"imaginary_residue", q.imaginary_residue},
                          {"raw_normalization", q.raw_normalization},
                          {"min_value", q.min_value}};
            if (truth) {
                const JointTomogram exact = optical_tomogram(*truth, t1, t2, config.radon);
                entry["linf_joint"] = linf_at_nodes(joint, exact);
                double marg = 0.0;
                for (int keep : {1, 2}) marg = std::max(marg, linf_at_nodes(marginalize(joint, keep), marginalize(exact, keep)));
                entry["linf_marginal"] = marg;
            }
            tomograms.push_back(entry);
        } catch (const MissingData& e) {
            skipped.push_back("tomogram " + phase_pair_name(t1, t2) + ": " + e.what());
        }
    }
    doc["tomograms"] = tomograms;

    if (config.reconstruct_wigner) {
        try {
            const CrossMoments moments = solve_cross_moments(src, opts.order);
            const CharFnSeries series = wigner_series(moments, opts);
            const GridField field = charfn_grid(series, opts);
            InversionQuality q;
            GridWigner grid = invert_to_wigner(field, &q);
            const std::string file = "wigner.bin";
            write_grid_file((std::filesystem::path(out_dir) / file).string(), grid);
            json charfn_points = json::array();
            for (const auto& a : field.axes) charfn_points.push_back(a.count);
            json entry = {{"file", file},
                          {"window", field.window},
                          {"charfn_points", charfn_points},
                          {"grid_points", opts.wigner_points},
                          {"imaginary_residue", q.imaginary_residue},
                          {"normalization", q.raw_normalization},
                          {"min_value", q.min_value}};
            if (truth) {
                const State recovered = grid;
                double worst = 0.0;
                for (int mode : {1, 2})
                    for (double theta : {0.0, kPi / 4, kPi / 2}) {
                        const TomogramSlice e = derived_mode_tomogram(*truth, mode, theta, config.radon);
                        const TomogramSlice r = derived_mode_tomogram(recovered, mode, theta, config.radon);
                        worst = std::max(worst, linf_at_nodes(r, e));
                    }
                entry["linf_round_trip"] = worst;
            }
            doc["wigner"] = entry;
        } catch (const MissingData& e) {
            skipped.push_back(std::string("wigner: ") + e.what());
        }
    }
    doc["skipped"] = skipped;
    return doc;
}

int combine_exit_codes(std::initializer_list<int> codes) {
    int out = 0;
    for (int c : codes) {
        if (c == 1) return 1;
        if (c == 2) out = 2;
        else if (c == 3 && out == 0) out = 3;
    }
    return out;
}

PipelineReport cmd_report(const RunConfig& config) {
    namespace fs = std::filesystem;
    const fs::path out(config.out_dir);
    fs::create_directories(out);

    json state_doc = cmd_state(config.state);
    write_json_file((out / "state.json").string(), state_doc);
    const State state = make_state(config.state);

    auto analytic = analytic_source(state, config);
    CheckResult analytic_check = cmd_check(*analytic, config, "analytic");
    write_json_file((out / "check_analytic.json").string(), analytic_check.document);
    json analytic_moments = cmd_moments(*analytic, config);
    write_json_file((out / "moments_analytic.json").string(), analytic_moments);

    json config_doc = to_json(config);
    config_doc.erase("jobs");  // results depend on neither the worker count
    config_doc.erase("out_dir");  // nor where they are written
    json doc = {{"schema_version", kSchemaVersion}, {"config", config_doc}, {"state", state_doc},
                {"analytic", {{"check", analytic_check.document}, {"moments", analytic_moments}}}};
    json reconstruction = {{"analytic", cmd_reconstruct(*analytic, config, (out / "reconstruct_analytic").string(), &state)}};

    int sampled_exit = 0;
    if (config.shots_per_phase > 0) {
        HomodyneDataset data = cmd_sample(state, config);
        data.metadata["state"] = to_json(config.state);
        write_jsonl((out / "data.jsonl").string(), data);
        auto sampled = dataset_source(data, config);
        CheckResult sampled_check = cmd_check(*sampled, config, "data.jsonl");
        write_json_file((out / "check_sampled.json").string(), sampled_check.document);
        json sampled_moments = cmd_moments(*sampled, config);
        write_json_file((out / "moments_sampled.json").string(), sampled_moments);
        doc["sampled"] = {{"records", data.records.size()}, {"check", sampled_check.document}, {"moments", sampled_moments}};
        RunConfig sampled_config = config;
        sampled_config.reconstruct_wigner = false;  // needs the full cross-phase grid, which no schedule tag provides
        reconstruction["sampled"] = cmd_reconstruct(*sampled, sampled_config, (out / "reconstruct_sampled").string(), &state);
        sampled_exit = sampled_check.report.exit_code();
    }
    doc["reconstruction"] = reconstruction;

    PipelineReport r;
    r.exit_code = combine_exit_codes({analytic_check.report.exit_code(), sampled_exit});
    doc["summary"] = {{"analytic_exit_code", analytic_check.report.exit_code()},
                      {"sampled_exit_code", sampled_exit},
                      {"exit_code", r.exit_code}};
    write_json_file((out / "report.json").string(), doc);
    r.document = std::move(doc);
    return r;
}

}  // namespace qtomo
