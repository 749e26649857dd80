// qtomo: stage-file command line for the homodyne uncertainty pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "qtomo/pipeline.hpp"

using namespace qtomo;
using nlohmann::json;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::string out;
};

struct SourceFlags {
    bool analytic = false;
    std::string state_path;
    std::string data_path;
};

void add_source_flags(CLI::App* cmd, SourceFlags& f) {
    cmd->add_flag("--analytic", f.analytic, "Use exact moments of --state");
    cmd->add_option("--state", f.state_path, "State JSON (state file or bare descriptor)");
    cmd->add_option("--data", f.data_path, "Homodyne dataset (JSONL)");
}

RunConfig make_config(const Globals& g) {
    RunConfig c = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
    if (g.seed) c.seed = *g.seed;
    if (g.jobs) c.jobs = *g.jobs;
    if (c.jobs == 0) throw InvalidArgument("--jobs must be at least 1");
    return c;
}

State load_state(const std::string& path) {
    if (path.empty()) throw InvalidArgument("--state is required");
    std::ifstream in(path);
    if (!in) throw MissingData("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
    }
    return make_state(descriptor_from_state_file(j));
}

struct LoadedSource {
    std::optional<State> state;
    std::optional<HomodyneDataset> data;
    std::unique_ptr<MomentSource> source;
    std::string label;
};

LoadedSource open_source(const SourceFlags& f, const RunConfig& config) {
    LoadedSource s;
    if (f.analytic == !f.data_path.empty())
        throw InvalidArgument("give exactly one of --analytic (with --state) or --data");
    if (f.analytic) {
        s.state = load_state(f.state_path);
        s.source = analytic_source(*s.state, config);
        s.label = "analytic";
    } else {
        s.data = read_jsonl(f.data_path);
        s.source = dataset_source(*s.data, config);
        s.label = std::filesystem::path(f.data_path).filename().string();
        if (!f.state_path.empty()) s.state = load_state(f.state_path);
    }
    return s;
}

void emit(const json& doc, const std::string& out) {
    if (out.empty() || out == "-") std::cout << doc.dump(2) << '\n';
    else write_json_file(out, doc);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Homodyne tomography uncertainty pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "RunConfig JSON");
    app.add_option("--seed", g.seed, "Seed for acquisition and bootstrap");
    app.add_option("--jobs", g.jobs, "Worker cap");
    app.add_option("--out", g.out, "Output file (single artifacts) or directory (reconstruct, report)");

    auto* state_cmd = app.add_subcommand("state", "State construction");
    state_cmd->require_subcommand(1);
    auto* make_cmd = state_cmd->add_subcommand("make", "Write a state JSON");
    std::string kind = "vacuum";
    std::vector<std::string> params;
    bool allow_unphysical = false;
    make_cmd->add_option("--kind", kind, "vacuum, coherent, squeezed, two_mode_squeezed, thermal, grid");
    make_cmd->add_option("--param", params, "name=value (repeatable), e.g. r=0.3; file=<grid> for grid states");
    make_cmd->add_flag("--allow-unphysical", allow_unphysical, "Keep states violating the uncertainty principle");

    auto* sample_cmd = app.add_subcommand("sample", "Simulate homodyne records");
    std::string state_path;
    std::optional<std::string> schedule;
    std::optional<std::size_t> shots;
    std::optional<double> noise;
    sample_cmd->add_option("--state", state_path, "State JSON")->required();
    sample_cmd->add_option("--schedule", schedule, "Schedule tags, e.g. uncertainty,cubic or all");
    sample_cmd->add_option("--n,--shots", shots, "Records per phase");
    sample_cmd->add_option("--noise-sigma,--noise", noise, "Additive Gaussian noise sigma");

    SourceFlags moments_src, check_src, rec_src;
    auto* moments_cmd = app.add_subcommand("moments", "Estimate quadrature moments");
    add_source_flags(moments_cmd, moments_src);
    auto* check_cmd = app.add_subcommand("check", "Evaluate every uncertainty relation");
    add_source_flags(check_cmd, check_src);
    auto* rec_cmd = app.add_subcommand("reconstruct", "Moment series reconstruction");
    add_source_flags(rec_cmd, rec_src);
    std::optional<int> order;
    std::optional<std::string> form;
    std::optional<double> window;
    bool no_wigner = false;
    rec_cmd->add_option("--order", order, "Series order N");
    rec_cmd->add_option("--form", form, "moment or cumulant");
    rec_cmd->add_option("--window", window, "Characteristic-function window K_max");
    rec_cmd->add_flag("--no-wigner", no_wigner, "Skip the two-mode Wigner reconstruction");

    auto* report_cmd = app.add_subcommand("report", "Run every stage and aggregate a report");
    std::string report_state;
    report_cmd->add_option("--state", report_state, "State JSON overriding the config's state");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig config = make_config(g);

        if (*make_cmd) {
            StateDescriptor desc;
            desc.kind = state_kind_from_string(kind);
            desc.allow_unphysical = allow_unphysical;
            for (const auto& p : params) {
                const auto eq = p.find('=');
                if (eq == std::string::npos) throw InvalidArgument("--param expects name=value, got '" + p + "'");
                const std::string name = p.substr(0, eq), value = p.substr(eq + 1);
                if (name == "file") desc.grid_file = value;
                else desc.params[name] = std::stod(value);
            }
            emit(cmd_state(desc), g.out);
            return 0;
        }
        if (*sample_cmd) {
            if (g.out.empty()) throw InvalidArgument("sample needs --out <dataset.jsonl>");
            if (schedule) config.schedule = *schedule;
            if (shots) config.shots_per_phase = *shots;
            if (noise) config.noise.sigma = *noise;
            std::ifstream in(state_path);
            if (!in) throw MissingData("cannot open '" + state_path + "'");
            const StateDescriptor desc = descriptor_from_state_file(json::parse(in));
            HomodyneDataset data = cmd_sample(make_state(desc), config);
            data.metadata["state"] = to_json(desc);
            write_jsonl(g.out, data);
            std::fprintf(stderr, "wrote %zu records to %s\n", data.records.size(), g.out.c_str());
            return 0;
        }
        if (*moments_cmd) {
            auto src = open_source(moments_src, config);
            emit(cmd_moments(*src.source, config), g.out);
            return 0;
        }
        if (*check_cmd) {
            auto src = open_source(check_src, config);
            CheckResult r = cmd_check(*src.source, config, src.label);
            emit(r.document, g.out);
            return r.report.exit_code();
        }
        if (*rec_cmd) {
            if (order) config.reconstruction.order = *order;
            if (form) config.reconstruction.form = series_form_from_string(*form);
            if (window) config.reconstruction.window = *window;
            if (no_wigner) config.reconstruct_wigner = false;
            auto src = open_source(rec_src, config);
            const std::string dir = g.out.empty() ? config.out_dir : g.out;
            json doc = cmd_reconstruct(*src.source, config, dir, src.state ? &*src.state : nullptr);
            write_json_file((std::filesystem::path(dir) / "reconstruction.json").string(), doc);
            std::cout << doc.dump(2) << '\n';
            return 0;
        }
        if (*report_cmd) {
            if (!g.out.empty()) config.out_dir = g.out;
            if (!report_state.empty()) {
                std::ifstream in(report_state);
                if (!in) throw MissingData("cannot open '" + report_state + "'");
                config.state = descriptor_from_state_file(json::parse(in));
            }
            PipelineReport r = cmd_report(config);
            std::cout << r.document["summary"].dump(2) << '\n';
            return r.exit_code;
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
