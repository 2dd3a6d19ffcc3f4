#include "romid/cli.hpp"

#include "romid/dmdc.hpp"
#include "romid/dryer.hpp"
#include "romid/errors.hpp"
#include "romid/omdc.hpp"
#include "romid/persistence.hpp"
#include "romid/romsim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace romid::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fingerprint(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void log_stage(const std::string& command, const std::string& msg) {
    std::cerr << "[romid " << command << "] " << msg << '\n';
}

// Collects what a command did; written atomically once all outputs exist.
class Manifest {
public:
    Manifest(std::string command, const json& config) : start_(Clock::now()) {
        doc_["command"] = std::move(command);
        doc_["config"] = config;
        doc_["config_hash"] = fingerprint(config.dump());
        doc_["inputs"] = json::object();
        doc_["outputs"] = json::object();
        doc_["timings"] = json::object();
    }

    template <typename F>
    auto stage(const std::string& name, F&& f) {
        log_stage(doc_["command"], name);
        const auto t0 = Clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            doc_["timings"][name + "_s"] = seconds_since(t0);
        } else {
            auto r = f();
            doc_["timings"][name + "_s"] = seconds_since(t0);
            return r;
        }
    }

    json& operator[](const std::string& key) { return doc_[key]; }

    void write(const fs::path& path) {
        doc_["timings"]["total_s"] = seconds_since(start_);
        persistence::write_text_atomic(path, doc_.dump(2) + "\n");
    }

private:
    json doc_;
    Clock::time_point start_;
};

json report_to_json(const grassmann::CgReport& r) {
    return {{"iterations", r.iterations},
            {"final_cost", r.final_cost},
            {"final_grad_norm", r.final_grad_norm},
            {"termination", std::string(grassmann::to_string(r.reason))},
            {"restarts", r.restarts},
            {"steepest_fallbacks", r.steepest_fallbacks},
            {"cost_evaluations", r.cost_evaluations},
            {"cost_history", r.cost_history},
            {"grad_norm_history", r.grad_norm_history}};
}

fs::path manifest_next_to(const fs::path& file) {
    fs::path p = file;
    p.replace_extension(".manifest.json");
    return p;
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// ---- dry-sim ----------------------------------------------------------------

struct DrySimArgs {
    std::string config;
    std::string out;
    std::optional<double> t_end;
};

int cmd_dry_sim(const DrySimArgs& a) {
    dryer::DryerConfig cfg = a.config.empty() ? dryer::DryerConfig{} : dryer::config_from_json(read_json_file(a.config));
    if (a.t_end) cfg.t_end = *a.t_end;
    Manifest man("dry-sim", dryer::to_json(cfg));
    man["inputs"]["config"] = a.config;

    const auto result = man.stage("simulate", [&] { return dryer::simulate(cfg); });
    man.stage("write", [&] { persistence::save_snapshot_set(a.out, result.snapshots); });

    const auto& au = result.audit;
    const double water_change = result.initial_water_mass - result.final_water_mass;
    man["outputs"]["snapshots"] = a.out;
    man["shape"] = {{"S", {result.snapshots.state_dim(), result.snapshots.snapshot_count()}},
                    {"U", {result.snapshots.input_dim(), result.snapshots.inputs().cols()}}};
    man["timings"]["steps"] = result.steps;
    man["timings"]["per_step_ms"] = result.steps > 0 ? 1e3 * result.wall_seconds / static_cast<double>(result.steps) : 0.0;
    man["audit"] = {{"water_loss_kg", water_change},
                    {"evaporated_kg", au.evaporated_mass},
                    {"heat_in_J", au.heat_in},
                    {"sensible_heat_J", au.sensible_heat}};
    man.write(fs::path(a.out) / "manifest.json");
    log_stage("dry-sim", "wrote " + std::to_string(result.snapshots.snapshot_count()) + " snapshots to " + a.out);
    return 0;
}

// ---- identify ---------------------------------------------------------------

struct IdentifyArgs {
    std::string snapshots;
    std::string method = "omdc";
    int rank = 0;
    bool normalize = true;
    int max_iters = 2000;
    double grad_tol_rel = 1e-10;
    double rel_cost_tol = 1e-12;
    bool no_reduction = false;
    std::string out;
};

int cmd_identify(const IdentifyArgs& a) {
    const matstore::Method method = matstore::method_from_string(a.method);
    json config = {{"snapshots", a.snapshots}, {"method", a.method},          {"rank", a.rank},
                   {"normalize", a.normalize}, {"max_iters", a.max_iters},    {"grad_tol_rel", a.grad_tol_rel},
                   {"rel_cost_tol", a.rel_cost_tol}, {"reduction", !a.no_reduction}};
    Manifest man("identify", config);
    man["inputs"]["snapshots"] = a.snapshots;

    const auto raw = man.stage("load", [&] { return persistence::load_snapshot_set(a.snapshots); });
    const auto snap = a.normalize ? matstore::normalize_fields(raw) : raw;
    auto [X, Y] = matstore::split_snapshots(snap.states());

    json extra = json::object();
    std::optional<matstore::RomModel> model;
    if (method == matstore::Method::DMDc) {
        const auto red = man.stage("dmdc", [&] { return dmdc::dmdc_reduced(X, Y, snap.inputs(), a.rank); });
        model.emplace(dmdc::dmdc_as_rom(red, snap.dt_sample(), snap.norm_spec(), snap.layout()));
    } else {
        omdc::OmdcOptions opts;
        opts.cg.max_iters = a.max_iters;
        opts.cg.rel_cost_tol = a.rel_cost_tol;
        opts.grad_tol_rel = a.grad_tol_rel;
        opts.use_reduction = !a.no_reduction;
        auto res = man.stage("omdc", [&] { return omdc::omdc_identify(snap, a.rank, opts); });
        extra["solver"] = report_to_json(res.report);
        extra["solver"]["ridge_events"] = res.ridge_events;
        extra["solver"]["reduced"] = res.reduced;
        man["solver"] = {{"iterations", res.report.iterations},
                         {"final_cost", res.report.final_cost},
                         {"termination", std::string(grassmann::to_string(res.report.reason))}};
        model.emplace(std::move(res.model));
    }
    const double objective = man.stage("score", [&] {
        const omdc::OmdcData data(X, Y, snap.inputs());
        return omdc::residual_cost(model->modes(), model->system(), model->input(), data);
    });
    extra["objective"] = objective;
    extra["normalized"] = a.normalize;
    man["objective"] = objective;
    man.stage("write", [&] { persistence::save_model(a.out, *model, extra); });
    man["outputs"]["model"] = a.out;
    man.write(fs::path(a.out) / "manifest.json");
    std::ostringstream msg;
    msg << std::setprecision(10) << "rank-" << a.rank << " " << a.method << " model, objective " << objective;
    log_stage("identify", msg.str());
    return 0;
}

// ---- rom-run ----------------------------------------------------------------

struct RomRunArgs {
    std::string model;
    std::string inputs;
    std::string snapshots;
    std::string x0;
    std::string out;
};

// Trajectory table: t, one mean column per field, then reduced coordinates.
persistence::CsvTable trajectory_table(const matstore::RomModel& model, const romsim::RomTrajectory& traj) {
    const Matrix means = romsim::field_means(model, traj);
    const auto layout = romsim::effective_layout(model.layout(), model.state_dim());
    persistence::CsvTable t;
    t.header.push_back("t");
    for (const auto& f : layout) t.header.push_back("mean_" + f.name);
    for (Index i = 0; i < model.rank(); ++i) t.header.push_back("a" + std::to_string(i));
    t.values.resize(traj.states.cols(), static_cast<Index>(t.header.size()));
    t.values.col(0) = traj.times();
    t.values.middleCols(1, means.rows()) = means.transpose();
    t.values.rightCols(model.rank()) = traj.states.transpose();
    return t;
}

int cmd_rom_run(const RomRunArgs& a) {
    json config = {{"model", a.model}, {"inputs", a.inputs}, {"snapshots", a.snapshots}, {"x0", a.x0}};
    Manifest man("rom-run", config);
    const auto model = man.stage("load", [&] { return persistence::load_model(a.model); });

    std::optional<matstore::SnapshotSet> snap;
    if (!a.snapshots.empty()) snap.emplace(persistence::load_snapshot_set(a.snapshots));
    Vector x0;
    if (!a.x0.empty()) {
        const auto t = persistence::read_csv(a.x0);
        if (t.values.cols() != 1) throw FormatError(a.x0 + ": initial state must be a single column");
        x0 = t.values.col(0);
    } else if (snap) {
        x0 = snap->original_states().col(0);
    } else {
        throw FormatError("rom-run needs an initial state: --x0 or --snapshots");
    }
    Matrix inputs;
    if (!a.inputs.empty()) {
        const auto t = persistence::read_csv(a.inputs);
        inputs = t.values.transpose();
        if (inputs.cols() == 0) inputs.resize(model.input_dim(), 0);
    } else if (snap) {
        inputs = snap->inputs();
    } else {
        throw FormatError("rom-run needs inputs: --inputs or --snapshots");
    }

    const auto t0 = Clock::now();
    const auto traj = romsim::rom_simulate(model, x0, inputs);
    const double sim_s = seconds_since(t0);
    man["timings"]["simulate_s"] = sim_s;
    man["timings"]["steps"] = traj.steps();
    man["timings"]["per_step_ms"] = traj.steps() > 0 ? 1e3 * sim_s / static_cast<double>(traj.steps()) : 0.0;

    ensure_parent(a.out);
    man.stage("write", [&] { persistence::write_csv(a.out, trajectory_table(model, traj)); });
    man["outputs"]["trajectory"] = a.out;
    man.write(manifest_next_to(a.out));
    log_stage("rom-run", std::to_string(traj.steps()) + " steps written to " + a.out);
    return 0;
}

// ---- compare ----------------------------------------------------------------

struct CompareArgs {
    std::string model;
    std::string snapshots;
    std::string out;
    std::string series;
};

int cmd_compare(const CompareArgs& a) {
    json config = {{"model", a.model}, {"snapshots", a.snapshots}};
    Manifest man("compare", config);
    const auto model = man.stage("load_model", [&] { return persistence::load_model(a.model); });
    const auto snap = man.stage("load_snapshots", [&] { return persistence::load_snapshot_set(a.snapshots); });
    const Matrix states = snap.original_states();
    const auto traj = man.stage("simulate", [&] { return romsim::rom_simulate(model, states.col(0), snap.inputs()); });
    const auto cmp = romsim::compare(model, traj, snap);

    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << "field,rel_rms,max_abs\n";
    json metrics = json::array();
    for (const auto& m : cmp.metrics) {
        os << m.field << ',' << m.rel_rms << ',' << m.max_abs << '\n';
        metrics.push_back({{"field", m.field}, {"rel_rms", m.rel_rms}, {"max_abs", m.max_abs}});
    }
    ensure_parent(a.out);
    persistence::write_text_atomic(a.out, os.str());
    man["outputs"]["metrics"] = a.out;
    man["metrics"] = metrics;

    if (!a.series.empty()) {
        persistence::CsvTable t;
        t.header.push_back("t");
        for (const auto& f : cmp.fields) {
            t.header.push_back("rom_" + f);
            t.header.push_back("ref_" + f);
        }
        t.values.resize(cmp.times.size(), static_cast<Index>(t.header.size()));
        t.values.col(0) = cmp.times;
        for (Index i = 0; i < cmp.rom_means.rows(); ++i) {
            t.values.col(1 + 2 * i) = cmp.rom_means.row(i).transpose();
            t.values.col(2 + 2 * i) = cmp.ref_means.row(i).transpose();
        }
        ensure_parent(a.series);
        persistence::write_csv(a.series, t);
        man["outputs"]["series"] = a.series;
    }
    man.write(manifest_next_to(a.out));
    for (const auto& m : cmp.metrics) {
        std::ostringstream msg;
        msg << m.field << ": rel RMS " << m.rel_rms << ", max abs " << m.max_abs;
        log_stage("compare", msg.str());
    }
    return 0;
}

// ---- eig --------------------------------------------------------------------

struct EigArgs {
    std::string model;
    std::string out;
};

int cmd_eig(const EigArgs& a) {
    Manifest man("eig", json{{"model", a.model}});
    const auto model = persistence::load_model(a.model);
    const auto spec = romsim::eigenvalues(model.system());
    persistence::CsvTable t{{"re", "im", "abs"}, Matrix(static_cast<Index>(spec.values.size()), 3)};
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        const auto v = spec.values[i];
        t.values.row(static_cast<Index>(i)) << v.real(), v.imag(), std::abs(v);
    }
    ensure_parent(a.out);
    persistence::write_csv(a.out, t);
    man["outputs"]["spectrum"] = a.out;
    man.write(manifest_next_to(a.out));
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Reduced-order linear models with control from snapshot data"};
    app.require_subcommand(1);

    DrySimArgs dry;
    auto* c_dry = app.add_subcommand("dry-sim", "Run the finite-volume drying simulation and store snapshots");
    c_dry->add_option("--config", dry.config, "JSON configuration (defaults if omitted)")->check(CLI::ExistingFile);
    c_dry->add_option("--out", dry.out, "Output snapshot directory")->required();
    c_dry->add_option("--t-end", dry.t_end, "Override the end time in seconds")->check(CLI::NonNegativeNumber);

    IdentifyArgs id;
    auto* c_id = app.add_subcommand("identify", "Identify a reduced model from snapshots");
    c_id->add_option("--snapshots", id.snapshots, "Snapshot directory")->required()->check(CLI::ExistingDirectory);
    c_id->add_option("--method", id.method, "dmdc or omdc")->check(CLI::IsMember({"dmdc", "omdc"}));
    c_id->add_option("--rank", id.rank, "Reduced dimension r")->required()->check(CLI::PositiveNumber);
    c_id->add_flag("--normalize,!--no-normalize", id.normalize, "Scale each field to zero mean, unit variance");
    c_id->add_option("--max-iters", id.max_iters, "OMDc iteration limit")->check(CLI::PositiveNumber);
    c_id->add_option("--grad-tol", id.grad_tol_rel, "OMDc gradient tolerance relative to |Y|^2");
    c_id->add_option("--rel-cost-tol", id.rel_cost_tol, "OMDc relative cost-decrease tolerance");
    c_id->add_flag("--no-reduction", id.no_reduction, "Optimize in the full state space");
    c_id->add_option("--out", id.out, "Output model directory")->required();

    RomRunArgs run;
    auto* c_run = app.add_subcommand("rom-run", "Simulate a reduced model");
    c_run->add_option("--model", run.model, "Model directory")->required()->check(CLI::ExistingDirectory);
    c_run->add_option("--inputs", run.inputs, "CSV of inputs, one row per step")->check(CLI::ExistingFile);
    c_run->add_option("--snapshots", run.snapshots, "Snapshot directory supplying x0 and inputs")
        ->check(CLI::ExistingDirectory);
    c_run->add_option("--x0", run.x0, "CSV with the initial state as one column")->check(CLI::ExistingFile);
    c_run->add_option("--out", run.out, "Trajectory CSV")->required();

    CompareArgs cmp;
    auto* c_cmp = app.add_subcommand("compare", "Compare a reduced model against reference snapshots");
    c_cmp->add_option("--model", cmp.model, "Model directory")->required()->check(CLI::ExistingDirectory);
    c_cmp->add_option("--snapshots", cmp.snapshots, "Reference snapshots")->required()->check(CLI::ExistingDirectory);
    c_cmp->add_option("--out", cmp.out, "Metrics CSV")->required();
    c_cmp->add_option("--series", cmp.series, "Optional CSV of mean-field series");

    EigArgs eig;
    auto* c_eig = app.add_subcommand("eig", "Write the eigenvalues of the reduced system matrix");
    c_eig->add_option("--model", eig.model, "Model directory")->required()->check(CLI::ExistingDirectory);
    c_eig->add_option("--out", eig.out, "Spectrum CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*c_dry) return cmd_dry_sim(dry);
        if (*c_id) return cmd_identify(id);
        if (*c_run) return cmd_rom_run(run);
        if (*c_cmp) return cmd_compare(cmp);
        if (*c_eig) return cmd_eig(eig);
    } catch (const grassmann::StalledError& e) {
        std::cerr << "error: " << e.what() << " (after " << e.report().iterations
                  << " iterations; try a larger --rel-cost-tol or a smaller rank)\n";
        return 1;
    } catch (const RankError& e) {
        std::cerr << "error: " << e.what() << " (choose a smaller --rank)\n";
        return 1;
    } catch (const InputRankError& e) {
        std::cerr << "error: " << e.what() << " (the inputs need more independent variation)\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& s : args) argv.push_back(s.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace romid::cli
