#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "edgescan/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace edgescan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;    // input/validation error
constexpr int kExitNoData = 3;   // scanning produced no usable data
constexpr int kExitRegFail = 4;  // registration failed

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

RunConfig build_config(const GlobalArgs& args) {
    json j = args.config_path.empty() ? default_config_json() : json();
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw ParseError("cannot open config: " + args.config_path);
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ParseError("bad config " + args.config_path + ": " + std::string(e.what()));
        }
    }
    for (const std::string& assignment : args.overrides) apply_override(j, assignment);
    RunConfig cfg = config_from_json(std::move(j));
    if (args.seed_set) cfg.raw["experiment"]["master_seed"] = args.seed;
    return cfg;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_errors_csv(const std::vector<double>& errors_m, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path.string());
    out.precision(17);
    out << "error_mm\n";
    for (const double e : errors_m) out << e * 1000.0 << '\n';
}

json stats_to_json(const ErrorStats& stats) {
    return {{"mean_mm", stats.mean_mm}, {"std_mm", stats.std_mm}, {"max_mm", stats.max_mm},
            {"n", stats.n}};
}

int cmd_gen_model(const GlobalArgs& global, const std::vector<double>& flat,
                  const std::vector<double>& side, double thickness, double bevel,
                  const std::string& name) {
    GlassModel model = [&]() {
        if (!flat.empty()) return make_flat_panel(flat[0], flat[1], thickness, bevel);
        return make_side_glass(side[0], side[1], side[2], thickness, bevel);
    }();
    fs::create_directories(global.out_dir);
    const fs::path manifest = fs::path(global.out_dir) / (name + ".json");
    save_glass_model(model, manifest.string());
    std::cout << "wrote " << manifest.string() << "\nperimeter_m " << model.perimeter() << "\n";
    return kExitOk;
}

int cmd_simulate(const GlobalArgs& global) {
    const RunConfig cfg = build_config(global);
    const Scene scene = cfg.scene();
    const ScannerSpec spec = cfg.scanner();
    const ScanPlan plan = cfg.plan();
    fs::create_directories(global.out_dir);

    std::vector<BIP> bips;
    int failed = 0;
    for (std::size_t i = 0; i < plan.poses.size(); ++i) {
        const std::uint64_t seed = derive_seed(cfg.master_seed(), i);
        const ScanProfile profile = simulate_profile(scene, plan.poses[i], spec, seed);
        const fs::path profile_path =
            fs::path(global.out_dir) / ("profile_" + std::to_string(i) + ".csv");
        save_profile_csv(profile, profile_path.string());
        try {
            bips.push_back(extract_bip(profile, scene.ground(), spec, static_cast<int>(i)));
        } catch (const Error&) {
            ++failed;
        }
    }
    save_bips_csv(bips, (fs::path(global.out_dir) / "bips.csv").string());
    std::cout << "profiles " << plan.poses.size() << "\nbips " << bips.size() << "\nskipped "
              << failed << "\n";
    if (bips.size() < 3) {
        std::cerr << "scanning produced no usable data\n";
        return kExitNoData;
    }
    return kExitOk;
}

int cmd_register(const GlobalArgs& global, const std::string& bips_path,
                 const std::string& model_path, const std::string& init_path) {
    const RunConfig cfg = build_config(global);
    const std::vector<BIP> bips = load_bips_csv(bips_path);
    const GlassModel model =
        model_path.empty() ? cfg.model() : load_glass_model(model_path);

    RigidTransform init = cfg.coarse_pose();
    if (!init_path.empty()) {
        std::ifstream in(init_path);
        if (!in) throw ParseError("cannot open init pose: " + init_path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ParseError("bad init pose JSON: " + std::string(e.what()));
        }
        init = transform_from_json(j);
    }

    PointCloud scan;
    for (const BIP& b : bips) scan.points.push_back(b.point);
    const ICPResult result =
        register_border_points(scan, model, init, cfg.icp_params(), cfg.registration_spacing());

    fs::create_directories(global.out_dir);
    save_icp_result_json(result, (fs::path(global.out_dir) / "registration.json").string());
    std::cout << "rms_m " << result.rms << "\niterations " << result.iterations << "\nconverged "
              << result.converged << "\ndegenerate " << result.degenerate << "\n";
    if (result.degenerate || !result.converged) return kExitRegFail;
    return kExitOk;
}

int cmd_exp1(const GlobalArgs& global, int trials_override) {
    const RunConfig cfg = build_config(global);
    const ExperimentSetup setup = cfg.experiment_setup();
    const int trials = trials_override > 0 ? trials_override : cfg.trials();
    const Experiment1Result result = run_experiment_1(setup, trials, cfg.master_seed());

    fs::create_directories(global.out_dir);
    const json stats = {{"glass", stats_to_json(result.glass)},
                        {"opaque", stats_to_json(result.opaque)},
                        {"trials", trials}};
    write_json(stats, fs::path(global.out_dir) / "exp1_stats.json");
    write_errors_csv(result.glass_errors_m, fs::path(global.out_dir) / "exp1_glass_errors.csv");
    write_errors_csv(result.opaque_errors_m, fs::path(global.out_dir) / "exp1_opaque_errors.csv");
    std::cout << stats.dump(2) << "\n";
    return kExitOk;
}

int cmd_exp2(const GlobalArgs& global, int trials_override) {
    const RunConfig cfg = build_config(global);
    const ExperimentSetup setup = cfg.experiment_setup();
    const int trials = trials_override > 0 ? trials_override : cfg.trials();
    const Experiment2Result result =
        run_experiment_2(setup, cfg.n_validation(), trials, cfg.master_seed());

    fs::create_directories(global.out_dir);
    json stats = stats_to_json(result.stats);
    stats["trials"] = trials;
    stats["n_validation"] = cfg.n_validation();
    const json timing = {{"scanning_s", result.timing.scanning_s},
                         {"pose_estimation_s", result.timing.pose_estimation_s},
                         {"path_planning_s", result.timing.path_planning_s},
                         {"execution_s", result.timing.execution_s}};
    write_json(stats, fs::path(global.out_dir) / "exp2_stats.json");
    write_json(timing, fs::path(global.out_dir) / "exp2_timing.json");
    write_errors_csv(result.errors_m, fs::path(global.out_dir) / "exp2_errors.csv");
    json combined = stats;
    combined["timing"] = timing;
    std::cout << combined.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"edgescan: glass pose estimation from laser edge scans"};
    app.require_subcommand(1);

    GlobalArgs global;
    app.add_option("--config", global.config_path, "experiment config JSON");
    app.add_option("--out", global.out_dir, "output directory");
    app.add_option("--set", global.overrides, "config override key.path=value")->take_all();
    auto* seed_opt = app.add_option("--seed", global.seed, "master seed");

    auto* gen = app.add_subcommand("gen-model", "generate a synthetic glass model");
    std::vector<double> flat, side;
    double thickness = 0.004, bevel = 0.0005;
    std::string name = "glass";
    auto* flat_opt = gen->add_option("--flat", flat, "width height (m)")->expected(2);
    auto* side_opt = gen->add_option("--side-glass", side, "chord height curvature_radius (m)")
                         ->expected(3);
    gen->add_option("--thickness", thickness, "glass thickness (m)");
    gen->add_option("--bevel", bevel, "edge bevel radius (m)");
    gen->add_option("--name", name, "output file stem");
    flat_opt->excludes(side_opt);

    auto* sim = app.add_subcommand("simulate", "simulate scan profiles and extract BIPs");

    auto* reg = app.add_subcommand("register", "register a BIP CSV against a border model");
    std::string bips_path, model_path, init_path;
    reg->add_option("--bips", bips_path, "BIP CSV path")->required();
    reg->add_option("--model", model_path, "model manifest (default: config model)");
    reg->add_option("--init", init_path, "coarse pose JSON (default: config coarse pose)");

    int trials_override = 0;
    auto* exp1 = app.add_subcommand("exp1", "point localisation experiment (glass vs opaque)");
    exp1->add_option("--trials", trials_override, "Monte Carlo trials");
    auto* exp2 = app.add_subcommand("exp2", "full pipeline experiment with timing");
    exp2->add_option("--trials", trials_override, "Monte Carlo trials");

    CLI11_PARSE(app, argc, argv);
    global.seed_set = seed_opt->count() > 0;

    try {
        if (gen->parsed()) {
            if (flat.empty() && side.empty()) {
                std::cerr << "gen-model needs --flat or --side-glass\n";
                return kExitInput;
            }
            return cmd_gen_model(global, flat, side, thickness, bevel, name);
        }
        if (sim->parsed()) return cmd_simulate(global);
        if (reg->parsed()) return cmd_register(global, bips_path, model_path, init_path);
        if (exp1->parsed()) return cmd_exp1(global, trials_override);
        if (exp2->parsed()) return cmd_exp2(global, trials_override);
    } catch (const InsufficientPoints& e) {
        std::cerr << "error: " << e.what() << "\n";
        return reg->parsed() ? kExitInput : kExitNoData;
    } catch (const NoConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRegFail;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
