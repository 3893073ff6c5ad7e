// voltgrid command-line front end: build networks, optimize slope bounds,
// certify stability, train controllers, evaluate and dump trajectories.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "voltgrid/voltgrid.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace voltgrid;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnsafe = 1;
constexpr int kExitUsage = 2;

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError("invalid JSON in " + path + ": " + e.what());
    }
}

// Manifest path: <dir>/manifest.json for directory outputs, else
// <file>.manifest.json next to the file.
std::string manifest_path_for(const std::string& out, bool out_is_dir) {
    if (out_is_dir) return (fs::path(out) / "manifest.json").string();
    return out + ".manifest.json";
}

json checksums_for(const std::vector<std::string>& inputs) {
    json sums = json::object();
    for (const auto& p : inputs)
        if (!p.empty()) sums[p] = fnv1a64_hex(read_file(p));
    return sums;
}

// Written before any long computation; replaying the recorded config and
// seeds reproduces the run bit for bit.
void write_manifest(const std::string& command, const std::string& out, bool out_is_dir,
                    const std::vector<std::string>& inputs, const json& config,
                    const json& config_sources, const json& seeds, const json& outputs) {
    json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["checksums"] = checksums_for(inputs);
    m["config"] = config;
    m["config_sources"] = config_sources;
    m["seeds"] = seeds;
    m["outputs"] = outputs;
    atomic_write_file(manifest_path_for(out, out_is_dir), dump_json(m));
}

Vec vec_from_json_file(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_array()) throw ParseError(path + " must hold a JSON array of numbers");
    return j.get<Vec>();
}

std::vector<Vec> states_from_json_file(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_array()) throw ParseError(path + " must hold a JSON array of state vectors");
    std::vector<Vec> states;
    for (const auto& row : j) states.push_back(row.get<Vec>());
    return states;
}

// --- build-net ---------------------------------------------------------

struct BuildNetArgs {
    std::string branches, matrix, out;
    double base_kva = kDefaultBasePowerKva;
    double base_kv = kDefaultBaseVoltageKv;
    bool base_kva_set = false, base_kv_set = false;
};

int cmd_build_net(const BuildNetArgs& a) {
    FeederNetwork net = [&] {
        if (!a.branches.empty()) return load_feeder(a.branches, a.base_kva, a.base_kv);
        json j = read_json_file(a.matrix);
        if (j.contains("n_buses")) {
            FeederNetwork loaded = network_from_json(j);
            if (!a.base_kva_set && !a.base_kv_set) return loaded;
            return load_matrix(loaded.X(), loaded.R(),
                               a.base_kva_set ? a.base_kva : loaded.base_power_kva(),
                               a.base_kv_set ? a.base_kv : loaded.base_voltage_kv());
        }
        if (!j.contains("X")) throw ParseError(a.matrix + " lacks an X matrix");
        Mat x = matrix_from_json(j.at("X"));
        std::optional<Mat> r;
        if (j.contains("R")) r = matrix_from_json(j.at("R"));
        return load_matrix(x, r, a.base_kva, a.base_kv);
    }();
    const std::string input = a.branches.empty() ? a.matrix : a.branches;
    write_manifest("build-net", a.out, false, {input}, json{{"base_power_kva", net.base_power_kva()}, {"base_voltage_kv", net.base_voltage_kv()}},
                   json::object(), json::object(), json{{"net", a.out}});
    atomic_write_file(a.out, dump_json(network_to_json(net)));
    std::cout << "wrote " << a.out << " (" << net.n_buses() << " buses)\n";
    return kExitOk;
}

// --- optimize-bounds -----------------------------------------------------

struct OptimizeArgs {
    std::string net, weights, out;
};

int cmd_optimize_bounds(const OptimizeArgs& a) {
    FeederNetwork net = load_network_file(a.net);
    Vec w;
    if (!a.weights.empty()) w = vec_from_json_file(a.weights);
    write_manifest("optimize-bounds", a.out, false, {a.net, a.weights},
                   json{{"weights", w.empty() ? "ones" : a.weights}}, json::object(), json::object(),
                   json{{"bounds", a.out}});
    LipschitzBounds bounds = optimize_bounds(net.X(), w);
    atomic_write_file(a.out, dump_json(bounds_to_json(bounds)));
    std::cout << "wrote " << a.out << " (log_volume " << to_string_shortest(bounds.log_volume)
              << ", margin " << to_string_shortest(bounds.margin) << ")\n";
    return kExitOk;
}

// --- certify -------------------------------------------------------------

struct CertifyArgs {
    std::string net, controllers, slopes, bounds, out;
    std::size_t samples = 1000;
    std::uint64_t seed = 42;
    double margin = kDefaultStabilityMargin;
    double scale = 1.0;
};

int cmd_certify(const CertifyArgs& a) {
    FeederNetwork net = load_network_file(a.net);
    json report;
    bool ok = false;
    if (!a.slopes.empty()) {
        const Vec d = vec_from_json_file(a.slopes);
        const StabilityCertificate cert = closed_loop_spectral_radius(net.X(), d, a.margin);
        report["mode"] = "profile";
        report["certificate"] = certificate_to_json(cert);
        ok = cert.stable;
        std::cout << "profile rho " << to_string_shortest(cert.rho)
                  << (ok ? " (stable)" : " (UNSTABLE)") << "\n";
    } else {
        Vec caps;
        std::string input;
        if (!a.controllers.empty()) {
            const ControllerBank bank = load_controllers(a.controllers);
            caps = max_slopes(bank);
            input = a.controllers;
            report["mode"] = "controllers";
        } else {
            caps = bounds_from_json(read_json_file(a.bounds)).k;
            input = a.bounds;
            report["mode"] = "bounds";
        }
        const StabilizingSetResult member = in_stabilizing_set(net.X(), caps);
        SweepConfig cfg;
        cfg.samples = a.samples;
        cfg.seed = a.seed;
        // The sweep counts genuine instabilities (rho >= 1). Slope draws near zero
        // converge slowly and sit arbitrarily close to rho = 1 while still being
        // safe; the requested margin still governs the certificates below.
        cfg.margin = 0.0;
        cfg.scale = a.scale;
        cfg.expect_all_stable = false;
        const SweepReport sweep = sample_stability_sweep(net.X(), caps, cfg);
        const StabilityCertificate worst =
            closed_loop_spectral_radius(net.X(), sweep.worst_slopes, a.margin);
        report["member"] = json{{"inside", member.inside},
                                {"min_slope", member.min_slope},
                                {"definiteness_margin", member.definiteness_margin}};
        report["sweep"] = json{{"samples", sweep.samples},
                               {"unstable", sweep.unstable},
                               {"max_rho", sweep.max_rho},
                               {"worst_slopes", sweep.worst_slopes}};
        report["worst_certificate"] = certificate_to_json(worst);
        ok = member.inside && sweep.unstable == 0;
        std::cout << "caps " << (member.inside ? "inside" : "OUTSIDE") << " the stabilizing set; "
                  << sweep.unstable << "/" << sweep.samples << " unstable draws, max rho "
                  << to_string_shortest(sweep.max_rho) << "\n";
    }
    report["stable"] = ok;
    if (!a.out.empty()) {
        write_manifest("certify", a.out, false,
                       {a.net, a.controllers, a.slopes, a.bounds},
                       json{{"samples", a.samples}, {"scale", a.scale}, {"margin", a.margin}},
                       json::object(), json{{"seed", a.seed}}, json{{"report", a.out}});
        atomic_write_file(a.out, dump_json(report));
    }
    return ok ? kExitOk : kExitUnsafe;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
    std::string net, bounds, config, type = "stacked_relu", out;
    std::size_t checkpoint_every = 50;
    // flag overrides, applied over config-file values
    std::optional<std::size_t> episodes, batch, units, horizon;
    std::optional<double> lr, sigma, gamma, magnitude;
    std::optional<std::uint64_t> seed;
};

std::pair<TrainConfig, json> merge_train_config(const TrainArgs& a) {
    json sources = json::object();
    for (const auto& f : train_config_fields()) sources[f] = "default";
    TrainConfig cfg;
    if (!a.config.empty()) {
        const json j = read_json_file(a.config);
        cfg = train_config_from_json(j);
        for (const auto& item : j.items()) sources[item.key()] = "file";
    }
    auto apply = [&sources](auto& field, const auto& opt, const char* name) {
        if (opt) {
            field = *opt;
            sources[name] = "flag";
        }
    };
    apply(cfg.episodes, a.episodes, "episodes");
    apply(cfg.batch, a.batch, "batch");
    apply(cfg.units, a.units, "units");
    apply(cfg.horizon, a.horizon, "horizon");
    apply(cfg.lr, a.lr, "lr");
    apply(cfg.sigma, a.sigma, "sigma");
    apply(cfg.gamma, a.gamma, "gamma");
    apply(cfg.init_magnitude, a.magnitude, "init_magnitude");
    apply(cfg.seed, a.seed, "seed");
    cfg.validate();
    return {cfg, sources};
}

int cmd_train(const TrainArgs& a) {
    FeederNetwork net = load_network_file(a.net);
    LipschitzBounds bounds = bounds_from_json(read_json_file(a.bounds));
    auto [cfg, sources] = merge_train_config(a);
    fs::create_directories(a.out);
    const std::string log_path = (fs::path(a.out) / "train_log.csv").string();
    const std::string final_path = (fs::path(a.out) / "controllers.json").string();
    const std::string report_path = (fs::path(a.out) / "report.json").string();
    write_manifest("train", a.out, true, {a.net, a.bounds, a.config}, train_config_to_json(cfg),
                   sources, json{{"master", cfg.seed}},
                   json{{"log", log_path}, {"controllers", final_path}, {"report", report_path}});

    std::string log = train_log_header();
    const auto on_episode = [&](const EpisodeRow& row, const ControllerBank& bank) {
        log += train_log_rows(row);
        const bool at_checkpoint = a.checkpoint_every > 0 && (row.episode + 1) % a.checkpoint_every == 0;
        if (at_checkpoint) {
            char name[64];
            std::snprintf(name, sizeof(name), "checkpoint_%06zu.json", row.episode + 1);
            save_controllers((fs::path(a.out) / name).string(), bank);
            atomic_write_file(log_path, log);
        }
    };

    try {
        TrainResult result = train(net, bounds, cfg, a.type, on_episode);
        atomic_write_file(log_path, log);
        save_controllers(final_path, result.controllers);
        json report;
        report["type"] = a.type;
        report["action_bounds"] = result.action_bounds;
        report["test_cost"] = result.report.test_cost;
        report["lr"] = result.report.lr;
        report["rho_check"] = result.report.rho_check;
        report["mean_batch_cost"] = result.report.mean_batch_cost;
        report["final_test_cost"] =
            result.report.test_cost.empty() ? 0.0 : result.report.test_cost.back();
        atomic_write_file(report_path, dump_json(report));
        std::cout << "trained " << a.type << " for " << cfg.episodes << " episodes; final test cost "
                  << to_string_shortest(report["final_test_cost"].get<double>()) << "\n";
        return kExitOk;
    } catch (const NonFiniteLoss& e) {
        atomic_write_file(log_path, log);
        std::cerr << "training diverged: " << e.what() << "\n";
        return kExitUnsafe;
    }
}

// --- eval ----------------------------------------------------------------

struct EvalArgs {
    std::string net, checkpoints, test_states, out;
    std::size_t num_states = 100;
    double magnitude = 0.05;
    std::uint64_t seed = 42;
    std::size_t horizon = 30;
    double gamma = 0.01;
};

int cmd_eval(const EvalArgs& a) {
    FeederNetwork net = load_network_file(a.net);
    ControllerBank bank = load_controllers(a.checkpoints);
    if (bank.size() != net.n_buses()) throw DimensionMismatch("checkpoint bank size does not match network");
    std::vector<Vec> states = a.test_states.empty()
                                  ? sample_initial_states(net.n_buses(), a.num_states, a.magnitude, a.seed)
                                  : states_from_json_file(a.test_states);
    fs::create_directories(a.out);
    const std::string report_path = (fs::path(a.out) / "eval_report.json").string();
    const std::string dist_path = (fs::path(a.out) / "cost_distribution.csv").string();
    write_manifest("eval", a.out, true, {a.net, a.checkpoints, a.test_states},
                   json{{"num_states", states.size()}, {"magnitude", a.magnitude},
                        {"horizon", a.horizon}, {"gamma", a.gamma}},
                   json::object(), json{{"seed", a.seed}}, json{{"report", report_path}, {"distribution", dist_path}});

    CostSpec spec;
    spec.gamma = a.gamma;
    EvalReport rep = evaluate(net, bank, states, spec, a.horizon);

    // divergence scan for the exit-code contract
    double max_abs_v = 0.0;
    for (const auto& v0 : states) {
        const Trajectory traj = rollout(net, bank, v0, a.horizon, 0.0, 0, spec);
        for (const Vec& v : traj.v)
            for (double vi : v) max_abs_v = std::max(max_abs_v, std::abs(vi));
    }
    const bool diverged = !(max_abs_v <= kDivergenceGuard);

    json report;
    report["mean_total"] = rep.mean_total;
    report["median_total"] = rep.median_total;
    report["per_rollout_total"] = rep.per_rollout_total;
    report["per_bus_mean"] = rep.per_bus_mean;
    report["max_abs_v"] = max_abs_v;
    report["diverged"] = diverged;
    atomic_write_file(report_path, dump_json(report));

    std::string csv = "rollout,bus,cost\n";
    for (std::size_t s = 0; s < rep.per_rollout_bus.size(); ++s) {
        for (std::size_t i = 0; i < rep.per_rollout_bus[s].size(); ++i)
            csv += std::to_string(s) + "," + std::to_string(i) + "," +
                   to_string_shortest(rep.per_rollout_bus[s][i]) + "\n";
        csv += std::to_string(s) + ",total," + to_string_shortest(rep.per_rollout_total[s]) + "\n";
    }
    atomic_write_file(dist_path, csv);
    std::cout << "mean cost " << to_string_shortest(rep.mean_total) << " over " << states.size()
              << " states" << (diverged ? " (DIVERGED)" : "") << "\n";
    return diverged ? kExitUnsafe : kExitOk;
}

// --- rollout ---------------------------------------------------------------

struct RolloutArgs {
    std::string net, checkpoints, v0, out;
    double magnitude = 0.05;
    std::uint64_t seed = 42;
    std::size_t horizon = 30;
    double sigma = 0.0;
    std::uint64_t noise_seed = 0;
    double gamma = 0.01;
};

int cmd_rollout(const RolloutArgs& a) {
    FeederNetwork net = load_network_file(a.net);
    ControllerBank bank = load_controllers(a.checkpoints);
    Vec v0 = a.v0.empty() ? sample_initial_states(net.n_buses(), 1, a.magnitude, a.seed)[0]
                          : vec_from_json_file(a.v0);
    write_manifest("rollout", a.out, false, {a.net, a.checkpoints, a.v0},
                   json{{"horizon", a.horizon}, {"sigma", a.sigma}, {"gamma", a.gamma},
                        {"magnitude", a.magnitude}},
                   json::object(), json{{"seed", a.seed}, {"noise_seed", a.noise_seed}},
                   json{{"trajectory", a.out}});
    CostSpec spec;
    spec.gamma = a.gamma;
    Trajectory traj = rollout(net, bank, v0, a.horizon, a.sigma, a.noise_seed, spec);
    atomic_write_file(a.out, trajectory_to_csv(traj, spec));
    double max_abs_v = 0.0;
    for (const Vec& v : traj.v)
        for (double vi : v) max_abs_v = std::max(max_abs_v, std::abs(vi));
    std::cout << "wrote " << a.out << " (cost " << to_string_shortest(trajectory_cost(traj))
              << ", max |v| " << to_string_shortest(max_abs_v) << ")\n";
    return max_abs_v <= kDivergenceGuard ? kExitOk : kExitUnsafe;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Provably stabilizing decentralized voltage control toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    BuildNetArgs bn;
    auto* build_net = app.add_subcommand("build-net", "Build a network file from branch data or a matrix");
    auto* opt_branches = build_net->add_option("--branches", bn.branches, "branch CSV (from,to,r_ohm,x_ohm)");
    auto* opt_matrix = build_net->add_option("--matrix", bn.matrix, "JSON file with X (and optional R)");
    opt_branches->excludes(opt_matrix);
    auto* opt_kva = build_net->add_option("--base-kva", bn.base_kva, "base power in kVA");
    auto* opt_kv = build_net->add_option("--base-kv", bn.base_kv, "base voltage in kV");
    build_net->add_option("--out", bn.out, "output network JSON")->required();

    OptimizeArgs ob;
    auto* optimize = app.add_subcommand("optimize-bounds", "Maximize the certified slope-bound volume");
    optimize->add_option("--net", ob.net, "network JSON")->required();
    optimize->add_option("--weights", ob.weights, "JSON array of per-bus weights");
    optimize->add_option("--out", ob.out, "output bounds JSON")->required();

    CertifyArgs ct;
    auto* certify = app.add_subcommand("certify", "Certify stability of slopes, bounds or a checkpoint");
    certify->add_option("--net", ct.net, "network JSON")->required();
    auto* opt_ctrl = certify->add_option("--controllers", ct.controllers, "controller checkpoint JSON");
    auto* opt_slopes = certify->add_option("--slopes", ct.slopes, "JSON array slope profile");
    auto* opt_bounds = certify->add_option("--bounds", ct.bounds, "bounds JSON");
    opt_ctrl->excludes(opt_slopes)->excludes(opt_bounds);
    opt_slopes->excludes(opt_bounds);
    certify->add_option("--samples", ct.samples, "random draws inside the caps")
        ->check(CLI::PositiveNumber);
    certify->add_option("--seed", ct.seed, "sweep seed");
    certify->add_option("--margin", ct.margin, "stability margin on rho");
    certify->add_option("--scale", ct.scale, "scale factor applied to the caps");
    certify->add_option("--out", ct.out, "optional report JSON");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train decentralized controllers");
    train_cmd->add_option("--net", tr.net, "network JSON")->required();
    train_cmd->add_option("--bounds", tr.bounds, "bounds JSON")->required();
    train_cmd->add_option("--config", tr.config, "training config JSON");
    train_cmd->add_option("--type", tr.type, "controller type")
        ->check(CLI::IsMember({"stacked_relu", "linear", "mlp"}));
    train_cmd->add_option("--out", tr.out, "output directory")->required();
    train_cmd->add_option("--checkpoint-every", tr.checkpoint_every, "episodes between checkpoints");
    train_cmd->add_option("--episodes", tr.episodes, "override: episode count");
    train_cmd->add_option("--batch", tr.batch, "override: rollouts per episode");
    train_cmd->add_option("--units", tr.units, "override: hidden units");
    train_cmd->add_option("--horizon", tr.horizon, "override: rollout length");
    train_cmd->add_option("--lr", tr.lr, "override: initial learning rate");
    train_cmd->add_option("--sigma", tr.sigma, "override: exploration noise");
    train_cmd->add_option("--gamma", tr.gamma, "override: control cost weight");
    train_cmd->add_option("--magnitude", tr.magnitude, "override: initial-state magnitude");
    train_cmd->add_option("--seed", tr.seed, "override: master seed");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints on a set of initial states");
    eval_cmd->add_option("--net", ev.net, "network JSON")->required();
    eval_cmd->add_option("--checkpoints", ev.checkpoints, "controller checkpoint JSON")->required();
    eval_cmd->add_option("--test-states", ev.test_states, "JSON array of initial states");
    eval_cmd->add_option("--num-states", ev.num_states, "sampled state count when no file given");
    eval_cmd->add_option("--magnitude", ev.magnitude, "sampled state magnitude");
    eval_cmd->add_option("--seed", ev.seed, "sampling seed");
    eval_cmd->add_option("--horizon", ev.horizon, "evaluation rollout length");
    eval_cmd->add_option("--gamma", ev.gamma, "control cost weight");
    eval_cmd->add_option("--out", ev.out, "output directory")->required();

    RolloutArgs ro;
    auto* rollout_cmd = app.add_subcommand("rollout", "Dump one closed-loop trajectory as CSV");
    rollout_cmd->add_option("--net", ro.net, "network JSON")->required();
    rollout_cmd->add_option("--checkpoints", ro.checkpoints, "controller checkpoint JSON")->required();
    rollout_cmd->add_option("--v0", ro.v0, "JSON array initial state");
    rollout_cmd->add_option("--magnitude", ro.magnitude, "sampled state magnitude");
    rollout_cmd->add_option("--seed", ro.seed, "state sampling seed");
    rollout_cmd->add_option("--horizon", ro.horizon, "steps");
    rollout_cmd->add_option("--sigma", ro.sigma, "action noise");
    rollout_cmd->add_option("--noise-seed", ro.noise_seed, "noise stream seed");
    rollout_cmd->add_option("--gamma", ro.gamma, "control cost weight");
    rollout_cmd->add_option("--out", ro.out, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion") {
            return app.exit(e);
        }
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (build_net->parsed()) {
            if (bn.branches.empty() && bn.matrix.empty())
                throw ParseError("build-net needs --branches or --matrix");
            bn.base_kva_set = opt_kva->count() > 0;
            bn.base_kv_set = opt_kv->count() > 0;
            return cmd_build_net(bn);
        }
        if (optimize->parsed()) return cmd_optimize_bounds(ob);
        if (certify->parsed()) {
            if (ct.controllers.empty() && ct.slopes.empty() && ct.bounds.empty())
                throw ParseError("certify needs --controllers, --slopes or --bounds");
            return cmd_certify(ct);
        }
        if (train_cmd->parsed()) return cmd_train(tr);
        if (eval_cmd->parsed()) return cmd_eval(ev);
        if (rollout_cmd->parsed()) return cmd_rollout(ro);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUnsafe;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUnsafe;
    }
    return kExitUsage;
}
