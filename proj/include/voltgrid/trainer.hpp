#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "voltgrid/bound_opt.hpp"
#include "voltgrid/controller.hpp"
#include "voltgrid/env.hpp"
#include "voltgrid/errors.hpp"
#include "voltgrid/grid_model.hpp"
#include "voltgrid/parallel.hpp"
#include "voltgrid/rng.hpp"
#include "voltgrid/stability.hpp"

namespace voltgrid {

inline constexpr double kDivergenceGuard = 1e3;  // abort when any |v| passes this

struct TrainConfig {
    std::size_t episodes = 500;
    std::size_t batch = 500;   // rollouts per episode
    std::size_t units = 20;    // hidden units per controller side
    double lr = 0.003;
    double lr_decay_base = 0.6;
    std::size_t lr_decay_period = 100;  // optimizer updates (= episodes)
    double gamma = 0.01;
    std::size_t horizon = 30;
    double sigma = 0.005;
    double action_bound_low = 0.01;
    double action_bound_high = 0.05;
    double init_magnitude = 0.05;
    std::size_t eval_states = 50;
    std::uint64_t seed = 42;
    bool baseline = false;       // subtract the batch-mean cost in the estimator
    bool reward_to_go = false;   // weight each step by its cost tail instead of the total
    CostNorm voltage_norm = CostNorm::One;
    CostNorm control_norm = CostNorm::One;

    CostSpec cost_spec() const { return {voltage_norm, control_norm, gamma}; }

    void validate() const {
        if (batch == 0 || units == 0 || horizon == 0 || eval_states == 0)
            throw InfeasibleBounds("batch, units, horizon and eval_states must be positive");
        if (!(lr > 0.0) || !(lr_decay_base > 0.0) || lr_decay_period == 0)
            throw InfeasibleBounds("learning-rate schedule values must be positive");
        if (!(sigma >= 0.0) || !(gamma >= 0.0)) throw InfeasibleBounds("sigma and gamma must be nonnegative");
        if (!(action_bound_low > 0.0) || !(action_bound_high >= action_bound_low))
            throw InfeasibleBounds("action bound range must satisfy 0 < low <= high");
        if (!(init_magnitude > 0.0)) throw InfeasibleBounds("init magnitude must be positive");
    }
};

inline const std::vector<std::string>& train_config_fields() {
    static const std::vector<std::string> fields = {
        "episodes",  "batch",        "units",           "lr",
        "lr_decay_base", "lr_decay_period", "gamma",   "horizon",
        "sigma",     "action_bound_low", "action_bound_high", "init_magnitude",
        "eval_states", "seed",       "baseline",        "reward_to_go",
        "voltage_norm", "control_norm"};
    return fields;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
    nlohmann::json j;
    j["episodes"] = c.episodes;
    j["batch"] = c.batch;
    j["units"] = c.units;
    j["lr"] = c.lr;
    j["lr_decay_base"] = c.lr_decay_base;
    j["lr_decay_period"] = c.lr_decay_period;
    j["gamma"] = c.gamma;
    j["horizon"] = c.horizon;
    j["sigma"] = c.sigma;
    j["action_bound_low"] = c.action_bound_low;
    j["action_bound_high"] = c.action_bound_high;
    j["init_magnitude"] = c.init_magnitude;
    j["eval_states"] = c.eval_states;
    j["seed"] = c.seed;
    j["baseline"] = c.baseline;
    j["reward_to_go"] = c.reward_to_go;
    j["voltage_norm"] = cost_norm_to_string(c.voltage_norm);
    j["control_norm"] = cost_norm_to_string(c.control_norm);
    return j;
}

// Every field optional; absent fields keep their defaults.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    for (const auto& item : j.items())
        if (std::find(train_config_fields().begin(), train_config_fields().end(), item.key()) ==
            train_config_fields().end())
            throw ParseError("unknown config field '" + item.key() + "'");
    c.episodes = j.value("episodes", c.episodes);
    c.batch = j.value("batch", c.batch);
    c.units = j.value("units", c.units);
    c.lr = j.value("lr", c.lr);
    c.lr_decay_base = j.value("lr_decay_base", c.lr_decay_base);
    c.lr_decay_period = j.value("lr_decay_period", c.lr_decay_period);
    c.gamma = j.value("gamma", c.gamma);
    c.horizon = j.value("horizon", c.horizon);
    c.sigma = j.value("sigma", c.sigma);
    c.action_bound_low = j.value("action_bound_low", c.action_bound_low);
    c.action_bound_high = j.value("action_bound_high", c.action_bound_high);
    c.init_magnitude = j.value("init_magnitude", c.init_magnitude);
    c.eval_states = j.value("eval_states", c.eval_states);
    c.seed = j.value("seed", c.seed);
    c.baseline = j.value("baseline", c.baseline);
    c.reward_to_go = j.value("reward_to_go", c.reward_to_go);
    if (j.contains("voltage_norm")) c.voltage_norm = cost_norm_from_string(j.at("voltage_norm"));
    if (j.contains("control_norm")) c.control_norm = cost_norm_from_string(j.at("control_norm"));
    c.validate();
    return c;
}

inline double lr_at(const TrainConfig& c, std::size_t step) {
    return c.lr * std::pow(c.lr_decay_base,
                           static_cast<double>(step / c.lr_decay_period));
}

// --- Adam ---------------------------------------------------------------

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct AdamState {
    Vec m;  // first moment
    Vec v;  // second moment
    std::size_t t = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(AdamState& state, Vec& params, const Vec& grad, double lr) {
    const std::size_t n = params.size();
    if (grad.size() != n || state.m.size() != n || state.v.size() != n)
        throw ShapeMismatch("adam state/parameter/gradient sizes differ");
    ++state.t;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < n; ++i) {
        state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
        state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
    }
}

// --- Per-bus local data -------------------------------------------------

// The slice of a trajectory one agent is allowed to see: its own
// observations, actions and stage costs. obs[t] is the state the action
// u[t] was computed from (v0 for t = 0, then the previous post-action state).
struct BusTrajectory {
    Vec obs;
    Vec u;
    Vec step_costs;
    double cost = 0.0;
};

inline BusTrajectory local_view(const Trajectory& traj, std::size_t bus, const CostSpec& spec) {
    const std::size_t horizon = traj.v.size();
    BusTrajectory view;
    view.obs.resize(horizon);
    view.u.resize(horizon);
    view.step_costs.resize(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        view.obs[t] = t == 0 ? traj.v0[bus] : traj.v[t - 1][bus];
        view.u[t] = traj.u[t][bus];
        view.step_costs[t] = step_cost_bus(traj.v[t][bus], traj.u[t][bus], spec);
        view.cost += view.step_costs[t];
    }
    return view;
}

// Score-function gradient for one trajectory:
//   sum_t (u_t - mu(obs_t)) / sigma^2 * param_gradient(obs_t) * weight_t
// where weight_t is the whole-trajectory cost (minus an optional constant
// baseline), or the cost tail from t when reward-to-go is enabled.
inline Vec score_gradient(const Controller& controller, const BusTrajectory& view, double sigma,
                          double baseline = 0.0, bool reward_to_go = false) {
    if (!(sigma > 0.0)) throw SigmaZero("score function needs sigma > 0");
    Vec g(controller.param_count(), 0.0);
    const double inv_s2 = 1.0 / (sigma * sigma);
    double tail = 0.0;
    if (reward_to_go)
        for (double sc : view.step_costs) tail += sc;
    for (std::size_t t = 0; t < view.obs.size(); ++t) {
        const double weight = (reward_to_go ? tail : view.cost) - baseline;
        const double score = (view.u[t] - controller.eval(view.obs[t])) * inv_s2;
        const Vec dg = controller.param_gradient(view.obs[t]);
        for (std::size_t p = 0; p < g.size(); ++p) g[p] += score * dg[p] * weight;
        if (reward_to_go) tail -= view.step_costs[t];
    }
    return g;
}

// --- Evaluation ---------------------------------------------------------

struct EvalReport {
    double mean_total = 0.0;
    double median_total = 0.0;
    Vec per_rollout_total;          // one entry per test state
    Vec per_bus_mean;               // mean per-bus cost over the test set
    std::vector<Vec> per_rollout_bus;  // full distribution for export
};

inline EvalReport evaluate(const FeederNetwork& net, const ControllerBank& bank,
                           const std::vector<Vec>& test_states, const CostSpec& spec,
                           std::size_t horizon) {
    EvalReport rep;
    const std::size_t n = net.n_buses();
    rep.per_bus_mean.assign(n, 0.0);
    rep.per_rollout_total.resize(test_states.size());
    rep.per_rollout_bus.resize(test_states.size());
    parallel_for(test_states.size(), [&](std::size_t s) {
        Trajectory traj = rollout(net, bank, test_states[s], horizon, 0.0, 0, spec);
        rep.per_rollout_total[s] = trajectory_cost(traj);
        rep.per_rollout_bus[s] = per_bus_costs(traj, spec);
    });
    if (test_states.empty()) return rep;
    for (std::size_t s = 0; s < test_states.size(); ++s) {
        for (std::size_t i = 0; i < n; ++i) rep.per_bus_mean[i] += rep.per_rollout_bus[s][i];
        rep.mean_total += rep.per_rollout_total[s];
    }
    rep.mean_total /= static_cast<double>(test_states.size());
    for (auto& c : rep.per_bus_mean) c /= static_cast<double>(test_states.size());
    Vec sorted = rep.per_rollout_total;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    rep.median_total = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    return rep;
}

// --- Training -----------------------------------------------------------

struct AgentReport {
    std::vector<Vec> mean_batch_cost;  // episodes x buses
    Vec test_cost;                     // per episode, mean over held-out states
    Vec lr;                            // per episode
    Vec rho_check;                     // per episode, closed loop at the max-slope profile
};

struct EpisodeRow {
    std::size_t episode = 0;
    Vec mean_batch_cost;
    double test_cost = 0.0;
    double lr = 0.0;
    double rho_check = 0.0;
};

using EpisodeCallback = std::function<void(const EpisodeRow&, const ControllerBank&)>;

struct TrainResult {
    ControllerBank controllers;
    AgentReport report;
    Vec action_bounds;  // per-bus saturation magnitude actually used
};

// Per-bus saturation magnitudes, drawn once per experiment.
inline Vec draw_action_bounds(std::size_t n, const TrainConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, /*stream=*/11));
    Vec ub(n);
    for (std::size_t i = 0; i < n; ++i) ub[i] = rng.uniform(cfg.action_bound_low, cfg.action_bound_high);
    return ub;
}

inline ControllerBank init_controllers(const FeederNetwork& net, const LipschitzBounds& bounds,
                                       const TrainConfig& cfg, const std::string& type) {
    const std::size_t n = net.n_buses();
    const Vec ub = draw_action_bounds(n, cfg);
    ControllerBank bank;
    bank.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t seed = derive_seed(cfg.seed, /*stream=*/13, i);
        // Initial slope scale: responsive but unsaturated across the sampled state
        // band. Saturated outputs carry zero gradient, so an agent whose slope cap
        // far exceeds u_bar/|v| would otherwise start frozen at its actuation limit.
        const double scale = std::min(bounds.k[i], ub[i] / cfg.init_magnitude);
        if (type == "stacked_relu") {
            StackedReluController c = StackedReluController::init(cfg.units, scale, seed, -ub[i], ub[i]);
            c.k = bounds.k[i];
            c.project();
            bank.push_back(std::make_unique<StackedReluController>(std::move(c)));
        } else if (type == "linear") {
            LinearController c = LinearController::init(scale, seed, -ub[i], ub[i]);
            c.k = bounds.k[i];
            c.project();
            bank.push_back(std::make_unique<LinearController>(std::move(c)));
        } else if (type == "mlp") {
            bank.push_back(std::make_unique<UnconstrainedMlp>(
                UnconstrainedMlp::init(cfg.units, bounds.k[i], seed, -ub[i], ub[i])));
        } else {
            throw ParseError("unknown controller type '" + type + "'");
        }
    }
    return bank;
}

inline bool is_safe_type(const std::string& type) { return type == "stacked_relu" || type == "linear"; }

inline Vec max_slopes(const ControllerBank& bank) {
    Vec d(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) d[i] = bank[i]->max_slope();
    return d;
}

// Decentralized REINFORCE (one Gaussian policy-gradient agent per bus).
// Each episode: collect `batch` noisy rollouts, hand every agent only its
// local slice, apply one Adam update per agent with the decayed rate, then
// re-project safety-constrained types.
inline TrainResult train(const FeederNetwork& net, const LipschitzBounds& bounds,
                         const TrainConfig& cfg, const std::string& type,
                         const EpisodeCallback& on_episode = {}) {
    cfg.validate();
    const std::size_t n = net.n_buses();
    if (bounds.k.size() != n) throw DimensionMismatch("bounds size does not match network");
    if (is_safe_type(type)) {
        const auto member = in_stabilizing_set(net.X(), bounds.k);
        if (!member.inside)
            throw InfeasibleBounds("slope bounds are outside the stabilizing set (margin " +
                                   std::to_string(member.definiteness_margin) + ")");
    }
    const CostSpec spec = cfg.cost_spec();

    TrainResult result;
    result.controllers = init_controllers(net, bounds, cfg, type);
    result.action_bounds = draw_action_bounds(n, cfg);
    ControllerBank& bank = result.controllers;

    const std::vector<Vec> held_out =
        sample_initial_states(n, cfg.eval_states, cfg.init_magnitude, derive_seed(cfg.seed, 29));

    std::vector<AdamState> adam;
    adam.reserve(n);
    for (std::size_t i = 0; i < n; ++i) adam.emplace_back(bank[i]->param_count());

    result.report.mean_batch_cost.reserve(cfg.episodes);
    for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
        const std::vector<Vec> starts =
            sample_initial_states(n, cfg.batch, cfg.init_magnitude, derive_seed(cfg.seed, 19, ep));
        TrajectoryBatch batch(cfg.batch);
        std::atomic<bool> diverged{false};
        parallel_for(cfg.batch, [&](std::size_t h) {
            Trajectory traj = rollout(net, bank, starts[h], cfg.horizon, cfg.sigma,
                                      derive_seed(cfg.seed, 23, ep * cfg.batch + h), spec);
            for (const Vec& v : traj.v)
                for (double vi : v)
                    if (!std::isfinite(vi) || std::abs(vi) > kDivergenceGuard) diverged = true;
            batch[h] = std::move(traj);
        });
        if (diverged)
            throw NonFiniteLoss("voltage exceeded the divergence guard", static_cast<long>(ep));

        const double rate = lr_at(cfg, ep);
        Vec mean_cost(n, 0.0);
        parallel_for(n, [&](std::size_t i) {
            std::vector<BusTrajectory> views;
            views.reserve(cfg.batch);
            double base = 0.0;
            for (std::size_t h = 0; h < cfg.batch; ++h) {
                views.push_back(local_view(batch[h], i, spec));
                base += views.back().cost;
            }
            mean_cost[i] = base / static_cast<double>(cfg.batch);
            const double baseline = cfg.baseline ? mean_cost[i] : 0.0;
            Vec grad(bank[i]->param_count(), 0.0);
            for (const auto& view : views) {
                const Vec g = score_gradient(*bank[i], view, cfg.sigma, baseline, cfg.reward_to_go);
                for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += g[p];
            }
            for (auto& gp : grad) gp /= static_cast<double>(cfg.batch);
            if (!all_finite(grad))
                throw NonFiniteLoss("nonfinite policy gradient", static_cast<long>(ep));
            Vec params = bank[i]->params();
            adam_step(adam[i], params, grad, rate);
            bank[i]->set_params(params);
            if (is_safe_type(type)) bank[i]->project();
        });

        EpisodeRow row;
        row.episode = ep;
        row.mean_batch_cost = mean_cost;
        row.lr = rate;
        row.test_cost = evaluate(net, bank, held_out, spec, cfg.horizon).mean_total;
        row.rho_check = closed_loop_spectral_radius(net.X(), max_slopes(bank)).rho;
        result.report.mean_batch_cost.push_back(mean_cost);
        result.report.test_cost.push_back(row.test_cost);
        result.report.lr.push_back(rate);
        result.report.rho_check.push_back(row.rho_check);
        if (on_episode) on_episode(row, bank);
    }
    return result;
}

// Training log row formatting shared by the CLI and tests.
inline std::string train_log_header() {
    return "episode,bus,mean_batch_cost,test_cost,lr,spectral_radius_check\n";
}

inline std::string train_log_rows(const EpisodeRow& row) {
    std::string out;
    for (std::size_t i = 0; i < row.mean_batch_cost.size(); ++i) {
        out += std::to_string(row.episode) + "," + std::to_string(i) + "," +
               to_string_shortest(row.mean_batch_cost[i]) + "," + to_string_shortest(row.test_cost) +
               "," + to_string_shortest(row.lr) + "," + to_string_shortest(row.rho_check) + "\n";
    }
    return out;
}

}  // namespace voltgrid
