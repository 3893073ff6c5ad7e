#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "voltgrid/controller.hpp"
#include "voltgrid/errors.hpp"
#include "voltgrid/grid_model.hpp"
#include "voltgrid/io.hpp"
#include "voltgrid/linalg.hpp"
#include "voltgrid/rng.hpp"

namespace voltgrid {

// Voltage deviation state around the nominal profile, plus the accumulated
// reactive setpoint that produced it.
struct GridState {
    Vec v;
    Vec q;
};

inline GridState make_state(Vec v0) {
    GridState s;
    s.q = Vec(v0.size(), 0.0);
    s.v = std::move(v0);
    return s;
}

enum class CostNorm { One, Two, Inf };

inline CostNorm cost_norm_from_string(const std::string& s) {
    if (s == "one" || s == "1" || s == "l1") return CostNorm::One;
    if (s == "two" || s == "2" || s == "l2") return CostNorm::Two;
    if (s == "inf" || s == "max") return CostNorm::Inf;
    throw ParseError("unknown cost norm '" + s + "'");
}

inline std::string cost_norm_to_string(CostNorm n) {
    switch (n) {
        case CostNorm::One: return "one";
        case CostNorm::Two: return "two";
        default: return "inf";
    }
}

// Stage cost ||v|| + gamma ||u||. The two-norm enters squared so the cost
// stays bus-separable; the infinity norm is total-only.
struct CostSpec {
    CostNorm voltage_norm = CostNorm::One;
    CostNorm control_norm = CostNorm::One;
    double gamma = 0.01;
};

namespace detail {

inline double norm_total(const Vec& x, CostNorm n) {
    switch (n) {
        case CostNorm::One: return norm1(x);
        case CostNorm::Two: return dot(x, x);
        default: return norm_inf(x);
    }
}

inline double norm_term(double xi, CostNorm n) {
    return n == CostNorm::One ? std::abs(xi) : xi * xi;
}

}  // namespace detail

inline double step_cost(const Vec& v, const Vec& u, const CostSpec& spec) {
    return detail::norm_total(v, spec.voltage_norm) + spec.gamma * detail::norm_total(u, spec.control_norm);
}

inline double step_cost_bus(double vi, double ui, const CostSpec& spec) {
    if (spec.voltage_norm == CostNorm::Inf || spec.control_norm == CostNorm::Inf)
        throw UnsupportedNormCombination("infinity-norm costs have no per-bus split");
    return detail::norm_term(vi, spec.voltage_norm) + spec.gamma * detail::norm_term(ui, spec.control_norm);
}

// One LinDistFlow transition: v' = v - X u, q' = q - u.
inline GridState step(const FeederNetwork& net, const GridState& state, const Vec& u) {
    const std::size_t n = net.n_buses();
    if (state.v.size() != n || u.size() != n) throw DimensionMismatch("state/control size mismatch");
    GridState next;
    next.v = state.v - net.X() * u;
    next.q = state.q - u;
    return next;
}

// One closed-loop episode. v holds the post-action states v_1..v_T (the
// initial state stays in v0), u the actions that produced them, and
// step_costs the total stage cost at each step.
struct Trajectory {
    Vec v0;
    std::vector<Vec> v;
    std::vector<Vec> u;
    std::vector<double> step_costs;
    std::uint64_t noise_seed = 0;
};

using TrajectoryBatch = std::vector<Trajectory>;

inline double trajectory_cost(const Trajectory& traj) {
    double c = 0.0;
    for (double sc : traj.step_costs) c += sc;
    return c;
}

// Bus-separable split of the trajectory cost; sums back to the total for
// one- and two-norm specs.
inline Vec per_bus_costs(const Trajectory& traj, const CostSpec& spec) {
    const std::size_t n = traj.v0.size();
    Vec c(n, 0.0);
    for (std::size_t t = 0; t < traj.v.size(); ++t)
        for (std::size_t i = 0; i < n; ++i) c[i] += step_cost_bus(traj.v[t][i], traj.u[t][i], spec);
    return c;
}

// Runs T steps of u_i ~ N(policy_i(v), sigma^2) from v0. sigma = 0 gives the
// deterministic closed loop. Exploration noise is drawn bus-major per step
// from the given seed, so a rollout is reproducible from (v0, seed) alone.
inline Trajectory rollout(const FeederNetwork& net, const ControllerBank& bank, const Vec& v0,
                          std::size_t horizon, double sigma, std::uint64_t noise_seed,
                          const CostSpec& spec = {}) {
    const std::size_t n = net.n_buses();
    if (bank.size() != n) throw DimensionMismatch("controller bank size does not match network");
    if (v0.size() != n) throw DimensionMismatch("initial state size does not match network");
    Trajectory traj;
    traj.v0 = v0;
    traj.noise_seed = noise_seed;
    traj.v.reserve(horizon);
    traj.u.reserve(horizon);
    traj.step_costs.reserve(horizon);
    Rng rng(noise_seed);
    GridState state = make_state(v0);
    for (std::size_t t = 0; t < horizon; ++t) {
        Vec u(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double mean = bank[i]->eval(state.v[i]);
            u[i] = sigma > 0.0 ? mean + sigma * rng.normal() : mean;
        }
        state = step(net, state, u);
        traj.u.push_back(u);
        traj.v.push_back(state.v);
        traj.step_costs.push_back(step_cost(state.v, u, spec));
    }
    return traj;
}

// Initial voltage deviations with entries uniform on [-magnitude, magnitude].
inline std::vector<Vec> sample_initial_states(std::size_t n_buses, std::size_t count,
                                              double magnitude, std::uint64_t seed) {
    std::vector<Vec> states(count);
    for (std::size_t s = 0; s < count; ++s) {
        Rng rng(derive_seed(seed, /*stream=*/7, s));
        Vec v(n_buses);
        for (std::size_t i = 0; i < n_buses; ++i) v[i] = rng.uniform(-magnitude, magnitude);
        states[s] = std::move(v);
    }
    return states;
}

// CSV dump, one row per (step, bus). Row t = 0 is the initial state with a
// zero action and zero cost; rows t >= 1 hold post-action states.
inline std::string trajectory_to_csv(const Trajectory& traj, const CostSpec& spec = {}) {
    std::string out = "t,bus,v,u,cost_step\n";
    const std::size_t n = traj.v0.size();
    for (std::size_t i = 0; i < n; ++i)
        out += "0," + std::to_string(i) + "," + to_string_shortest(traj.v0[i]) + ",0,0\n";
    for (std::size_t t = 0; t < traj.v.size(); ++t)
        for (std::size_t i = 0; i < n; ++i) {
            out += std::to_string(t + 1) + "," + std::to_string(i) + "," +
                   to_string_shortest(traj.v[t][i]) + "," + to_string_shortest(traj.u[t][i]) + "," +
                   to_string_shortest(step_cost_bus(traj.v[t][i], traj.u[t][i], spec)) + "\n";
        }
    return out;
}

}  // namespace voltgrid
