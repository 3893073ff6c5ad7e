#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "voltgrid/errors.hpp"
#include "voltgrid/io.hpp"
#include "voltgrid/linalg.hpp"
#include "voltgrid/rng.hpp"

namespace voltgrid {

inline constexpr double kProjectionGapFactor = 1e-3;  // interior gap as a fraction of k

// Scalar per-bus control policy u(v). Outputs are hard-clamped to
// [u_min, u_max]; gradients are zero wherever the clamp is strictly active.
class Controller {
  public:
    virtual ~Controller() = default;

    virtual double eval(double v) const = 0;
    virtual double slope_at(double v) const = 0;
    virtual double max_slope() const = 0;
    virtual std::size_t param_count() const = 0;
    virtual Vec params() const = 0;
    virtual void set_params(const Vec& p) = 0;
    virtual void project() {}
    virtual Vec param_gradient(double v) const = 0;
    virtual nlohmann::json to_json() const = 0;
    virtual std::unique_ptr<Controller> clone() const = 0;
    virtual std::string type() const = 0;

    double u_min = -1.0;
    double u_max = 1.0;

  protected:
    double clamp_output(double raw) const { return std::clamp(raw, u_min, u_max); }
    bool saturated(double raw) const { return raw > u_max || raw < u_min; }
};

// Monotone stacked-ReLU policy
//   u(v) = sum_j s_j relu(v + b_j) + sum_j z_j relu(-v + d_j)
// with b_1 = d_1 = 0, b and d nonincreasing, prefix sums of s in (0, k) and
// prefix sums of z in (-k, 0). Under those constraints u(0) = 0 exactly and
// every piece slope is a prefix sum, so 0 < du/dv < k wherever u is
// differentiable and unsaturated.
class StackedReluController final : public Controller {
  public:
    double k = 1.0;  // slope cap
    Vec s, b, z, d;

    StackedReluController() = default;

    static StackedReluController init(std::size_t m, double slope_cap, std::uint64_t seed,
                                      double out_min, double out_max) {
        if (m == 0) throw ShapeMismatch("stacked-relu controller needs at least one unit");
        if (!(slope_cap > 0.0)) throw InfeasibleBounds("slope cap must be positive");
        StackedReluController c;
        c.k = slope_cap;
        c.u_min = out_min;
        c.u_max = out_max;
        c.s.resize(m);
        c.z.resize(m);
        c.b.resize(m);
        c.d.resize(m);
        Rng rng(derive_seed(seed, /*stream=*/3));
        double sum_s = 0.0, sum_z = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            c.s[j] = rng.uniform(0.75, 1.25);
            c.z[j] = -rng.uniform(0.75, 1.25);
            sum_s += c.s[j];
            sum_z += c.z[j];
        }
        // total slope budget k/2 on each side
        for (std::size_t j = 0; j < m; ++j) {
            c.s[j] *= 0.5 * slope_cap / sum_s;
            c.z[j] *= -0.5 * slope_cap / sum_z;
        }
        for (std::size_t j = 0; j < m; ++j) {
            const double off = m == 1 ? 0.0 : -0.1 * static_cast<double>(j) / static_cast<double>(m - 1);
            c.b[j] = off;
            c.d[j] = off;
        }
        c.project();
        return c;
    }

    double raw_eval(double v) const {
        double u = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            u += s[j] * std::max(v + b[j], 0.0);
            u += z[j] * std::max(-v + d[j], 0.0);
        }
        return u;
    }

    double eval(double v) const override { return clamp_output(raw_eval(v)); }

    // Piecewise-constant derivative; kinks use the open-indicator convention
    // relu'(0) = 0, so slope_at(0) = 0 by construction.
    double slope_at(double v) const override {
        if (saturated(raw_eval(v))) return 0.0;
        double slope = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (v + b[j] > 0.0) slope += s[j];
            if (-v + d[j] > 0.0) slope -= z[j];
        }
        return slope;
    }

    double max_slope() const override {
        double best = 0.0, ps = 0.0, pz = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            ps += s[j];
            pz += z[j];
            best = std::max({best, ps, -pz});
        }
        return best;
    }

    std::size_t param_count() const override { return 4 * s.size(); }

    Vec params() const override {
        Vec p;
        p.reserve(param_count());
        p.insert(p.end(), s.begin(), s.end());
        p.insert(p.end(), b.begin(), b.end());
        p.insert(p.end(), z.begin(), z.end());
        p.insert(p.end(), d.begin(), d.end());
        return p;
    }

    void set_params(const Vec& p) override {
        const std::size_t m = s.size();
        if (p.size() != 4 * m) throw ShapeMismatch("parameter vector length mismatch");
        std::copy(p.begin(), p.begin() + m, s.begin());
        std::copy(p.begin() + m, p.begin() + 2 * m, b.begin());
        std::copy(p.begin() + 2 * m, p.begin() + 3 * m, z.begin());
        std::copy(p.begin() + 3 * m, p.end(), d.begin());
    }

    // Restores the constraint set after a gradient step:
    //   1. b_1 = d_1 = 0, then b_j <- min(b_j, b_{j-1}) sequentially (same d);
    //   2. prefix sums of s clipped into [eps, k - eps] front to back, each
    //      clip absorbed by the unit it lands on (z mirrored into
    //      [-k + eps, -eps]), eps = 1e-3 k.
    // Both passes are idempotent.
    void project() override {
        const std::size_t m = s.size();
        if (m == 0) return;
        b[0] = 0.0;
        d[0] = 0.0;
        for (std::size_t j = 1; j < m; ++j) {
            b[j] = std::min(b[j], b[j - 1]);
            d[j] = std::min(d[j], d[j - 1]);
        }
        const double eps = kProjectionGapFactor * k;
        double ps = 0.0, pz = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double target_s = std::clamp(ps + s[j], eps, k - eps);
            s[j] = target_s - ps;
            ps = target_s;
            const double target_z = std::clamp(pz + z[j], -k + eps, -eps);
            z[j] = target_z - pz;
            pz = target_z;
        }
    }

    Vec param_gradient(double v) const override {
        const std::size_t m = s.size();
        Vec g(4 * m, 0.0);
        if (saturated(raw_eval(v))) return g;
        for (std::size_t j = 0; j < m; ++j) {
            g[j] = std::max(v + b[j], 0.0);                        // d u / d s_j
            g[m + j] = v + b[j] > 0.0 ? s[j] : 0.0;                // d u / d b_j
            g[2 * m + j] = std::max(-v + d[j], 0.0);               // d u / d z_j
            g[3 * m + j] = -v + d[j] > 0.0 ? z[j] : 0.0;           // d u / d d_j
        }
        return g;
    }

    nlohmann::json to_json() const override {
        nlohmann::json j;
        j["type"] = "stacked_relu";
        j["k"] = k;
        j["s"] = s;
        j["b"] = b;
        j["z"] = z;
        j["d"] = d;
        j["u_min"] = u_min;
        j["u_max"] = u_max;
        return j;
    }

    std::unique_ptr<Controller> clone() const override {
        return std::make_unique<StackedReluController>(*this);
    }

    std::string type() const override { return "stacked_relu"; }
};

// Single trainable gain u(v) = clamp(c v); the constraint set is c in (0, k).
class LinearController final : public Controller {
  public:
    double c = 0.0;
    double k = 1.0;

    LinearController() = default;
    LinearController(double gain, double slope_cap, double out_min, double out_max)
        : c(gain), k(slope_cap) {
        u_min = out_min;
        u_max = out_max;
    }

    static LinearController init(double slope_cap, std::uint64_t seed, double out_min,
                                 double out_max) {
        Rng rng(derive_seed(seed, /*stream=*/4));
        return LinearController(rng.uniform(0.25 * slope_cap, 0.75 * slope_cap), slope_cap,
                                out_min, out_max);
    }

    double eval(double v) const override { return clamp_output(c * v); }
    double slope_at(double v) const override { return saturated(c * v) ? 0.0 : c; }
    double max_slope() const override { return c; }
    std::size_t param_count() const override { return 1; }
    Vec params() const override { return {c}; }
    void set_params(const Vec& p) override {
        if (p.size() != 1) throw ShapeMismatch("linear controller has one parameter");
        c = p[0];
    }
    void project() override {
        const double eps = kProjectionGapFactor * k;
        c = std::clamp(c, eps, k - eps);
    }
    Vec param_gradient(double v) const override {
        return {saturated(c * v) ? 0.0 : v};
    }
    nlohmann::json to_json() const override {
        nlohmann::json j;
        j["type"] = "linear";
        j["c"] = c;
        j["k"] = k;
        j["u_min"] = u_min;
        j["u_max"] = u_max;
        return j;
    }
    std::unique_ptr<Controller> clone() const override {
        return std::make_unique<LinearController>(*this);
    }
    std::string type() const override { return "linear"; }
};

// One-hidden-layer ReLU net with no shape constraints; baseline policy that
// can leave the stabilizing set.
class UnconstrainedMlp final : public Controller {
  public:
    Vec w1, b1, w2;
    double b2 = 0.0;

    UnconstrainedMlp() = default;

    static UnconstrainedMlp init(std::size_t m, double out_scale, std::uint64_t seed,
                                 double out_min, double out_max) {
        if (m == 0) throw ShapeMismatch("mlp needs at least one hidden unit");
        UnconstrainedMlp c;
        c.u_min = out_min;
        c.u_max = out_max;
        c.w1.resize(m);
        c.b1.resize(m);
        c.w2.resize(m);
        Rng rng(derive_seed(seed, /*stream=*/5));
        for (std::size_t j = 0; j < m; ++j) {
            c.w1[j] = rng.uniform(-1.0, 1.0);
            c.b1[j] = rng.uniform(-0.1, 0.1);
            c.w2[j] = rng.uniform(-out_scale, out_scale);
        }
        return c;
    }

    // u(v) = g v exactly: two mirrored units, no bias
    static UnconstrainedMlp high_gain(double gain, double out_min, double out_max) {
        UnconstrainedMlp c;
        c.u_min = out_min;
        c.u_max = out_max;
        c.w1 = {1.0, -1.0};
        c.b1 = {0.0, 0.0};
        c.w2 = {gain, -gain};
        c.b2 = 0.0;
        return c;
    }

    double raw_eval(double v) const {
        double u = b2;
        for (std::size_t j = 0; j < w1.size(); ++j) u += w2[j] * std::max(w1[j] * v + b1[j], 0.0);
        return u;
    }

    double eval(double v) const override { return clamp_output(raw_eval(v)); }

    double slope_at(double v) const override {
        if (saturated(raw_eval(v))) return 0.0;
        double slope = 0.0;
        for (std::size_t j = 0; j < w1.size(); ++j)
            if (w1[j] * v + b1[j] > 0.0) slope += w2[j] * w1[j];
        return slope;
    }

    // Largest |slope| over the pieces of the (unclamped) piecewise-linear map.
    double max_slope() const override {
        std::vector<double> cuts;
        for (std::size_t j = 0; j < w1.size(); ++j)
            if (w1[j] != 0.0) cuts.push_back(-b1[j] / w1[j]);
        std::sort(cuts.begin(), cuts.end());
        std::vector<double> probes;
        if (cuts.empty()) {
            probes.push_back(0.0);
        } else {
            probes.push_back(cuts.front() - 1.0);
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i) probes.push_back(0.5 * (cuts[i] + cuts[i + 1]));
            probes.push_back(cuts.back() + 1.0);
        }
        double worst = 0.0;
        for (double v : probes) {
            double slope = 0.0;
            for (std::size_t j = 0; j < w1.size(); ++j)
                if (w1[j] * v + b1[j] > 0.0) slope += w2[j] * w1[j];
            worst = std::max(worst, std::abs(slope));
        }
        return worst;
    }

    std::size_t param_count() const override { return 3 * w1.size() + 1; }

    Vec params() const override {
        Vec p;
        p.reserve(param_count());
        p.insert(p.end(), w1.begin(), w1.end());
        p.insert(p.end(), b1.begin(), b1.end());
        p.insert(p.end(), w2.begin(), w2.end());
        p.push_back(b2);
        return p;
    }

    void set_params(const Vec& p) override {
        const std::size_t m = w1.size();
        if (p.size() != 3 * m + 1) throw ShapeMismatch("parameter vector length mismatch");
        std::copy(p.begin(), p.begin() + m, w1.begin());
        std::copy(p.begin() + m, p.begin() + 2 * m, b1.begin());
        std::copy(p.begin() + 2 * m, p.begin() + 3 * m, w2.begin());
        b2 = p.back();
    }

    Vec param_gradient(double v) const override {
        const std::size_t m = w1.size();
        Vec g(3 * m + 1, 0.0);
        if (saturated(raw_eval(v))) return g;
        for (std::size_t j = 0; j < m; ++j) {
            const bool on = w1[j] * v + b1[j] > 0.0;
            g[j] = on ? w2[j] * v : 0.0;
            g[m + j] = on ? w2[j] : 0.0;
            g[2 * m + j] = std::max(w1[j] * v + b1[j], 0.0);
        }
        g[3 * m] = 1.0;
        return g;
    }

    nlohmann::json to_json() const override {
        nlohmann::json j;
        j["type"] = "mlp";
        j["w1"] = w1;
        j["b1"] = b1;
        j["w2"] = w2;
        j["b2"] = b2;
        j["u_min"] = u_min;
        j["u_max"] = u_max;
        return j;
    }

    std::unique_ptr<Controller> clone() const override {
        return std::make_unique<UnconstrainedMlp>(*this);
    }

    std::string type() const override { return "mlp"; }
};

inline std::unique_ptr<Controller> controller_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "stacked_relu") {
        auto c = std::make_unique<StackedReluController>();
        c->k = j.at("k").get<double>();
        c->s = j.at("s").get<Vec>();
        c->b = j.at("b").get<Vec>();
        c->z = j.at("z").get<Vec>();
        c->d = j.at("d").get<Vec>();
        c->u_min = j.at("u_min").get<double>();
        c->u_max = j.at("u_max").get<double>();
        const std::size_t m = c->s.size();
        if (c->b.size() != m || c->z.size() != m || c->d.size() != m)
            throw ShapeMismatch("stacked_relu arrays have differing lengths");
        return c;
    }
    if (type == "linear") {
        auto c = std::make_unique<LinearController>();
        c->c = j.at("c").get<double>();
        c->k = j.at("k").get<double>();
        c->u_min = j.at("u_min").get<double>();
        c->u_max = j.at("u_max").get<double>();
        return c;
    }
    if (type == "mlp") {
        auto c = std::make_unique<UnconstrainedMlp>();
        c->w1 = j.at("w1").get<Vec>();
        c->b1 = j.at("b1").get<Vec>();
        c->w2 = j.at("w2").get<Vec>();
        c->b2 = j.value("b2", 0.0);
        c->u_min = j.at("u_min").get<double>();
        c->u_max = j.at("u_max").get<double>();
        if (c->w1.size() != c->b1.size() || c->w1.size() != c->w2.size())
            throw ShapeMismatch("mlp arrays have differing lengths");
        return c;
    }
    throw ParseError("unknown controller type '" + type + "'");
}

using ControllerBank = std::vector<std::unique_ptr<Controller>>;

inline ControllerBank clone_bank(const ControllerBank& bank) {
    ControllerBank out;
    out.reserve(bank.size());
    for (const auto& c : bank) out.push_back(c->clone());
    return out;
}

inline nlohmann::json bank_to_json(const ControllerBank& bank) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : bank) arr.push_back(c->to_json());
    return arr;
}

inline ControllerBank bank_from_json(const nlohmann::json& arr) {
    if (!arr.is_array()) throw ParseError("controller file must hold a JSON array");
    ControllerBank bank;
    for (const auto& j : arr) bank.push_back(controller_from_json(j));
    return bank;
}

inline void save_controllers(const std::string& path, const ControllerBank& bank) {
    atomic_write_file(path, bank_to_json(bank).dump(2) + "\n");
}

inline ControllerBank load_controllers(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid controller JSON in " + path + ": " + e.what());
    }
    return bank_from_json(j);
}

}  // namespace voltgrid
