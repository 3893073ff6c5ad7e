#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "voltgrid/eigen.hpp"
#include "voltgrid/errors.hpp"
#include "voltgrid/linalg.hpp"

namespace voltgrid {

inline constexpr double kDefaultBasePowerKva = 100.0;
inline constexpr double kDefaultBaseVoltageKv = 12.66;
inline constexpr double kPdEigenvalueTol = 1e-10;
inline constexpr int kRootSentinel = -1;

// One feeder branch as it appears in the input file (labels, ohms).
struct BranchRecord {
    int from_bus = 0;
    int to_bus = 0;
    double r_ohm = 0.0;
    double x_ohm = 0.0;
};

// Radial feeder with the LinDistFlow voltage sensitivities.
//
// Buses are indexed 0..N-1 over non-substation buses; the substation (file
// label 0) is excluded from the state and appears only as the parent
// sentinel. bus_labels maps internal index -> file label.
class FeederNetwork {
  public:
    std::size_t n_buses() const { return n_; }
    const std::vector<int>& parent() const { return parent_; }
    const std::vector<int>& bus_labels() const { return bus_labels_; }
    const Vec& branch_r_pu() const { return branch_r_; }
    const Vec& branch_x_pu() const { return branch_x_; }
    double base_power_kva() const { return base_power_kva_; }
    double base_voltage_kv() const { return base_voltage_kv_; }
    bool has_topology() const { return !parent_.empty(); }

    const Mat& R() const { return r_; }
    const Mat& X() const { return x_; }

    // v = R p + X q + 1
    Vec voltage(const Vec& p, const Vec& q) const {
        Vec v = r_ * p + x_ * q;
        for (auto& vi : v) vi += 1.0;
        return v;
    }

    static FeederNetwork from_parts(std::size_t n, std::vector<int> parent, std::vector<int> labels,
                                    Vec branch_r, Vec branch_x, double base_kva, double base_kv,
                                    Mat r, Mat x) {
        FeederNetwork net;
        net.n_ = n;
        net.parent_ = std::move(parent);
        net.bus_labels_ = std::move(labels);
        net.branch_r_ = std::move(branch_r);
        net.branch_x_ = std::move(branch_x);
        net.base_power_kva_ = base_kva;
        net.base_voltage_kv_ = base_kv;
        net.r_ = std::move(r);
        net.x_ = std::move(x);
        return net;
    }

  private:
    std::size_t n_ = 0;
    std::vector<int> parent_;      // internal indices, kRootSentinel for substation children
    std::vector<int> bus_labels_;  // internal index -> file label
    Vec branch_r_;                 // per bus: impedance of its upstream branch, per-unit
    Vec branch_x_;
    double base_power_kva_ = kDefaultBasePowerKva;
    double base_voltage_kv_ = kDefaultBaseVoltageKv;
    Mat r_;
    Mat x_;
};

inline double impedance_base_ohm(double base_power_kva, double base_voltage_kv) {
    return base_voltage_kv * base_voltage_kv * 1000.0 / base_power_kva;
}

// Doubled path-intersection sensitivity build: entry (i, j) is twice the
// summed impedance on the shared part of the two root paths. Drop the factor
// 2 here if an undoubled convention is ever needed.
inline std::pair<Mat, Mat> build_sensitivity(const std::vector<int>& parent, const Vec& branch_r_pu,
                                             const Vec& branch_x_pu) {
    const std::size_t n = parent.size();
    std::vector<int> depth(n, -1);
    // depth via parent walk, also a cycle guard for hand-built inputs
    for (std::size_t i = 0; i < n; ++i) {
        int hops = 0;
        int b = static_cast<int>(i);
        while (b != kRootSentinel) {
            if (++hops > static_cast<int>(n)) throw CyclicTopology("topology walk does not reach the substation");
            b = parent[static_cast<std::size_t>(b)];
        }
        depth[i] = hops;
    }
    auto lca = [&](int a, int b) {
        while (depth[a] > depth[b]) a = parent[a];
        while (depth[b] > depth[a]) b = parent[b];
        while (a != b) {
            a = parent[a];
            b = parent[b];
        }
        return a;  // may be kRootSentinel when the paths share nothing
    };
    // summed impedance from bus to root (inclusive of its own upstream branch)
    Vec path_r(n, 0.0), path_x(n, 0.0);
    // iterate in increasing depth so parents are done first
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return depth[a] < depth[b]; });
    for (std::size_t i : order) {
        const int p = parent[i];
        path_r[i] = branch_r_pu[i] + (p == kRootSentinel ? 0.0 : path_r[p]);
        path_x[i] = branch_x_pu[i] + (p == kRootSentinel ? 0.0 : path_x[p]);
    }
    Mat r(n), x(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const int a = lca(static_cast<int>(i), static_cast<int>(j));
            const double pr = a == kRootSentinel ? 0.0 : path_r[a];
            const double px = a == kRootSentinel ? 0.0 : path_x[a];
            r(i, j) = 2.0 * pr;
            r(j, i) = 2.0 * pr;
            x(i, j) = 2.0 * px;
            x(j, i) = 2.0 * px;
        }
    return {std::move(r), std::move(x)};
}

namespace detail {

inline FeederNetwork network_from_branches(const std::vector<BranchRecord>& branches,
                                           const std::vector<long>& rows, double base_kva,
                                           double base_kv) {
    // collect labels; 0 is the substation
    std::map<int, std::size_t> index_of;  // file label -> internal index
    std::vector<int> labels;
    for (std::size_t b = 0; b < branches.size(); ++b) {
        const auto& br = branches[b];
        if (br.to_bus == 0)
            throw ParseError("branch ends at the substation (label 0)", rows[b]);
        if (br.from_bus == br.to_bus) throw CyclicTopology("self-loop at bus " + std::to_string(br.to_bus) + " (row " + std::to_string(rows[b]) + ")");
        if (index_of.count(br.to_bus))
            throw CyclicTopology("bus " + std::to_string(br.to_bus) + " has multiple parents (row " +
                                 std::to_string(rows[b]) + ")");
        index_of[br.to_bus] = 0;  // placeholder, re-numbered below
        labels.push_back(br.to_bus);
    }
    std::sort(labels.begin(), labels.end());
    for (std::size_t i = 0; i < labels.size(); ++i) index_of[labels[i]] = i;

    const std::size_t n = labels.size();
    std::vector<int> parent(n, kRootSentinel);
    Vec branch_r(n, 0.0), branch_x(n, 0.0);
    const double z_base = impedance_base_ohm(base_kva, base_kv);
    for (std::size_t b = 0; b < branches.size(); ++b) {
        const auto& br = branches[b];
        const std::size_t child = index_of.at(br.to_bus);
        if (br.from_bus == 0) {
            parent[child] = kRootSentinel;
        } else {
            auto it = index_of.find(br.from_bus);
            if (it == index_of.end())
                throw DisconnectedBus("branch references unknown bus " + std::to_string(br.from_bus) +
                                      " (row " + std::to_string(rows[b]) + ")");
            parent[child] = static_cast<int>(it->second);
        }
        branch_r[child] = br.r_ohm / z_base;
        branch_x[child] = br.x_ohm / z_base;
    }
    // reachability / cycle check
    for (std::size_t i = 0; i < n; ++i) {
        int hops = 0;
        int b = static_cast<int>(i);
        while (b != kRootSentinel) {
            if (++hops > static_cast<int>(n))
                throw CyclicTopology("cycle through bus " + std::to_string(labels[i]));
            b = parent[static_cast<std::size_t>(b)];
        }
    }

    auto [r, x] = build_sensitivity(parent, branch_r, branch_x);
    const double min_ev = min_eigenvalue(x);
    if (min_ev <= kPdEigenvalueTol)
        throw NotPositiveDefinite("reactance sensitivity X is not positive definite", min_ev);
    return FeederNetwork::from_parts(n, std::move(parent), std::move(labels), std::move(branch_r),
                                     std::move(branch_x), base_kva, base_kv, std::move(r),
                                     std::move(x));
}

}  // namespace detail

// Branch CSV schema: header "from,to,r_ohm,x_ohm", one row per branch,
// substation labeled 0.
inline FeederNetwork load_feeder(const std::string& branch_csv_path,
                                 double base_power_kva = kDefaultBasePowerKva,
                                 double base_voltage_kv = kDefaultBaseVoltageKv) {
    std::ifstream in(branch_csv_path);
    if (!in) throw ParseError("cannot open branch file: " + branch_csv_path);
    std::string line;
    long row = 0;
    if (!std::getline(in, line)) throw ParseError("empty branch file: " + branch_csv_path);
    ++row;
    {
        std::string header = line;
        header.erase(std::remove_if(header.begin(), header.end(),
                                    [](char c) { return c == ' ' || c == '\r'; }),
                     header.end());
        if (header != "from,to,r_ohm,x_ohm")
            throw ParseError("expected header 'from,to,r_ohm,x_ohm', got '" + line + "'", row);
    }
    std::vector<BranchRecord> branches;
    std::vector<long> rows;
    while (std::getline(in, line)) {
        ++row;
        std::string trimmed = line;
        trimmed.erase(std::remove(trimmed.begin(), trimmed.end(), '\r'), trimmed.end());
        if (trimmed.empty()) continue;
        std::stringstream ss(trimmed);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), row);
        BranchRecord br;
        try {
            std::size_t pos = 0;
            br.from_bus = std::stoi(fields[0], &pos);
            br.to_bus = std::stoi(fields[1]);
            br.r_ohm = std::stod(fields[2]);
            br.x_ohm = std::stod(fields[3]);
        } catch (const std::exception&) {
            throw ParseError("malformed branch row '" + trimmed + "'", row);
        }
        if (br.from_bus < 0 || br.to_bus < 0) throw ParseError("negative bus label", row);
        if (br.r_ohm < 0.0) throw ParseError("negative branch resistance", row);
        if (!(br.x_ohm > 0.0))
            throw NonPositiveReactance("branch reactance must be positive (row " + std::to_string(row) + ")");
        branches.push_back(br);
        rows.push_back(row);
    }
    if (branches.empty()) throw ParseError("branch file has no branches: " + branch_csv_path);
    return detail::network_from_branches(branches, rows, base_power_kva, base_voltage_kv);
}

// Wraps an explicit sensitivity matrix (already per-unit) in a FeederNetwork
// with no topology. R defaults to X when absent.
inline FeederNetwork load_matrix(const Mat& x, const std::optional<Mat>& r = std::nullopt,
                                 double base_power_kva = kDefaultBasePowerKva,
                                 double base_voltage_kv = kDefaultBaseVoltageKv) {
    const std::size_t n = x.size();
    if (x.max_asymmetry() > kSymmetryTol * std::max(1.0, x.frobenius_norm()))
        throw NotSymmetric("X is not symmetric within 1e-9");
    const double min_ev = min_eigenvalue(x);
    if (min_ev <= kPdEigenvalueTol)
        throw NotPositiveDefinite("X is not positive definite", min_ev);
    Mat r_used = r.value_or(x);
    if (r) {
        if (r->size() != n) throw DimensionMismatch("R and X sizes differ");
        if (r->max_asymmetry() > kSymmetryTol * std::max(1.0, r->frobenius_norm()))
            throw NotSymmetric("R is not symmetric within 1e-9");
    }
    return FeederNetwork::from_parts(n, {}, {}, {}, {}, base_power_kva, base_voltage_kv,
                                     std::move(r_used), x);
}

// --- JSON (canonical network file) ------------------------------------------

inline nlohmann::json matrix_to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline Mat matrix_from_json(const nlohmann::json& j) {
    const std::size_t n = j.size();
    Mat m(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (j[i].size() != n) throw ParseError("matrix rows have inconsistent lengths");
        for (std::size_t k = 0; k < n; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

inline nlohmann::json network_to_json(const FeederNetwork& net) {
    nlohmann::json j;
    j["n_buses"] = net.n_buses();
    j["base_power_kva"] = net.base_power_kva();
    j["base_voltage_kv"] = net.base_voltage_kv();
    j["parent"] = net.parent();
    j["bus_labels"] = net.bus_labels();
    j["branch_r_pu"] = net.branch_r_pu();
    j["branch_x_pu"] = net.branch_x_pu();
    j["R"] = matrix_to_json(net.R());
    j["X"] = matrix_to_json(net.X());
    return j;
}

inline FeederNetwork network_from_json(const nlohmann::json& j) {
    if (!j.contains("X")) throw ParseError("network json lacks an X matrix");
    Mat x = matrix_from_json(j.at("X"));
    std::optional<Mat> r;
    if (j.contains("R") && !j.at("R").empty()) r = matrix_from_json(j.at("R"));
    const double base_kva = j.value("base_power_kva", kDefaultBasePowerKva);
    const double base_kv = j.value("base_voltage_kv", kDefaultBaseVoltageKv);
    if (!j.contains("n_buses")) {
        // bare {"X": ..., "R": ...} matrix file
        return load_matrix(x, r, base_kva, base_kv);
    }
    FeederNetwork checked = load_matrix(x, r, base_kva, base_kv);
    std::vector<int> parent = j.value("parent", std::vector<int>{});
    std::vector<int> labels = j.value("bus_labels", std::vector<int>{});
    Vec br = j.value("branch_r_pu", Vec{});
    Vec bx = j.value("branch_x_pu", Vec{});
    return FeederNetwork::from_parts(checked.n_buses(), std::move(parent), std::move(labels),
                                     std::move(br), std::move(bx), base_kva, base_kv,
                                     checked.R(), checked.X());
}

inline FeederNetwork load_network_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError("invalid JSON in " + path + ": " + e.what());
    }
    return network_from_json(j);
}

}  // namespace voltgrid
