#pragma once

// JSON and CSV encodings of the library's values. Doubles go to JSON in
// shortest round-trip form and to CSV with 17 significant digits.

#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowent/capacity_opt.hpp"
#include "lowent/errors.hpp"

namespace lowent {

using json = nlohmann::json;

inline std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Rows of numbers under a header line; every row must match the header width.
inline std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
    out += '\n';
    for (const auto& row : rows) {
        detail::require(row.size() == header.size(), ErrorCode::Length, "csv row width mismatch");
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_number(row[c]);
        out += '\n';
    }
    return out;
}

inline json to_json(const MomentSequence& seq) { return json(std::vector<double>(seq.values().begin(), seq.values().end())); }

inline MomentSequence moment_sequence_from_json(const json& j) {
    detail::require(j.is_array(), ErrorCode::Domain, "moment sequence must be a JSON array");
    std::vector<double> v;
    for (const auto& x : j) {
        detail::require(x.is_number(), ErrorCode::Domain, "moment sequence entries must be numbers");
        v.push_back(x.get<double>());
    }
    return MomentSequence(std::move(v));
}

inline json to_json(const AtomicDistribution& d) {
    return {{"atoms", std::vector<double>(d.atoms().begin(), d.atoms().end())},
            {"weights", std::vector<double>(d.weights().begin(), d.weights().end())}};
}

inline AtomicDistribution distribution_from_json(const json& j) {
    detail::require(j.is_object() && j.contains("atoms") && j.contains("weights"), ErrorCode::Domain,
                    "distribution JSON needs \"atoms\" and \"weights\"");
    const auto read = [](const json& arr) {
        detail::require(arr.is_array(), ErrorCode::Domain, "atoms and weights must be arrays");
        std::vector<double> v;
        for (const auto& x : arr) {
            detail::require(x.is_number(), ErrorCode::Domain, "atoms and weights must be numbers");
            v.push_back(x.get<double>());
        }
        return v;
    };
    return AtomicDistribution(read(j.at("atoms")), read(j.at("weights")));
}

inline std::string distribution_csv(const AtomicDistribution& d) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < d.size(); ++i) rows.push_back({d.atoms()[i], d.weights()[i]});
    return csv_table({"atom", "weight"}, rows);
}

inline json to_json(const EtaResult& r) {
    return {{"eta", r.eta}, {"threshold_bits", r.entropy_threshold_bits}, {"method", std::string(to_string(r.method))}};
}

inline json to_json(const SweepRow& r) { return {{"eps", r.eps}, {"x0", r.x0}, {"det1", r.det1}, {"det3", r.det3}}; }

inline json to_json(const CertificateReport& r) {
    json j = to_json(r.eta);
    j["h_nats"] = r.h_nats;
    j["eps_max"] = r.eps_max;
    j["grid"] = {{"eps_points", r.grid.eps_points},
                 {"x0_points", r.grid.x0_points},
                 {"margin", r.grid.margin},
                 {"tolerance", r.grid.tolerance}};
    j["max_min_det"] = r.max_min_det;
    j["worst"] = to_json(r.worst);
    j["valid"] = r.valid;
    return j;
}

inline std::string certificate_csv(const CertificateReport& r) {
    std::vector<std::vector<double>> rows;
    for (const auto& s : r.worst_per_eps) rows.push_back({s.eps, s.x0, s.det1, s.det3});
    return csv_table({"eps", "x0", "det1", "det3"}, rows);
}

inline json to_json(const RestartDiagnostics& d) {
    return {{"index", d.index},
            {"init", d.init},
            {"final_objective_nats", d.final_objective},
            {"entropy_residual_nats", d.entropy_residual},
            {"power_residual", d.power_residual},
            {"mean_residual", d.mean_residual},
            {"iterations", d.iterations},
            {"boundary_reached", d.boundary_reached}};
}

inline json to_json(const CapacityEstimate& e) {
    json restarts = json::array();
    for (const auto& d : e.restarts) restarts.push_back(to_json(d));
    return {{"lower_bound_nats", e.lower_bound_nats},
            {"best_input", to_json(e.best_input)},
            {"best_source", e.best_source},
            {"h_nats", e.h_nats},
            {"snr", e.snr},
            {"support_size", e.support_size},
            {"boundary_reached", e.boundary_reached},
            {"best_effort", e.best_effort},
            {"restarts", restarts}};
}

inline json to_json(const SanityReport& r) {
    return {{"pass", r.pass},
            {"excess_over_entropy_budget", r.excess_over_entropy_budget},
            {"excess_over_capacity", r.excess_over_capacity},
            {"input_entropy_excess", r.input_entropy_excess},
            {"power_residual", r.power_residual},
            {"mean_residual", r.mean_residual},
            {"consistency_residual", r.consistency_residual}};
}

inline json to_json(const ScalingReport& r) {
    json pts = json::array();
    for (const auto& p : r.points)
        pts.push_back({{"snr", p.snr},
                       {"gap_nats", p.gap_nats},
                       {"log_snr", p.log_snr},
                       {"log_gap", p.excluded ? json(nullptr) : json(p.log_gap)},
                       {"excluded", p.excluded}});
    return {{"slope", r.slope}, {"intercept", r.intercept}, {"used_points", r.used_points}, {"points", pts}};
}

inline std::string scaling_csv(const ScalingReport& r) {
    std::vector<std::vector<double>> rows;
    for (const auto& p : r.points) rows.push_back({p.snr, p.gap_nats, p.log_snr, p.log_gap});
    return csv_table({"snr", "gap_nats", "log_snr", "log_gap"}, rows);
}

}  // namespace lowent
