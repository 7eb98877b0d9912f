#include "cli/report_json.hpp"

#include <cmath>

namespace prioq::cli {

namespace {

nlohmann::json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

nlohmann::json matrix_rows(const MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

nlohmann::json to_json(const SystemParams& p) {
    return {{"lambda1", p.lambda1}, {"lambda2", p.lambda2}, {"mu1", p.mu1}, {"mu2", p.mu2}, {"c", p.c}};
}

nlohmann::json to_json(const StabilityReport<double>& r) {
    return {{"stable", r.stable},
            {"delta", r.delta},
            {"rho2", r.rho2},
            {"lambda_max", r.lambda_max},
            {"margin", r.margin}};
}

nlohmann::json to_json(const PerformanceReport<double>& r) {
    auto tail = nlohmann::json::array();
    for (const auto& [k, p] : r.marginals.tail) tail.push_back({{"k", k}, {"p", p}});
    auto phase = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.marginals.phase.size(); ++i) phase.push_back(r.marginals.phase(i));
    return {{"mean_wait", r.mean_wait},
            {"mean_terminations", r.mean_terminations},
            {"throughput", r.throughput},
            {"mean_queue_length", r.mean_queue_length},
            {"termination_set_mass", r.termination_set_mass},
            {"marginal_phase", std::move(phase)},
            {"queue_tail", std::move(tail)}};
}

nlohmann::json to_json(const Estimate& e) {
    return {{"mean", number(e.mean)}, {"std_error", number(e.std_error)}, {"half_width", number(e.half_width)}};
}

nlohmann::json to_json(const SimReport& r, bool include_occupancy) {
    nlohmann::json j = {
        {"mean_wait", to_json(r.mean_wait)},
        {"mean_terminations", to_json(r.mean_terminations)},
        {"throughput", to_json(r.throughput)},
        {"termination_rate", to_json(r.termination_rate)},
        {"time_in_termination_set", to_json(r.time_in_termination_set)},
        {"balance_gap", to_json(r.balance_gap)},
        {"mean_queue_length", to_json(r.mean_queue_length)},
        {"lost_class1", to_json(r.loss_fraction)},
        {"regen_cycles", r.regen_cycles},
        {"regen_cycle_length", to_json(r.regeneration_cycle_length)},
        {"regen_mean_queue_length", to_json(r.regenerative_queue_length)},
        {"termination_histogram", r.termination_histogram},
        {"replications", r.replications.size()},
    };
    if (!r.replications.empty()) {
        std::uint64_t arrivals = 0, departures = 0, in_system = 0;
        for (const auto& rep : r.replications) {
            arrivals += rep.arrivals2;
            departures += rep.departures2;
            in_system += rep.in_system2;
        }
        j["class2_accounting"] = {{"arrivals", arrivals}, {"departures", departures}, {"in_system", in_system}};
    }
    if (include_occupancy) {
        j["state_occupancy"] = matrix_rows(r.state_occupancy);
        j["arrival_occupancy"] = matrix_rows(r.arrival_occupancy);
    }
    return j;
}

}  // namespace prioq::cli
