#include "cli/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <string>
#include <thread>

namespace prioq::cli {

namespace {

double parse_double(std::string_view s, const char* field) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw InvalidParams(field, "not a number: '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

}  // namespace

SystemParams SweepSpec::at(double value) const {
    SystemParams p = base;
    switch (param) {
        case SweepParam::Lambda1: p.lambda1 = value; break;
        case SweepParam::Lambda2: p.lambda2 = value; break;
        case SweepParam::Servers:
            if (value != std::floor(value)) throw InvalidParams("c", "sweep values must be integers");
            p.c = static_cast<int>(value);
            break;
    }
    return p;
}

std::string_view param_name(SweepParam param) {
    switch (param) {
        case SweepParam::Lambda1: return "l1";
        case SweepParam::Lambda2: return "l2";
        case SweepParam::Servers: return "c";
    }
    return "?";
}

SweepMode parse_mode(std::string_view text) {
    if (text == "analytic") return SweepMode::Analytic;
    if (text == "simulate") return SweepMode::Simulate;
    if (text == "both") return SweepMode::Both;
    throw InvalidParams("mode", "expected analytic, simulate or both");
}

std::pair<SweepParam, std::vector<double>> parse_sweep(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw InvalidParams("sweep", "expected param:grid");
    const auto name = text.substr(0, colon);
    SweepParam param;
    if (name == "l1") param = SweepParam::Lambda1;
    else if (name == "l2") param = SweepParam::Lambda2;
    else if (name == "c") param = SweepParam::Servers;
    else throw InvalidParams("sweep", "parameter must be l1, l2 or c");

    const auto rest = text.substr(colon + 1);
    std::vector<double> grid;
    const auto fields = split(rest, ':');
    if (fields.size() == 3) {
        const double start = parse_double(fields[0], "sweep");
        const double stop = parse_double(fields[1], "sweep");
        const double step = parse_double(fields[2], "sweep");
        if (!(step > 0.0) || stop < start) throw InvalidParams("sweep", "need step > 0 and stop >= start");
        const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (long k = 0; k < n; ++k) grid.push_back(start + static_cast<double>(k) * step);
    } else if (fields.size() == 1) {
        for (auto v : split(rest, ',')) grid.push_back(parse_double(v, "sweep"));
    } else {
        throw InvalidParams("sweep", "expected start:stop:step or a comma-separated list");
    }
    if (grid.empty()) throw InvalidParams("sweep", "grid is empty");
    return {param, grid};
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    if (spec.grid.empty()) throw InvalidParams("sweep", "grid is empty");
    std::vector<SweepRow> rows(spec.grid.size());
    for (std::size_t k = 0; k < spec.grid.size(); ++k) {
        rows[k].value = spec.grid[k];
        rows[k].params = validate(spec.at(spec.grid[k]));
    }

    const bool want_analytic = spec.mode != SweepMode::Simulate;
    const bool want_sim = spec.mode != SweepMode::Analytic;
    const auto compute = [&](SweepRow& row) {
        row.stability = stability<double>(row.params);
        if (want_analytic && row.stability.stable) {
            try {
                row.analytic = analyze<double>(row.params);
            } catch (const Unstable&) {
                // numerically at the boundary; reported as unstable
            }
        }
        if (want_sim) {
            SimConfig cfg;
            cfg.params = row.params;
            cfg.service1 = spec.dist1.with_rate(row.params.mu1);
            cfg.service2 = spec.dist2.with_rate(row.params.mu2);
            cfg.horizon = spec.horizon;
            cfg.warmup = spec.warmup;
            cfg.seed = spec.seed;
            cfg.replications = spec.replications;
            cfg.victim = spec.victim;
            cfg.threads = 1;
            row.simulated = simulate(cfg);
        }
    };

    int workers = spec.threads > 0 ? spec.threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, static_cast<int>(rows.size()));
    if (workers == 1) {
        for (auto& row : rows) compute(row);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < rows.size(); k = next++) compute(rows[k]);
        });
    }
    pool.clear();
    return rows;
}

void write_sweep_csv(std::ostream& os, const SweepSpec& spec, const std::vector<SweepRow>& rows) {
    os << "param,value,lambda1,lambda2,mu1,mu2,c,stable,lambda_max,mean_wait,mean_terminations,throughput,"
          "sim_mean_wait,sim_mean_wait_hw,sim_mean_terminations,sim_mean_terminations_hw,"
          "sim_throughput,sim_throughput_hw\n";
    const bool want_analytic = spec.mode != SweepMode::Simulate;
    for (const auto& row : rows) {
        const auto& p = row.params;
        os << param_name(spec.param) << ',' << format_number(row.value) << ',' << format_number(p.lambda1) << ','
           << format_number(p.lambda2) << ',' << format_number(p.mu1) << ',' << format_number(p.mu2) << ',' << p.c
           << ',' << (row.stability.stable ? "true" : "false") << ',' << format_number(row.stability.lambda_max)
           << ',';
        if (!want_analytic) {
            os << ",,,";
        } else if (row.analytic) {
            os << format_number(row.analytic->mean_wait) << ',' << format_number(row.analytic->mean_terminations)
               << ',' << format_number(row.analytic->throughput) << ',';
        } else {
            os << "unstable,unstable," << format_number(throughput<double>(p)) << ',';
        }
        if (row.simulated) {
            const auto& s = *row.simulated;
            os << format_number(s.mean_wait.mean) << ',' << format_number(s.mean_wait.half_width) << ','
               << format_number(s.mean_terminations.mean) << ',' << format_number(s.mean_terminations.half_width)
               << ',' << format_number(s.throughput.mean) << ',' << format_number(s.throughput.half_width);
        } else {
            os << ",,,,,";
        }
        os << '\n';
    }
}

}  // namespace prioq::cli
