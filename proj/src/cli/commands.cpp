#include "cli/commands.hpp"

#include <fstream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "cli/options.hpp"
#include "cli/report_json.hpp"
#include "cli/sweep.hpp"
#include "prioq/des.hpp"
#include "prioq/erlang_loss.hpp"
#include "prioq/measures.hpp"
#include "prioq/qbd.hpp"

namespace prioq::cli {

namespace {

struct CommonOptions {
    SystemParams params{0.0, 1.0, 1.0, 1.0, 1};
    std::string out_path;
    std::string format = "json";
};

struct SimOptions {
    std::string dist1 = "exp";
    std::string dist2 = "exp";
    double horizon = 1e6;
    std::optional<double> warmup;
    std::uint64_t seed = 1;
    int reps = 10;
    int threads = 0;
    std::string victim = "mrs";
};

void add_params(CLI::App& app, CommonOptions& o) {
    app.add_option("--l1", o.params.lambda1, "class-1 arrival rate");
    app.add_option("--l2", o.params.lambda2, "class-2 arrival rate");
    app.add_option("--m1", o.params.mu1, "class-1 service rate");
    app.add_option("--m2", o.params.mu2, "class-2 service rate");
    app.add_option("--c", o.params.c, "number of servers");
    app.add_option("--out", o.out_path, "write output to this file instead of stdout");
}

void add_sim(CLI::App& app, SimOptions& s) {
    app.add_option("--dist1", s.dist1, "class-1 service law: exp, erlang:R or det");
    app.add_option("--dist2", s.dist2, "class-2 service law: exp, erlang:R or det");
    app.add_option("--horizon", s.horizon, "simulated time per replication");
    app.add_option("--warmup", s.warmup, "discarded initial time (default 10% of horizon)");
    app.add_option("--seed", s.seed, "base RNG seed");
    app.add_option("--reps", s.reps, "independent replications");
    app.add_option("--threads", s.threads, "worker threads (0 = all cores)");
    app.add_option("--victim", s.victim, "preemption victim rule: mrs or lrs");
}

SimConfig make_sim_config(const SystemParams& params, const SimOptions& s) {
    SimConfig cfg;
    cfg.params = validate(params);
    cfg.service1 = parse_service_spec(s.dist1).with_rate(params.mu1);
    cfg.service2 = parse_service_spec(s.dist2).with_rate(params.mu2);
    cfg.horizon = s.horizon;
    cfg.warmup = s.warmup;
    cfg.seed = s.seed;
    cfg.replications = s.reps;
    cfg.threads = s.threads;
    cfg.victim = parse_victim(s.victim);
    validate(cfg);
    return cfg;
}

// Writes to --out when given, else to the default stream.
class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw InvalidParams("out", "cannot open '" + path + "'");
            os_ = file_.get();
        }
    }
    std::ostream& stream() { return *os_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

void write_histogram_csv(std::ostream& os, const SimReport& report) {
    os << "k,probability\n";
    for (std::size_t k = 0; k < report.termination_histogram.size(); ++k) {
        os << k << ',' << format_number(report.termination_histogram[k]) << '\n';
    }
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    // --config <file> expands in place to the file's flags; anything after it
    // on the command line therefore wins.
    std::vector<std::string> out;
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config" && k + 1 < args.size()) {
            for (auto& t : read_config_tokens(args[k + 1])) out.push_back(std::move(t));
            ++k;
        } else if (args[k].starts_with("--config=")) {
            for (auto& t : read_config_tokens(args[k].substr(9))) out.push_back(std::move(t));
        } else {
            out.push_back(args[k]);
        }
    }
    return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-class preemptive-priority multiserver queue: analysis and simulation"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CommonOptions common;
    SimOptions sim;
    std::string dump_path;
    std::vector<int> tail_levels;
    std::string histogram_path;
    std::string trace_path;
    bool with_occupancy = false;
    std::string sweep_text;
    std::string mode = "analytic";
    std::string sweep_format = "csv";

    auto* stab_cmd = app.add_subcommand("stability", "check the stability condition");
    add_params(*stab_cmd, common);
    stab_cmd->add_option("--format", common.format, "json or text")->check(CLI::IsMember({"json", "text"}));

    auto* analyze_cmd = app.add_subcommand("analyze", "stationary measures by the matrix-analytic method");
    add_params(*analyze_cmd, common);
    analyze_cmd->add_option("--format", common.format, "json")->check(CLI::IsMember({"json"}));
    analyze_cmd->add_option("--dump-matrices", dump_path, "write C, A_n, B_n and R as CSV to this file");
    analyze_cmd->add_option("--tail", tail_levels, "levels k for P(Q2 >= k)");

    auto* sim_cmd = app.add_subcommand("simulate", "discrete-event simulation");
    add_params(*sim_cmd, common);
    add_sim(*sim_cmd, sim);
    sim_cmd->add_option("--format", common.format, "json, or csv for the termination histogram")
        ->check(CLI::IsMember({"json", "csv"}));
    sim_cmd->add_option("--histogram", histogram_path, "also write the termination histogram CSV here");
    sim_cmd->add_option("--trace", trace_path, "write the event trace of replication 0 as CSV");
    sim_cmd->add_flag("--occupancy", with_occupancy, "include state occupancy matrices in the JSON");

    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep, one CSV row per grid point");
    add_params(*sweep_cmd, common);
    add_sim(*sweep_cmd, sim);
    sweep_cmd->add_option("--sweep", sweep_text, "param:start:stop:step or param:v1,v2,...")->required();
    sweep_cmd->add_option("--mode", mode, "analytic, simulate or both");
    sweep_cmd->add_option("--format", sweep_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    std::vector<std::string> args;
    try {
        args = expand_config(raw_args);
    } catch (const InvalidParams& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidParams;
    }
    std::vector<std::string> argv_store;
    argv_store.reserve(args.size() + 1);
    argv_store.emplace_back("prioq");
    for (const auto& a : args) argv_store.push_back(a);
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        err << "error: " << e.what() << '\n';
        return kInvalidParams;
    }

    try {
        if (*stab_cmd) {
            const auto report = stability<double>(common.params);
            Output o(common.out_path, out);
            if (common.format == "text") {
                o.stream() << (report.stable ? "stable" : "unstable") << '\n'
                           << "delta " << format_number(report.delta) << '\n'
                           << "rho2 " << format_number(report.rho2) << '\n'
                           << "lambda_max " << format_number(report.lambda_max) << '\n'
                           << "margin " << format_number(report.margin) << '\n';
            } else {
                err << (report.stable ? "stable" : "unstable") << ": lambda2 = " << format_number(common.params.lambda2)
                    << ", lambda_max = " << format_number(report.lambda_max) << '\n';
                nlohmann::json j = {{"params", to_json(common.params)}, {"stability", to_json(report)}};
                o.stream() << j.dump(2) << '\n';
            }
            return kOk;
        }

        if (*analyze_cmd) {
            const auto params = validate(common.params);
            const auto report = stability<double>(params);
            if (!report.stable) {
                err << "error: unstable: lambda2 = " << format_number(params.lambda2)
                    << " >= lambda_max = " << format_number(report.lambda_max) << '\n';
                return kUnstable;
            }
            if (!dump_path.empty()) {
                const auto blocks = build_blocks<double>(params);
                const auto r = compute_rate_matrix(blocks);
                std::ofstream dump(dump_path);
                if (!dump) throw InvalidParams("dump-matrices", "cannot open '" + dump_path + "'");
                write_matrices_csv(dump, blocks, &r.R);
            }
            const auto perf = analyze<double>(params, tail_levels);
            Output o(common.out_path, out);
            nlohmann::json j = {{"params", to_json(params)}, {"stability", to_json(report)}, {"performance", to_json(perf)}};
            o.stream() << j.dump(2) << '\n';
            return kOk;
        }

        if (*sim_cmd) {
            const auto cfg = make_sim_config(common.params, sim);
            const auto report = simulate(cfg);
            if (!trace_path.empty()) {
                std::vector<TraceEvent> trace;
                simulate_replication(cfg, 0, &trace);
                std::ofstream tf(trace_path);
                if (!tf) throw InvalidParams("trace", "cannot open '" + trace_path + "'");
                write_trace_csv(tf, trace);
            }
            if (!histogram_path.empty()) {
                std::ofstream hf(histogram_path);
                if (!hf) throw InvalidParams("histogram", "cannot open '" + histogram_path + "'");
                write_histogram_csv(hf, report);
            }
            Output o(common.out_path, out);
            if (common.format == "csv") {
                write_histogram_csv(o.stream(), report);
            } else {
                nlohmann::json j = {{"params", to_json(cfg.params)},
                                    {"service1", cfg.service1.describe()},
                                    {"service2", cfg.service2.describe()},
                                    {"horizon", cfg.horizon},
                                    {"warmup", cfg.effective_warmup()},
                                    {"seed", cfg.seed},
                                    {"victim", victim_name(cfg.victim)},
                                    {"report", to_json(report, with_occupancy)}};
                o.stream() << j.dump(2) << '\n';
            }
            return kOk;
        }

        if (*sweep_cmd) {
            SweepSpec spec;
            std::tie(spec.param, spec.grid) = parse_sweep(sweep_text);
            spec.base = common.params;
            spec.mode = parse_mode(mode);
            spec.dist1 = parse_service_spec(sim.dist1);
            spec.dist2 = parse_service_spec(sim.dist2);
            spec.horizon = sim.horizon;
            spec.warmup = sim.warmup;
            spec.seed = sim.seed;
            spec.replications = sim.reps;
            spec.threads = sim.threads;
            spec.victim = parse_victim(sim.victim);
            const auto rows = run_sweep(spec);
            Output o(common.out_path, out);
            if (sweep_format == "json") {
                auto arr = nlohmann::json::array();
                for (const auto& row : rows) {
                    nlohmann::json j = {{"value", row.value}, {"params", to_json(row.params)},
                                        {"stability", to_json(row.stability)}};
                    if (row.analytic) j["performance"] = to_json(*row.analytic);
                    if (row.simulated) j["simulation"] = to_json(*row.simulated, false);
                    arr.push_back(std::move(j));
                }
                o.stream() << arr.dump(2) << '\n';
            } else {
                write_sweep_csv(o.stream(), spec, rows);
            }
            return kOk;
        }
    } catch (const InvalidParams& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidParams;
    } catch (const Unstable& e) {
        err << "error: " << e.what() << '\n';
        return kUnstable;
    }
    return kOk;
}

}  // namespace prioq::cli
