#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "cli/options.hpp"
#include "prioq/des.hpp"
#include "prioq/erlang_loss.hpp"
#include "prioq/measures.hpp"

namespace prioq::cli {

enum class SweepParam { Lambda1, Lambda2, Servers };
enum class SweepMode { Analytic, Simulate, Both };

struct SweepSpec {
    SweepParam param = SweepParam::Lambda1;
    std::vector<double> grid;
    SystemParams base;
    SweepMode mode = SweepMode::Analytic;
    ServiceSpec dist1;
    ServiceSpec dist2;
    double horizon = 1e6;
    std::optional<double> warmup;
    std::uint64_t seed = 1;
    int replications = 10;
    PreemptionVictim victim = PreemptionVictim::MostRecentlyStarted;
    int threads = 0;

    SystemParams at(double value) const;
};

/// "l1:0:10:0.5" (start:stop:step, stop inclusive) or "l2:4,8,16" (explicit list).
/// Parameter names: l1, l2, c.
std::pair<SweepParam, std::vector<double>> parse_sweep(std::string_view text);

SweepMode parse_mode(std::string_view text);
std::string_view param_name(SweepParam param);

struct SweepRow {
    double value = 0.0;
    SystemParams params;
    StabilityReport<double> stability;
    std::optional<PerformanceReport<double>> analytic;  ///< empty when not requested or unstable
    std::optional<SimReport> simulated;
};

/// Every grid point is validated before any work starts. Rows come back in
/// grid order regardless of which worker finished first.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

void write_sweep_csv(std::ostream& os, const SweepSpec& spec, const std::vector<SweepRow>& rows);

}  // namespace prioq::cli
