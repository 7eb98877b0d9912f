#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "prioq/model.hpp"
#include "prioq/server_pool.hpp"
#include "prioq/types.hpp"

namespace prioq {

struct SimConfig {
    SystemParams params;
    ServiceDistribution service1 = ServiceDistribution::exponential(1.0);
    ServiceDistribution service2 = ServiceDistribution::exponential(1.0);
    double horizon = 1e6;
    std::optional<double> warmup;  ///< defaults to 10% of the horizon
    std::uint64_t seed = 1;
    int replications = 10;
    PreemptionVictim victim = PreemptionVictim::MostRecentlyStarted;
    int j_cap = 0;    ///< occupancy is recorded for j < j_cap, the rest aggregated; 0 means 10*c
    int threads = 0;  ///< worker threads for replications; 0 means hardware concurrency

    double effective_warmup() const { return warmup.value_or(0.1 * horizon); }
    int effective_j_cap() const { return j_cap > 0 ? j_cap : 10 * params.c; }
};

/// Simulation config with exponential services at the rates in params.
SimConfig exponential_config(const SystemParams& params);

/// Throws InvalidParams when the config is not runnable.
void validate(const SimConfig& config);

enum class TraceEventType {
    Arrival,           ///< admitted arrival (any class), no preemption
    ArrivalPreempting, ///< class-1 arrival that displaced a class-2 customer
    Loss,              ///< class-1 arrival finding c class-1 customers
    Departure,
};

struct TraceEvent {
    double time;
    TraceEventType type;
    int customer_class;
    int i;  ///< class-1 count after the event
    int j;  ///< class-2 count after the event
};

std::string to_string(TraceEventType type);
void write_trace_csv(std::ostream& os, std::span<const TraceEvent> trace);

struct RegenerationStats {
    std::uint64_t count = 0;        ///< arrivals that found the system empty
    double mean_cycle_length = 0.0; ///< mean time between successive ones (0 if fewer than two)
};

/// Regeneration epochs of a trace starting from the empty state.
RegenerationStats measure_regenerations(std::span<const TraceEvent> trace);

/// Per-cycle sums for the regenerative ratio estimator of a time average:
/// y is the integral over a cycle, t its length.
struct RegenerativeSums {
    std::uint64_t cycles = 0;
    double y = 0.0, t = 0.0, yy = 0.0, tt = 0.0, yt = 0.0;

    void add(double cycle_integral, double cycle_length);
    void merge(const RegenerativeSums& other);
};

/// Raw statistics of one replication over the observation window [warmup, horizon].
struct ReplicationStats {
    double mean_wait = 0.0;          ///< per departed class-2 customer arrived in the window
    double mean_terminations = 0.0;  ///< preemptions per departed class-2 customer
    double throughput = 0.0;         ///< class-2 departures per unit time
    double termination_rate = 0.0;   ///< preemption events per unit time
    double time_in_termination_set = 0.0;  ///< fraction of time with i + j >= c, i <= c-1
    double mean_queue_length = 0.0;  ///< time-average number of waiting class-2 customers
    double loss_fraction = 0.0;      ///< lost / arrived class-1 customers
    std::vector<std::uint64_t> termination_counts;  ///< customers preempted k times
    Matrix<double> occupancy;          ///< time fraction in (i, min(j, j_cap))
    Matrix<double> arrival_occupancy;  ///< state seen by class-2 arrivals, as fractions
    RegenerationStats regenerations;
    RegenerativeSums queue_cycles;  ///< waiting class-2 customers, over complete cycles in the window

    // whole-run integer accounting
    std::uint64_t arrivals2 = 0;
    std::uint64_t departures2 = 0;
    std::uint64_t in_system2 = 0;
    std::uint64_t arrivals1 = 0;
    std::uint64_t lost1 = 0;
    std::uint64_t preemptions = 0;
};

/// Mean over replications with its standard error and 95% Student-t half-width.
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;  ///< NaN with a single replication
    double half_width = 0.0; ///< NaN with a single replication
};

Estimate estimate(std::span<const double> samples);

/// Ratio estimate sum(y)/sum(t) with the classical regenerative variance and a
/// normal 95% half-width. NaN spread with fewer than two cycles.
Estimate regenerative_estimate(const RegenerativeSums& sums);

struct SimReport {
    Estimate mean_wait;
    Estimate mean_terminations;
    Estimate throughput;
    Estimate termination_rate;
    Estimate time_in_termination_set;
    Estimate balance_gap;  ///< termination_rate - lambda1 * time_in_termination_set
    Estimate mean_queue_length;
    Estimate loss_fraction;
    Estimate regeneration_cycle_length;
    Estimate regenerative_queue_length;  ///< diagnostic: cycles pooled over replications
    std::vector<double> termination_histogram;  ///< P(N_T = k), pooled over replications
    Matrix<double> state_occupancy;
    Matrix<double> arrival_occupancy;
    std::uint64_t regen_cycles = 0;
    std::vector<ReplicationStats> replications;
};

/// One replication; the RNG stream is derived from (config.seed, index).
ReplicationStats simulate_replication(const SimConfig& config, int index,
                                      std::vector<TraceEvent>* trace = nullptr);

/// Independent replications aggregated in index order, so the report does
/// not depend on the number of worker threads.
SimReport simulate(const SimConfig& config);

}  // namespace prioq
