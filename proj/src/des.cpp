#include "prioq/des.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

namespace prioq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Replication {
public:
    Replication(const SimConfig& config, int index, std::vector<TraceEvent>* trace)
        : cfg_(config),
          c_(config.params.c),
          j_cap_(config.effective_j_cap()),
          warmup_(config.effective_warmup()),
          horizon_(config.horizon),
          trace_(trace),
          pool_(config.params.c, config.victim) {
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                          static_cast<std::uint32_t>(config.seed >> 32),
                          static_cast<std::uint32_t>(index)};
        gen_.seed(seq);
        occupancy_ = Matrix<double>::Zero(c_ + 1, j_cap_ + 1);
        arrival_counts_ = Matrix<double>::Zero(c_ + 1, j_cap_ + 1);
    }

    ReplicationStats run() {
        const double l1 = cfg_.params.lambda1;
        const double l2 = cfg_.params.lambda2;
        std::exponential_distribution<double> inter1(l1 > 0.0 ? l1 : 1.0);
        std::exponential_distribution<double> inter2(l2);
        double next1 = l1 > 0.0 ? inter1(gen_) : kInf;
        double next2 = inter2(gen_);

        for (;;) {
            int server = -1;
            const double next_dep = pool_.next_completion(server);
            const double t_next = std::min({next1, next2, next_dep});
            if (t_next > horizon_) {
                accumulate(now_, horizon_);
                now_ = horizon_;
                break;
            }
            accumulate(now_, t_next);
            now_ = t_next;
            if (t_next == next_dep) {
                depart(server);
            } else if (t_next == next1) {
                arrive_class1();
                next1 = now_ + inter1(gen_);
            } else {
                arrive_class2();
                next2 = now_ + inter2(gen_);
            }
        }
        return finish();
    }

private:
    bool in_window() const { return now_ >= warmup_; }

    void accumulate(double t0, double t1) {
        const double a = std::max(t0, warmup_);
        const double b = std::min(t1, horizon_);
        if (!(b > a)) return;
        const double dt = b - a;
        const int i = pool_.class1();
        const int j = pool_.class2();
        occupancy_(i, std::min(j, j_cap_)) += dt;
        if (i + j >= c_ && i <= c_ - 1) termination_set_time_ += dt;
        queue_area_ += static_cast<double>(pool_.queue().size()) * dt;
    }

    void record(TraceEventType type, int cls) {
        if (trace_) trace_->push_back({now_, type, cls, pool_.class1(), pool_.class2()});
    }

    void note_regeneration() {
        if (pool_.class1() != 0 || pool_.class2() != 0 || !in_window()) return;
        if (regen_count_ > 0) {
            regen_span_ = now_ - first_regen_;
            queue_cycles_.add(queue_area_ - area_at_regen_, now_ - last_regen_);
        } else {
            first_regen_ = now_;
        }
        last_regen_ = now_;
        area_at_regen_ = queue_area_;
        ++regen_count_;
    }

    void arrive_class1() {
        ++arrivals1_;
        const bool window = in_window();
        if (window) ++window_arrivals1_;
        note_regeneration();
        if (pool_.class1() == c_) {
            ++lost1_;
            if (window) ++window_lost1_;
            record(TraceEventType::Loss, 1);
            return;
        }
        const auto outcome = pool_.admit_class1(now_, cfg_.service1.sample(gen_));
        if (outcome == ServerPool::Class1Outcome::Preempted) {
            ++preemptions_;
            if (window) ++window_preemptions_;
            record(TraceEventType::ArrivalPreempting, 1);
        } else {
            record(TraceEventType::Arrival, 1);
        }
    }

    void arrive_class2() {
        ++arrivals2_;
        if (in_window()) arrival_counts_(pool_.class1(), std::min(pool_.class2(), j_cap_)) += 1.0;
        note_regeneration();
        Class2Job job;
        job.id = arrivals2_;
        job.arrival = now_;
        job.requirement = cfg_.service2.sample(gen_);
        pool_.admit_class2(now_, job);
        record(TraceEventType::Arrival, 2);
    }

    void depart(int server) {
        const auto done = pool_.complete(server, now_);
        const int cls = done.finished == Occupant::Class1 ? 1 : 2;
        if (cls == 2) {
            ++departures2_;
            if (in_window()) ++window_departures2_;
            const auto& job = done.job;
            if (job.arrival >= warmup_) {
                wait_sum_ += std::max(0.0, now_ - job.arrival - job.requirement);
                terminations_sum_ += job.terminations;
                ++completed_;
                if (termination_counts_.size() <= job.terminations) {
                    termination_counts_.resize(job.terminations + 1, 0);
                }
                ++termination_counts_[job.terminations];
            }
        }
        record(TraceEventType::Departure, cls);
    }

    ReplicationStats finish() {
        ReplicationStats r;
        const double window = horizon_ - warmup_;
        r.mean_wait = completed_ ? wait_sum_ / static_cast<double>(completed_) : 0.0;
        r.mean_terminations = completed_ ? terminations_sum_ / static_cast<double>(completed_) : 0.0;
        r.throughput = static_cast<double>(window_departures2_) / window;
        r.termination_rate = static_cast<double>(window_preemptions_) / window;
        r.time_in_termination_set = termination_set_time_ / window;
        r.mean_queue_length = queue_area_ / window;
        r.loss_fraction = window_arrivals1_ ? static_cast<double>(window_lost1_) / static_cast<double>(window_arrivals1_)
                                            : 0.0;
        r.termination_counts = std::move(termination_counts_);
        r.occupancy = occupancy_ / window;
        const double seen = arrival_counts_.sum();
        r.arrival_occupancy = seen > 0.0 ? Matrix<double>(arrival_counts_ / seen) : arrival_counts_;
        r.regenerations.count = regen_count_;
        r.regenerations.mean_cycle_length =
            regen_count_ > 1 ? regen_span_ / static_cast<double>(regen_count_ - 1) : 0.0;
        r.queue_cycles = queue_cycles_;
        r.arrivals2 = arrivals2_;
        r.departures2 = departures2_;
        r.in_system2 = static_cast<std::uint64_t>(pool_.class2());
        r.arrivals1 = arrivals1_;
        r.lost1 = lost1_;
        r.preemptions = preemptions_;
        return r;
    }

    const SimConfig& cfg_;
    const int c_;
    const int j_cap_;
    const double warmup_;
    const double horizon_;
    std::vector<TraceEvent>* trace_;
    std::mt19937_64 gen_;

    double now_ = 0.0;
    ServerPool pool_;

    Matrix<double> occupancy_;
    Matrix<double> arrival_counts_;
    double termination_set_time_ = 0.0;
    double queue_area_ = 0.0;
    double wait_sum_ = 0.0;
    double terminations_sum_ = 0.0;
    std::uint64_t completed_ = 0;
    std::vector<std::uint64_t> termination_counts_;

    std::uint64_t arrivals1_ = 0, lost1_ = 0, arrivals2_ = 0, departures2_ = 0, preemptions_ = 0;
    std::uint64_t window_arrivals1_ = 0, window_lost1_ = 0, window_departures2_ = 0, window_preemptions_ = 0;
    std::uint64_t regen_count_ = 0;
    double first_regen_ = 0.0;
    double regen_span_ = 0.0;
    double last_regen_ = 0.0;
    double area_at_regen_ = 0.0;
    RegenerativeSums queue_cycles_;
};

template <typename F>
Estimate estimate_of(const std::vector<ReplicationStats>& reps, F field) {
    std::vector<double> xs;
    xs.reserve(reps.size());
    for (const auto& r : reps) xs.push_back(field(r));
    return estimate(xs);
}

}  // namespace

SimConfig exponential_config(const SystemParams& params) {
    SimConfig cfg;
    cfg.params = params;
    cfg.service1 = ServiceDistribution::exponential(params.mu1);
    cfg.service2 = ServiceDistribution::exponential(params.mu2);
    return cfg;
}

void validate(const SimConfig& config) {
    validate(config.params);
    if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) {
        throw InvalidParams("horizon", "must be finite and > 0");
    }
    const double w = config.effective_warmup();
    if (!(w >= 0.0) || !(config.horizon > w)) throw InvalidParams("warmup", "need horizon > warmup >= 0");
    if (config.replications < 1) throw InvalidParams("replications", "must be >= 1");
    if (config.j_cap < 0) throw InvalidParams("j_cap", "must be >= 0");
}

std::string to_string(TraceEventType type) {
    switch (type) {
        case TraceEventType::Arrival: return "arrival";
        case TraceEventType::ArrivalPreempting: return "arrival_preempt";
        case TraceEventType::Loss: return "loss";
        case TraceEventType::Departure: return "departure";
    }
    return "unknown";
}

void write_trace_csv(std::ostream& os, std::span<const TraceEvent> trace) {
    const auto old_precision = os.precision(17);
    os << "time,type,class,i,j\n";
    for (const auto& e : trace) {
        os << e.time << ',' << to_string(e.type) << ',' << e.customer_class << ',' << e.i << ',' << e.j << '\n';
    }
    os.precision(old_precision);
}

RegenerationStats measure_regenerations(std::span<const TraceEvent> trace) {
    RegenerationStats out;
    int i = 0;
    int j = 0;
    double first = 0.0;
    double last = 0.0;
    for (const auto& e : trace) {
        const bool arrival = e.type != TraceEventType::Departure;
        if (arrival && i == 0 && j == 0) {
            if (out.count == 0) first = e.time;
            last = e.time;
            ++out.count;
        }
        i = e.i;
        j = e.j;
    }
    if (out.count > 1) out.mean_cycle_length = (last - first) / static_cast<double>(out.count - 1);
    return out;
}

void RegenerativeSums::add(double cycle_integral, double cycle_length) {
    ++cycles;
    y += cycle_integral;
    t += cycle_length;
    yy += cycle_integral * cycle_integral;
    tt += cycle_length * cycle_length;
    yt += cycle_integral * cycle_length;
}

void RegenerativeSums::merge(const RegenerativeSums& o) {
    cycles += o.cycles;
    y += o.y;
    t += o.t;
    yy += o.yy;
    tt += o.tt;
    yt += o.yt;
}

Estimate regenerative_estimate(const RegenerativeSums& s) {
    Estimate e;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (s.cycles == 0 || !(s.t > 0.0)) return {nan, nan, nan};
    const double n = static_cast<double>(s.cycles);
    e.mean = s.y / s.t;
    if (s.cycles < 2) {
        e.std_error = e.half_width = nan;
        return e;
    }
    const double ybar = s.y / n;
    const double tbar = s.t / n;
    const double syy = (s.yy - n * ybar * ybar) / (n - 1.0);
    const double stt = (s.tt - n * tbar * tbar) / (n - 1.0);
    const double syt = (s.yt - n * ybar * tbar) / (n - 1.0);
    const double var = std::max(0.0, syy - 2.0 * e.mean * syt + e.mean * e.mean * stt);
    e.std_error = std::sqrt(var / n) / tbar;
    e.half_width = 1.959963984540054 * e.std_error;
    return e;
}

Estimate estimate(std::span<const double> samples) {
    Estimate e;
    const auto n = samples.size();
    if (n == 0) return e;
    double sum = 0.0;
    for (double x : samples) sum += x;
    e.mean = sum / static_cast<double>(n);
    if (n < 2) {
        e.std_error = std::numeric_limits<double>::quiet_NaN();
        e.half_width = std::numeric_limits<double>::quiet_NaN();
        return e;
    }
    double ss = 0.0;
    for (double x : samples) ss += (x - e.mean) * (x - e.mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    e.std_error = sd / std::sqrt(static_cast<double>(n));
    const boost::math::students_t dist(static_cast<double>(n - 1));
    e.half_width = boost::math::quantile(dist, 0.975) * e.std_error;
    return e;
}

ReplicationStats simulate_replication(const SimConfig& config, int index, std::vector<TraceEvent>* trace) {
    validate(config);
    return Replication(config, index, trace).run();
}

SimReport simulate(const SimConfig& config) {
    validate(config);
    const int n = config.replications;
    std::vector<ReplicationStats> reps(static_cast<std::size_t>(n));

    int workers = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, n);
    if (workers == 1) {
        for (int k = 0; k < n; ++k) reps[static_cast<std::size_t>(k)] = Replication(config, k, nullptr).run();
    } else {
        std::atomic<int> next{0};
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int k = next++; k < n; k = next++) {
                    reps[static_cast<std::size_t>(k)] = Replication(config, k, nullptr).run();
                }
            });
        }
    }

    SimReport out;
    out.mean_wait = estimate_of(reps, [](const auto& r) { return r.mean_wait; });
    out.mean_terminations = estimate_of(reps, [](const auto& r) { return r.mean_terminations; });
    out.throughput = estimate_of(reps, [](const auto& r) { return r.throughput; });
    out.termination_rate = estimate_of(reps, [](const auto& r) { return r.termination_rate; });
    out.time_in_termination_set = estimate_of(reps, [](const auto& r) { return r.time_in_termination_set; });
    const double l1 = config.params.lambda1;
    out.balance_gap = estimate_of(reps, [l1](const auto& r) { return r.termination_rate - l1 * r.time_in_termination_set; });
    out.mean_queue_length = estimate_of(reps, [](const auto& r) { return r.mean_queue_length; });
    out.loss_fraction = estimate_of(reps, [](const auto& r) { return r.loss_fraction; });
    out.regeneration_cycle_length = estimate_of(reps, [](const auto& r) { return r.regenerations.mean_cycle_length; });
    RegenerativeSums cycles;
    for (const auto& r : reps) cycles.merge(r.queue_cycles);
    out.regenerative_queue_length = regenerative_estimate(cycles);

    std::vector<std::uint64_t> pooled;
    std::uint64_t total = 0;
    out.state_occupancy = Matrix<double>::Zero(reps[0].occupancy.rows(), reps[0].occupancy.cols());
    out.arrival_occupancy = Matrix<double>::Zero(reps[0].occupancy.rows(), reps[0].occupancy.cols());
    for (const auto& r : reps) {
        if (pooled.size() < r.termination_counts.size()) pooled.resize(r.termination_counts.size(), 0);
        for (std::size_t k = 0; k < r.termination_counts.size(); ++k) {
            pooled[k] += r.termination_counts[k];
            total += r.termination_counts[k];
        }
        out.state_occupancy += r.occupancy;
        out.arrival_occupancy += r.arrival_occupancy;
        out.regen_cycles += r.regenerations.count;
    }
    out.state_occupancy /= static_cast<double>(n);
    out.arrival_occupancy /= static_cast<double>(n);
    for (auto count : pooled) {
        out.termination_histogram.push_back(total ? static_cast<double>(count) / static_cast<double>(total) : 0.0);
    }
    out.replications = std::move(reps);
    return out;
}

}  // namespace prioq
