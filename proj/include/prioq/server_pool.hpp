#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "prioq/errors.hpp"

namespace prioq {

/// Which class-2 customer in service a class-1 arrival displaces.
enum class PreemptionVictim {
    MostRecentlyStarted,  ///< the class-2 customer whose service (re)started last
    LeastRecentlyStarted,
};

struct Class2Job {
    std::uint64_t id = 0;
    double arrival = 0.0;
    double requirement = 0.0;  ///< total service needed
    double remaining = 0.0;    ///< service still owed
    std::uint32_t terminations = 0;
    bool preempted = false;    ///< has been displaced at least once
};

enum class Occupant : std::uint8_t { Idle, Class1, Class2 };

struct ServerSlot {
    Occupant occupant = Occupant::Idle;
    double completion = std::numeric_limits<double>::infinity();
    double started = 0.0;  ///< last (re)start of the current customer
    Class2Job job;         ///< meaningful when occupant == Class2
};

/// c servers shared by the two classes under preemptive-resume priority.
/// Class 1 is lost when all c servers hold class 1; otherwise it takes an
/// idle server, or displaces a class-2 customer who goes back to the head of
/// the queue with its remaining work. Class 2 is served FCFS, non-idling.
class ServerPool {
public:
    enum class Class1Outcome { Started, Preempted, Lost };

    struct Completion {
        int server = -1;
        Occupant finished = Occupant::Idle;
        Class2Job job;  ///< the finished class-2 customer, if any
    };

    ServerPool(int c, PreemptionVictim victim) : victim_(victim), slots_(static_cast<std::size_t>(c)), idle_(c) {
        if (c < 1) throw InvalidParams("c", "must be >= 1");
    }

    int servers() const { return static_cast<int>(slots_.size()); }
    int class1() const { return n1_; }
    int class2_in_service() const { return n2_; }
    int class2() const { return n2_ + static_cast<int>(queue_.size()); }
    int idle() const { return idle_; }
    const std::deque<Class2Job>& queue() const { return queue_; }
    const ServerSlot& slot(int s) const { return slots_[static_cast<std::size_t>(s)]; }

    /// Earliest completion time; infinity when every server is idle.
    double next_completion(int& server) const {
        double best = std::numeric_limits<double>::infinity();
        server = -1;
        for (std::size_t s = 0; s < slots_.size(); ++s) {
            if (slots_[s].completion < best) {
                best = slots_[s].completion;
                server = static_cast<int>(s);
            }
        }
        return best;
    }

    /// `service` is the class-1 service time, used only if admitted.
    Class1Outcome admit_class1(double now, double service, Class2Job* displaced = nullptr) {
        if (n1_ == servers()) return Class1Outcome::Lost;
        if (idle_ > 0) {
            start_class1(find_idle(), now, service);
            --idle_;
            return Class1Outcome::Started;
        }
        const std::size_t s = pick_victim();
        auto& slot = slots_[s];
        Class2Job job = slot.job;
        job.remaining = std::max(0.0, slot.completion - now);
        job.preempted = true;
        ++job.terminations;
        --n2_;
        requeue(job);
        if (displaced) *displaced = job;
        start_class1(s, now, service);
        return Class1Outcome::Preempted;
    }

    /// Returns true when the customer starts service immediately.
    bool admit_class2(double now, Class2Job job) {
        job.remaining = job.requirement;
        if (idle_ > 0) {
            start_class2(find_idle(), now, job);
            --idle_;
            return true;
        }
        queue_.push_back(job);
        return false;
    }

    /// Finishes the customer on `server` and hands the server to the queue head.
    Completion complete(int server, double now) {
        auto& slot = slots_[static_cast<std::size_t>(server)];
        Completion out;
        out.server = server;
        out.finished = slot.occupant;
        if (slot.occupant == Occupant::Class1) {
            --n1_;
        } else if (slot.occupant == Occupant::Class2) {
            --n2_;
            out.job = slot.job;
            out.job.remaining = 0.0;
        } else {
            throw InvalidParams("server", "completion on an idle server");
        }
        slot.occupant = Occupant::Idle;
        slot.completion = std::numeric_limits<double>::infinity();
        ++idle_;
        if (!queue_.empty()) {
            const Class2Job next = queue_.front();
            queue_.pop_front();
            start_class2(static_cast<std::size_t>(server), now, next);
            --idle_;
        }
        return out;
    }

private:
    std::size_t find_idle() const {
        for (std::size_t s = 0; s < slots_.size(); ++s) {
            if (slots_[s].occupant == Occupant::Idle) return s;
        }
        return slots_.size();
    }

    void start_class1(std::size_t s, double now, double service) {
        auto& slot = slots_[s];
        slot.occupant = Occupant::Class1;
        slot.started = now;
        slot.completion = now + service;
        ++n1_;
    }

    void start_class2(std::size_t s, double now, const Class2Job& job) {
        auto& slot = slots_[s];
        slot.occupant = Occupant::Class2;
        slot.started = now;
        slot.completion = now + job.remaining;
        slot.job = job;
        ++n2_;
    }

    std::size_t pick_victim() const {
        std::size_t victim = slots_.size();
        for (std::size_t s = 0; s < slots_.size(); ++s) {
            if (slots_[s].occupant != Occupant::Class2) continue;
            if (victim == slots_.size()) {
                victim = s;
                continue;
            }
            const double a = slots_[s].started;
            const double b = slots_[victim].started;
            if (victim_ == PreemptionVictim::MostRecentlyStarted ? a > b : a < b) victim = s;
        }
        return victim;
    }

    // Displaced customers go to the head of the queue; within the displaced
    // block at the head, original arrival order is kept.
    void requeue(const Class2Job& job) {
        auto pos = queue_.begin();
        while (pos != queue_.end() && pos->preempted && pos->arrival < job.arrival) ++pos;
        queue_.insert(pos, job);
    }

    PreemptionVictim victim_;
    std::vector<ServerSlot> slots_;
    std::deque<Class2Job> queue_;
    int idle_;
    int n1_ = 0;
    int n2_ = 0;
};

}  // namespace prioq
