#include "prioq/model.hpp"

#include <cmath>

namespace prioq {

namespace {

void require_finite(double v, const char* field) {
    if (!std::isfinite(v)) {
        throw InvalidParams(field, "must be finite");
    }
}

}  // namespace

SystemParams validate(const SystemParams& params) {
    require_finite(params.lambda1, "lambda1");
    require_finite(params.lambda2, "lambda2");
    require_finite(params.mu1, "mu1");
    require_finite(params.mu2, "mu2");
    if (params.lambda1 < 0.0) throw InvalidParams("lambda1", "must be >= 0");
    if (params.lambda2 <= 0.0) throw InvalidParams("lambda2", "must be > 0");
    if (params.mu1 <= 0.0) throw InvalidParams("mu1", "must be > 0");
    if (params.mu2 <= 0.0) throw InvalidParams("mu2", "must be > 0");
    if (params.c < 1) throw InvalidParams("c", "must be >= 1");
    if (!std::isfinite(params.rho1())) throw InvalidParams("lambda1", "rho1 overflows");
    if (!std::isfinite(params.rho2())) throw InvalidParams("lambda2", "rho2 overflows");
    return params;
}

State::State(int i, int j, int c) : i_(i), j_(j) {
    if (c < 1) throw InvalidParams("c", "must be >= 1");
    if (i < 0 || i > c) throw InvalidParams("i", "class-1 count must lie in [0, c]");
    if (j < 0) throw InvalidParams("j", "class-2 count must be >= 0");
}

ServiceDistribution ServiceDistribution::exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidParams("rate", "must be > 0");
    return ServiceDistribution(Exponential{rate});
}

ServiceDistribution ServiceDistribution::erlang(int shape, double stage_rate) {
    if (shape < 1) throw InvalidParams("shape", "must be >= 1");
    if (!(stage_rate > 0.0) || !std::isfinite(stage_rate)) {
        throw InvalidParams("stage_rate", "must be > 0");
    }
    return ServiceDistribution(Erlang{shape, stage_rate});
}

ServiceDistribution ServiceDistribution::deterministic(double duration) {
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw InvalidParams("duration", "must be > 0");
    }
    return ServiceDistribution(Deterministic{duration});
}

double ServiceDistribution::mean() const {
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return 1.0 / d.rate;
            } else if constexpr (std::is_same_v<T, Erlang>) {
                return d.shape / d.stage_rate;
            } else {
                return d.duration;
            }
        },
        kind_);
}

double ServiceDistribution::variance() const {
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return 1.0 / (d.rate * d.rate);
            } else if constexpr (std::is_same_v<T, Erlang>) {
                return d.shape / (d.stage_rate * d.stage_rate);
            } else {
                return 0.0;
            }
        },
        kind_);
}

std::string ServiceDistribution::describe() const {
    return std::visit(
        [](const auto& d) -> std::string {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return "exp(" + std::to_string(d.rate) + ")";
            } else if constexpr (std::is_same_v<T, Erlang>) {
                return "erlang(" + std::to_string(d.shape) + "," + std::to_string(d.stage_rate) + ")";
            } else {
                return "det(" + std::to_string(d.duration) + ")";
            }
        },
        kind_);
}

ServiceDistribution mean_preserving_erlang(double mu, int shape) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidParams("mu", "must be > 0");
    if (shape < 1) throw InvalidParams("shape", "must be >= 1");
    return ServiceDistribution::erlang(shape, shape * mu);
}

}  // namespace prioq
