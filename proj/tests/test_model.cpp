#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "prioq/model.hpp"

using namespace prioq;

TEST_CASE("validate accepts the experiment parameters") {
    const SystemParams p{1.0, 8.0, 4.0, 20.0, 2};
    CHECK(validate(p) == p);
    CHECK(p.rho1() == doctest::Approx(0.25));
    CHECK(p.rho2() == doctest::Approx(0.4));
}

TEST_CASE("validate accepts no class-1 traffic") {
    const SystemParams p{0.0, 8.0, 4.0, 20.0, 2};
    CHECK(validate(p) == p);
}

TEST_CASE("validate names the violated field") {
    const auto field_of = [](SystemParams p) -> std::string {
        try {
            validate(p);
        } catch (const InvalidParams& e) {
            return e.field();
        }
        return "";
    };
    CHECK(field_of({1.0, 8.0, 4.0, 20.0, 0}) == "c");
    CHECK(field_of({-1.0, 8.0, 4.0, 20.0, 2}) == "lambda1");
    CHECK(field_of({1.0, 0.0, 4.0, 20.0, 2}) == "lambda2");
    CHECK(field_of({1.0, 8.0, 0.0, 20.0, 2}) == "mu1");
    CHECK(field_of({1.0, 8.0, 4.0, -3.0, 2}) == "mu2");
    CHECK(field_of({NAN, 8.0, 4.0, 20.0, 2}) == "lambda1");
    CHECK(field_of({1.0, INFINITY, 4.0, 20.0, 2}) == "lambda2");
}

TEST_CASE("state rejects a class-1 count above c") {
    CHECK_NOTHROW(State(2, 7, 2));
    CHECK_THROWS_AS(State(3, 0, 2), InvalidParams);
    CHECK_THROWS_AS(State(0, -1, 2), InvalidParams);
}

TEST_CASE("mean-preserving Erlang") {
    SUBCASE("shape 1 is exponential with mean 1/mu") {
        const auto d = mean_preserving_erlang(4.0, 1);
        CHECK(d.mean() == 0.25);
        CHECK(d.variance() == doctest::Approx(1.0 / 16.0));
    }
    SUBCASE("shape 5 uses per-stage rate 5 mu") {
        const auto d = mean_preserving_erlang(4.0, 5);
        const auto& e = std::get<Erlang>(d.kind());
        CHECK(e.shape == 5);
        CHECK(e.stage_rate == 20.0);
        CHECK(d.mean() == 0.25);
    }
    SUBCASE("shape 10 at mu 20") {
        const auto d = mean_preserving_erlang(20.0, 10);
        CHECK(std::get<Erlang>(d.kind()).stage_rate == 200.0);
        CHECK(d.mean() == 1.0 / 20.0);
    }
    CHECK_THROWS_AS(mean_preserving_erlang(4.0, 0), InvalidParams);
    CHECK_THROWS_AS(mean_preserving_erlang(0.0, 3), InvalidParams);
    CHECK_THROWS_AS(ServiceDistribution::deterministic(0.0), InvalidParams);
    CHECK_THROWS_AS(ServiceDistribution::exponential(-1.0), InvalidParams);
}

TEST_CASE("empirical means agree with analytic means") {
    const ServiceDistribution laws[] = {
        ServiceDistribution::exponential(4.0),
        mean_preserving_erlang(4.0, 5),
        mean_preserving_erlang(20.0, 10),
        ServiceDistribution::deterministic(0.25),
    };
    std::mt19937_64 gen(2024);
    constexpr int n = 1'000'000;
    for (const auto& law : laws) {
        CAPTURE(law.describe());
        double sum = 0.0;
        double sq = 0.0;
        double lowest = 0.0;
        for (int k = 0; k < n; ++k) {
            const double x = law.sample(gen);
            lowest = std::min(lowest, x);
            sum += x;
            sq += x * x;
        }
        CHECK(lowest >= 0.0);
        const double mean = sum / n;
        const double var = sq / n - mean * mean;
        const double se = std::sqrt(law.variance() / n);
        CHECK(std::abs(mean - law.mean()) <= 5.0 * se + 1e-15);
        CHECK(var == doctest::Approx(law.variance()).epsilon(0.02).scale(1.0));
    }
}
