#include "cli/options.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace prioq::cli {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

ServiceDistribution ServiceSpec::with_rate(double mu) const {
    switch (kind) {
        case Kind::Exponential: return ServiceDistribution::exponential(mu);
        case Kind::Erlang: return mean_preserving_erlang(mu, shape);
        case Kind::Deterministic:
            if (!(mu > 0.0)) throw InvalidParams("mu", "must be > 0");
            return ServiceDistribution::deterministic(1.0 / mu);
    }
    throw InvalidParams("dist");
}

std::string ServiceSpec::to_string() const {
    switch (kind) {
        case Kind::Exponential: return "exp";
        case Kind::Erlang: return "erlang:" + std::to_string(shape);
        case Kind::Deterministic: return "det";
    }
    return "?";
}

ServiceSpec parse_service_spec(std::string_view text) {
    ServiceSpec spec;
    if (text == "exp") return spec;
    if (text == "det") {
        spec.kind = ServiceSpec::Kind::Deterministic;
        return spec;
    }
    constexpr std::string_view prefix = "erlang:";
    if (text.starts_with(prefix)) {
        const auto digits = text.substr(prefix.size());
        int shape = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), shape);
        if (ec != std::errc{} || ptr != digits.data() + digits.size() || shape < 1) {
            throw InvalidParams("dist", "erlang shape must be a positive integer");
        }
        spec.kind = ServiceSpec::Kind::Erlang;
        spec.shape = shape;
        return spec;
    }
    throw InvalidParams("dist", "expected exp, erlang:R or det, got '" + std::string(text) + "'");
}

PreemptionVictim parse_victim(std::string_view text) {
    if (text == "mrs") return PreemptionVictim::MostRecentlyStarted;
    if (text == "lrs") return PreemptionVictim::LeastRecentlyStarted;
    throw InvalidParams("victim", "expected mrs or lrs");
}

std::string victim_name(PreemptionVictim victim) {
    return victim == PreemptionVictim::MostRecentlyStarted ? "mrs" : "lrs";
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::vector<std::string> read_config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParams("config", "cannot open '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw InvalidParams("config", "expected key=value, got '" + text + "'");
        auto key = trim(std::string_view(text).substr(0, eq));
        const auto value = trim(std::string_view(text).substr(eq + 1));
        if (key.starts_with("--")) key = key.substr(2);
        tokens.push_back("--" + key);
        if (value != "true") tokens.push_back(value);
    }
    return tokens;
}

}  // namespace prioq::cli
