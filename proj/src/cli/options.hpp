#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "prioq/des.hpp"
#include "prioq/model.hpp"

namespace prioq::cli {

/// Service law named on the command line; the mean comes from the class rate.
struct ServiceSpec {
    enum class Kind { Exponential, Erlang, Deterministic };
    Kind kind = Kind::Exponential;
    int shape = 1;

    ServiceDistribution with_rate(double mu) const;
    std::string to_string() const;
};

/// "exp", "erlang:R" or "det".
ServiceSpec parse_service_spec(std::string_view text);

/// "mrs" (most recently started) or "lrs" (least recently started).
PreemptionVictim parse_victim(std::string_view text);
std::string victim_name(PreemptionVictim victim);

/// Shortest decimal form that round-trips to the same double.
std::string format_number(double value);

/// Flat key=value config file turned into "--key value" tokens. Blank lines
/// and lines starting with '#' are skipped; a value of "true" yields the bare flag.
std::vector<std::string> read_config_tokens(const std::string& path);

}  // namespace prioq::cli
