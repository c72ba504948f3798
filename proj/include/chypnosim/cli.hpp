#pragma once

#include "chypnosim/io.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace chypnosim::cli {

struct RunConfig {
    std::string command;
    std::string profile_path;
    std::uint64_t seed = 0;
    std::string output_path;
    /// Command-specific parameters, keyed like the long options ("fall_time").
    Json params = Json::object();
};

struct Diagnostic {
    std::string field;
    std::string reason;
};

/// Empty iff the configuration can run.
std::vector<Diagnostic> validate_config(const RunConfig &c);

/// Parses "a:b:n" into three numbers; throws ConfigError on `field`.
std::array<double, 3> parse_range(const std::string &text, const std::string &field);

/// Full entry point. Exit codes: 0 ok, 1 configuration error, 2 internal error.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace chypnosim::cli
