#pragma once

#include <stdexcept>
#include <string>

namespace qoctl {

// Bad user-supplied values: non-normalized axes, unphysical states, parse
// failures. Maps to CLI exit code 2.
class input_error : public std::invalid_argument {
public:
    explicit input_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Model evaluated where a rate diverges (bosonic dissipator at eps <= 0).
class singular_rate_error : public input_error {
public:
    explicit singular_rate_error(const std::string& msg) : input_error(msg) {}
};

// Instantaneous spectrum too close to degenerate for the frame generator.
class degenerate_spectrum_error : public input_error {
public:
    explicit degenerate_spectrum_error(const std::string& msg) : input_error(msg) {}
};

// State left the Bloch ball during integration beyond tolerance.
class integration_error : public std::runtime_error {
public:
    explicit integration_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Closed-form branch evaluated outside its domain (negative discriminant).
class branch_undefined_error : public std::domain_error {
public:
    explicit branch_undefined_error(const std::string& msg) : std::domain_error(msg) {}
};

// Requested boundary pair cannot be connected. Carries the minimal-time
// certificate when one is available. Maps to CLI exit code 3.
class infeasible_error : public std::runtime_error {
public:
    infeasible_error(const std::string& msg, double minimal_time = -1.0)
        : std::runtime_error(msg), minimal_time(minimal_time) {}
    double minimal_time;
};

}  // namespace qoctl
