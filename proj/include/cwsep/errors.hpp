#pragma once

#include <stdexcept>
#include <string>

namespace cwsep {

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct format_error : std::runtime_error {
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct shape_error : std::invalid_argument {
    explicit shape_error(const std::string& msg) : std::invalid_argument(msg) {}
};

struct bounds_error : std::out_of_range {
    explicit bounds_error(const std::string& msg) : std::out_of_range(msg) {}
};

// Filter-bank design could not reach the requested stopband attenuation.
struct design_error : std::runtime_error {
    design_error(const std::string& msg, double achieved_db)
        : std::runtime_error(msg), achieved_attenuation_db(achieved_db) {}
    double achieved_attenuation_db;
};

struct state_error : std::logic_error {
    explicit state_error(const std::string& msg) : std::logic_error(msg) {}
};

struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint does not match the architecture it is being loaded into.
struct incompatibility_error : std::runtime_error {
    explicit incompatibility_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cwsep
