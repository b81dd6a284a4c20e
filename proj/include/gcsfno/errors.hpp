#ifndef GCSFNO_ERRORS_HPP
#define GCSFNO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gcsfno {

// Invalid configuration or parameters (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated call contract (wrong shapes, bad arguments, stale caches).
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Numerical failure at runtime: divergence, non-finite values (CLI exit code 3).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed binary file. Carries the byte offset where parsing stopped.
struct FormatError : std::runtime_error {
    FormatError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

}  // namespace gcsfno

#endif
