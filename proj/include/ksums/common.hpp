#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ksums {

// Thrown for invalid run configurations (bad k, unsupported metric/algo
// combinations, malformed CLI arguments). CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for malformed or inconsistent input data (parse failures carry a
// byte or line position). CLI exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a cosine kernel meets a zero-norm composite. CLI exit code 4.
struct DegenerateClusterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Contract violations are programming errors, not recoverable states.
#define KSUMS_REQUIRE(cond, msg)                                        \
    do {                                                                \
        if (!(cond)) throw std::logic_error(std::string("ksums: ") + msg); \
    } while (0)

enum class Metric { SquaredL2, Cosine };

}  // namespace ksums
