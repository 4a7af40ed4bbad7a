#ifndef SPLITINFER_ERRORS_HPP
#define SPLITINFER_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace splitinfer {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension mismatch in any linear-algebra or network operation.
struct ShapeError : Error {
    using Error::Error;
};

// Pivot fell below tolerance during elimination; carries the failing pivot.
struct SingularMatrixError : Error {
    double pivot;
    explicit SingularMatrixError(double pivot_magnitude)
        : Error("singular matrix: pivot magnitude " + std::to_string(pivot_magnitude) +
                " below tolerance"),
          pivot(pivot_magnitude) {}
};

// Bad magic bytes or structurally malformed file/frame.
struct FormatError : Error {
    using Error::Error;
};

// Input ended before the declared length.
struct TruncationError : Error {
    using Error::Error;
};

// Loss became NaN during training.
struct DivergenceError : Error {
    std::size_t epoch;
    explicit DivergenceError(std::size_t at_epoch)
        : Error("training diverged: NaN loss at epoch " + std::to_string(at_epoch)),
          epoch(at_epoch) {}
};

// Wire-protocol violation, including stale forward/backward mask pairing.
struct ProtocolError : Error {
    using Error::Error;
};

// Attack strategy cannot apply to this activation kind.
struct StrategyInapplicableError : Error {
    using Error::Error;
};

// Invalid configuration; names the offending key.
struct ConfigError : Error {
    std::string key;
    ConfigError(std::string bad_key, const std::string& why)
        : Error("config key '" + bad_key + "': " + why), key(std::move(bad_key)) {}
};

struct IoError : Error {
    using Error::Error;
};

} // namespace splitinfer

#endif
