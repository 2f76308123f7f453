#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdmd {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Incompatible shapes or an index/rank outside its admissible range.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed snapshot file: bad magic, version, layout tag, or truncation.
class FormatError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid model/kinetics parameter (zero denominator, out-of-range value).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Input matrix is numerically zero where a nontrivial factorization is required.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// Eigendecomposition or SVD failed, or produced nonfinite values.
/// Carries the column window the fit was running on (start/len; len==0 when
/// the operation was not window-based).
class SpectralError : public Error {
public:
    SpectralError(const std::string& msg, std::size_t window_start, std::size_t window_len)
        : Error(msg), window_start(window_start), window_len(window_len) {}
    std::size_t window_start = 0;
    std::size_t window_len = 0;
};

/// lambda^k left the representable range during reconstruction.
class OverflowError : public Error {
public:
    OverflowError(const std::string& msg, double lambda_re, double lambda_im)
        : Error(msg), lambda_re(lambda_re), lambda_im(lambda_im) {}
    double lambda_re = 0.0;
    double lambda_im = 0.0;
};

/// Requested partition leaves a subset with fewer columns than allowed;
/// the caller must stop increasing N.
class PartitionTooFine : public Error {
public:
    using Error::Error;
};

/// Time stepping produced a nonfinite state.
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& msg, std::size_t step) : Error(msg), step(step) {}
    std::size_t step = 0;
};

} // namespace pdmd
