#pragma once

#include <stdexcept>
#include <string>

namespace oledmag {

// Failure categories. The CLI maps these onto exit codes and the C API onto
// omg_status values.
enum class ErrorKind {
    usage,      // bad argument, bad shape, out-of-range option
    domain,     // mathematically invalid input (negative field, point inside magnet)
    data,       // corrupt or unparsable file contents
    numerical,  // non-convergence beyond what the caller accepts
    io,         // file could not be opened / written
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& w) : Error(ErrorKind::usage, w) {}
};
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};
struct DataError : Error {
    explicit DataError(const std::string& w) : Error(ErrorKind::data, w) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(ErrorKind::numerical, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

}  // namespace oledmag
