#pragma once

#include <stdexcept>
#include <string>

namespace errdecode {

/// Broad failure classes. The CLI maps each to a distinct exit code.
enum class ErrorKind {
    InvalidArgument = 2,
    Format = 3,
    Data = 4,
    Numerical = 5,
    Io = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) { return {ErrorKind::InvalidArgument, what}; }
inline Error format_error(const std::string& what) { return {ErrorKind::Format, what}; }
inline Error data_error(const std::string& what) { return {ErrorKind::Data, what}; }
inline Error numerical_error(const std::string& what) { return {ErrorKind::Numerical, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::Io, what}; }

}  // namespace errdecode
