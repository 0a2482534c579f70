#pragma once

#include <stdexcept>
#include <string>

namespace trimix {

// Error taxonomy shared by the whole library. The C API maps codes 1:1, so
// every throw site must pick the category a caller could act on.
enum class ErrorCode {
    invalid_arg = 1,
    shape = 2,
    io = 3,
    format = 4,
    numeric = 5,
    contract = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

struct InvalidArgError : Error {
    explicit InvalidArgError(const std::string& m) : Error(ErrorCode::invalid_arg, m) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& m) : Error(ErrorCode::shape, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorCode::io, m) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& m) : Error(ErrorCode::format, m) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& m) : Error(ErrorCode::numeric, m) {}
};
struct ContractError : Error {
    explicit ContractError(const std::string& m) : Error(ErrorCode::contract, m) {}
};

} // namespace trimix
