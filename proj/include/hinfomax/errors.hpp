#pragma once

#include <stdexcept>
#include <string>

namespace hinfomax {

/// Broad failure classes; the CLI maps these onto process exit codes.
enum class ErrorCategory { usage, data, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

// Data-side failures: unreadable or inconsistent inputs.
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorCategory::data, w) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& w) : Error(ErrorCategory::data, w) {}
};
struct LengthError : Error {
    explicit LengthError(const std::string& w) : Error(ErrorCategory::data, w) {}
};
struct GeometryError : Error {
    explicit GeometryError(const std::string& w) : Error(ErrorCategory::data, w) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& w) : Error(ErrorCategory::data, w) {}
};

// Invalid configuration supplied by the caller.
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorCategory::usage, w) {}
};

// Numerical failures raised by the algorithms themselves.
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorCategory::numerical, w) {}
};
struct ConditioningError : Error {
    explicit ConditioningError(const std::string& w) : Error(ErrorCategory::numerical, w) {}
};
struct SaturationError : Error {
    explicit SaturationError(const std::string& w) : Error(ErrorCategory::numerical, w) {}
};
struct RankError : Error {
    explicit RankError(const std::string& w) : Error(ErrorCategory::numerical, w) {}
};
struct DegenerateError : Error {
    explicit DegenerateError(const std::string& w) : Error(ErrorCategory::numerical, w) {}
};

/// Raised when backtracking exhausts its shrink budget without a decrease.
struct StallError : Error {
    StallError(const std::string& w, double objective)
        : Error(ErrorCategory::numerical, w), objective(objective) {}
    double objective;
};

/// Exit status for a category: 2 usage, 3 data, 4 numerical.
int exit_code(ErrorCategory category) noexcept;

}  // namespace hinfomax
