#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lqexplore {

enum class ErrorKind {
    NotPositiveDefinite,
    NegativeWeight,
    BadHorizon,
    BadDimensions,
    BadCGamma,
    CholeskyFail,
    NonFinite,
    SingularRegression,
    DegenerateFit,
    ConfigError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace lqexplore
