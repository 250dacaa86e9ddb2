#include "lqexplore/errors.hpp"

namespace lqexplore {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::BadHorizon: return "BadHorizon";
    case ErrorKind::BadDimensions: return "BadDimensions";
    case ErrorKind::BadCGamma: return "BadCGamma";
    case ErrorKind::CholeskyFail: return "CholeskyFail";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::SingularRegression: return "SingularRegression";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
{
}

} // namespace lqexplore
