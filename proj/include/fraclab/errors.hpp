#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

/// Base of every error raised by the library. `kind()` is the stable error
/// name (e.g. "OverlapError") used in CLI messages and tests.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define FRACLAB_DEFINE_ERROR(Name)                                             \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& message) : Error(#Name, message) {}   \
    }

FRACLAB_DEFINE_ERROR(ConfigError);
FRACLAB_DEFINE_ERROR(OverlapError);
FRACLAB_DEFINE_ERROR(ResolutionError);
FRACLAB_DEFINE_ERROR(SupportError);
FRACLAB_DEFINE_ERROR(ZeroDataError);
FRACLAB_DEFINE_ERROR(DomainError);
FRACLAB_DEFINE_ERROR(GeometryError);
FRACLAB_DEFINE_ERROR(EigenvalueError);
FRACLAB_DEFINE_ERROR(SingularSolveError);
FRACLAB_DEFINE_ERROR(EmptyRegionError);
FRACLAB_DEFINE_ERROR(ZeroMassError);
FRACLAB_DEFINE_ERROR(DegenerateError);
FRACLAB_DEFINE_ERROR(DiscrepancyError);
FRACLAB_DEFINE_ERROR(AllExcludedError);

#undef FRACLAB_DEFINE_ERROR

}  // namespace fraclab
