#pragma once

#include <stdexcept>
#include <string>

namespace wgqed {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define WGQED_DEFINE_ERROR(Name, tag)                                       \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(tag, what) {}        \
    };

WGQED_DEFINE_ERROR(ConfigError, "configuration")
WGQED_DEFINE_ERROR(ResolutionError, "resolution")
WGQED_DEFINE_ERROR(InfeasibleWavepacket, "infeasible_wavepacket")
WGQED_DEFINE_ERROR(IntegrationError, "integration")
WGQED_DEFINE_ERROR(MissingSnapshot, "missing_snapshot")
WGQED_DEFINE_ERROR(EmptyResult, "empty_result")
WGQED_DEFINE_ERROR(BracketError, "bracket")
WGQED_DEFINE_ERROR(ExtrapolationError, "extrapolation")

#undef WGQED_DEFINE_ERROR

}  // namespace wgqed
