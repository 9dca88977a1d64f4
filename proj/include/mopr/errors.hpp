#pragma once

#include <stdexcept>
#include <string>

namespace mopr {

// Base class for all library errors. `kind()` is a stable machine-readable
// tag; the CLI prints it verbatim in its single-line error format.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define MOPR_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                   \
    public:                                                       \
        explicit Name(const std::string& msg) : Error(#Name, msg) {} \
    }

MOPR_DEFINE_ERROR(DegenerateInput);
MOPR_DEFINE_ERROR(ShapeError);
MOPR_DEFINE_ERROR(ParseError);
MOPR_DEFINE_ERROR(VersionError);
MOPR_DEFINE_ERROR(InvalidFps);
MOPR_DEFINE_ERROR(ConfigError);
MOPR_DEFINE_ERROR(DataError);
MOPR_DEFINE_ERROR(MissingGrad);
MOPR_DEFINE_ERROR(UnknownParam);
MOPR_DEFINE_ERROR(MissingCheckpoint);
MOPR_DEFINE_ERROR(SamePriorError);
MOPR_DEFINE_ERROR(InsufficientSamples);
MOPR_DEFINE_ERROR(InsufficientFrames);
MOPR_DEFINE_ERROR(InsufficientContext);

#undef MOPR_DEFINE_ERROR

}  // namespace mopr
