#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragshield {

enum class ErrorCode {
    DimensionMismatch,
    ZeroNormVector,
    DuplicateId,
    KTooLarge,
    SetTooSmall,
    NadvOutOfRange,
    InvalidConfig,
    InvalidSimilarity,
    ParseError,
    MissingEmbedding,
    ServiceUnreachable,
    MalformedResponse,
    NoGoldenPassage,
    GeometryInfeasible,
    LengthMismatch,
    Io,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can map them onto stable exit statuses.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ragshield
