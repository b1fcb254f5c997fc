#pragma once

#include <stdexcept>
#include <string>

namespace sara {

// Every failure the library can raise, one code per distinct contract error.
// Codes group into three classes that the CLI maps onto exit statuses:
// usage (1), data (2), backend/transport (3).
enum class ErrCode {
    // data / domain
    EmptyCorpus,
    UnknownChunk,
    EmptyTrainingCorpus,
    EmptyCandidate,
    EmptySelection,
    CsiFilterExhausted,
    DimMismatch,
    ZeroVector,
    ProjectionOverflow,
    BudgetInfeasible,
    UnknownVersion,
    MalformedSegment,
    RaggedVectors,
    DuplicateId,
    MissingManifest,
    CorruptManifest,
    VersionMismatch,
    MissingFile,
    CorruptFile,
    BadConfig,
    Io,
    // usage
    BadArgument,
    // backend
    Transport,
    HttpStatus,
    MalformedResponse,
    EmptyTokenList,
    RemoteDimMismatch,
};

class Error : public std::runtime_error {
public:
    Error(ErrCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrCode code() const { return code_; }

private:
    ErrCode code_;
};

// Exit status class for a code: 1 usage, 2 data, 3 backend.
inline int exit_status(ErrCode code) {
    switch (code) {
        case ErrCode::BadArgument:
            return 1;
        case ErrCode::Transport:
        case ErrCode::HttpStatus:
        case ErrCode::MalformedResponse:
        case ErrCode::EmptyTokenList:
        case ErrCode::RemoteDimMismatch:
            return 3;
        default:
            return 2;
    }
}

}  // namespace sara
