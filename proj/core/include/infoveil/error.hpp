#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace infoveil {

enum class ErrorCode {
    // query-model
    EmptyExpression,
    TooManyTerms,
    DuplicateTerm,
    CatalogParseError,
    InvariantViolation,
    // ingest
    SourceUnavailable,
    MalformedResponse,
    RateLimited,
    SchemaMismatch,
    NonMonotonicDates,
    NegativeValue,
    CorruptSnapshot,
    NotFound,
    // rsv
    EmptyPanel,
    // analytics
    EmptyWindow,
    AllQueriesDropped,
    OutOfRange,
    ConstantColumn,
    KTooLarge,
    BadIndex,
    // leadlag
    TooShort,
    InsufficientBaseline,
    InsufficientOverlap,
    ConstantSeries,
    NoValidLag,
    EmptySeries,
    // geo
    UnknownGeography,
    // service
    BindFailure,
    StoreUnavailable,
    VersionConflict,
    // shared
    InvalidArgument,
    IoError,
};

std::string_view toString(ErrorCode code) noexcept;

/// The single exception type thrown by the library. `code()` is stable and
/// machine-readable; `detail()` carries optional context such as a line
/// number or the offending query id.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string detail = {})
        : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace infoveil
