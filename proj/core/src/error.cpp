#include "infoveil/error.hpp"

namespace infoveil {

std::string_view toString(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyExpression: return "EmptyExpression";
        case ErrorCode::TooManyTerms: return "TooManyTerms";
        case ErrorCode::DuplicateTerm: return "DuplicateTerm";
        case ErrorCode::CatalogParseError: return "CatalogParseError";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::SourceUnavailable: return "SourceUnavailable";
        case ErrorCode::MalformedResponse: return "MalformedResponse";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::NonMonotonicDates: return "NonMonotonicDates";
        case ErrorCode::NegativeValue: return "NegativeValue";
        case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::EmptyPanel: return "EmptyPanel";
        case ErrorCode::EmptyWindow: return "EmptyWindow";
        case ErrorCode::AllQueriesDropped: return "AllQueriesDropped";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::ConstantColumn: return "ConstantColumn";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::BadIndex: return "BadIndex";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::InsufficientBaseline: return "InsufficientBaseline";
        case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
        case ErrorCode::ConstantSeries: return "ConstantSeries";
        case ErrorCode::NoValidLag: return "NoValidLag";
        case ErrorCode::EmptySeries: return "EmptySeries";
        case ErrorCode::UnknownGeography: return "UnknownGeography";
        case ErrorCode::BindFailure: return "BindFailure";
        case ErrorCode::StoreUnavailable: return "StoreUnavailable";
        case ErrorCode::VersionConflict: return "VersionConflict";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace infoveil
