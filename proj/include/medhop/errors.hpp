#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace medhop {

// One error class per failure mode named in module contracts. Callers that
// need to branch on the failure kind check `kind()`; messages carry the
// offending field / digest / hop index as free text for logs and tests.
enum class ErrorKind {
    MalformedRecord,       // input is not a JSON object at all
    SchemaViolation,       // missing field, wrong type, or invariant breach
    InsufficientData,      // too few training examples per class
    DimensionMismatch,     // feature vector does not match the trained model
    BackendFailure,        // transport/HTTP error after retry
    QuotaExceeded,         // provider rate-limit signal, distinct so batches can defer
    TranscriptMiss,        // replay mode, unknown request digest
    MalformedPlan,         // decomposition output unusable after one retry
    MalformedAnswer,       // answer output unusable after one retry
    MissingPlaceholder,    // prompt rendered with an unbound placeholder
    UnverifiableAnswer,    // yes/no answer whose leading token is neither yes nor no
    PromptBudgetExceeded,  // rendered prompt over the configured character budget
    IoFailure,             // file system error
    MalformedTable,        // concept synonym table unreadable
    MalformedInput,        // prediction/gold file unreadable
    HopError,              // failure inside one reasoning hop, carries the hop index
    UsageError,            // bad CLI invocation
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    Error(ErrorKind kind, std::string message, int hop_index)
        : std::runtime_error(std::move(message)), kind_(kind), hop_index_(hop_index) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Valid only for ErrorKind::HopError; -1 otherwise.
    int hop_index() const noexcept { return hop_index_; }

private:
    ErrorKind kind_;
    int hop_index_ = -1;
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::MalformedRecord: return "MalformedRecord";
        case ErrorKind::SchemaViolation: return "SchemaViolation";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::BackendFailure: return "BackendFailure";
        case ErrorKind::QuotaExceeded: return "QuotaExceeded";
        case ErrorKind::TranscriptMiss: return "TranscriptMiss";
        case ErrorKind::MalformedPlan: return "MalformedPlan";
        case ErrorKind::MalformedAnswer: return "MalformedAnswer";
        case ErrorKind::MissingPlaceholder: return "MissingPlaceholder";
        case ErrorKind::UnverifiableAnswer: return "UnverifiableAnswer";
        case ErrorKind::PromptBudgetExceeded: return "PromptBudgetExceeded";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::MalformedTable: return "MalformedTable";
        case ErrorKind::MalformedInput: return "MalformedInput";
        case ErrorKind::HopError: return "HopError";
        case ErrorKind::UsageError: return "UsageError";
    }
    return "Unknown";
}

inline std::optional<ErrorKind> error_kind_from_name(std::string_view name) {
    static constexpr ErrorKind kAll[] = {
        ErrorKind::MalformedRecord,  ErrorKind::SchemaViolation,
        ErrorKind::InsufficientData, ErrorKind::DimensionMismatch,
        ErrorKind::BackendFailure,   ErrorKind::QuotaExceeded,
        ErrorKind::TranscriptMiss,   ErrorKind::MalformedPlan,
        ErrorKind::MalformedAnswer,  ErrorKind::MissingPlaceholder,
        ErrorKind::UnverifiableAnswer, ErrorKind::PromptBudgetExceeded,
        ErrorKind::IoFailure,        ErrorKind::MalformedTable,
        ErrorKind::MalformedInput,   ErrorKind::HopError,
        ErrorKind::UsageError,
    };
    for (ErrorKind k : kAll) {
        if (name == error_kind_name(k)) return k;
    }
    return std::nullopt;
}

}  // namespace medhop
