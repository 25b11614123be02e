#pragma once

#include "medhop/types.hpp"

#include <string>

namespace medhop::trace {

// One QuestionResult per line, UTF-8, snake_case keys, keys in sorted order.
// serialize_result never emits a raw newline, so concatenated records form a
// valid JSON-Lines file. AnswerPair fields map to keys "short" and "long".
std::string serialize_result(const QuestionResult& r);

// Throws Error{MalformedRecord} for non-JSON input and Error{SchemaViolation}
// naming the offending field for missing/ill-typed fields or invariant
// breaches (including hop index contiguity).
QuestionResult deserialize_result(const std::string& record);

}  // namespace medhop::trace
