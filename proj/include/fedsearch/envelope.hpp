#pragma once

#include "fedsearch/federation.hpp"
#include "fedsearch/query.hpp"
#include "fedsearch/wire.hpp"

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fedsearch {

enum class ErrorCode {
    DomainUnknown, ///< DOMAIN_UNKNOWN
    BadRequest,    ///< BAD_REQUEST
    Internal,      ///< INTERNAL
    Forbidden,     ///< FORBIDDEN (admin secret missing or wrong)
    Conflict,      ///< CONFLICT (admin mutation rejected by integrity checks)
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> parse_error_code(std::string_view text);
int http_status(ErrorCode code);

struct ResultsBody {
    std::vector<Entry> hits;
    bool operator==(const ResultsBody&) const = default;
};

struct CountBody {
    std::size_t count = 0;
    bool operator==(const CountBody&) const = default;
};

struct SuggestionsBody {
    std::vector<std::string> words;
    bool operator==(const SuggestionsBody&) const = default;
};

struct RemoteBody {
    RemoteCountSet counts;
    bool operator==(const RemoteBody&) const = default;
};

struct AckBody {
    std::string action; // "upsert" | "remove"
    std::string ref;    // Collection:id
    bool changed = false;
    bool operator==(const AckBody&) const = default;
};

struct ErrorBody {
    ErrorCode code = ErrorCode::Internal;
    std::string message;
    bool operator==(const ErrorBody&) const = default;
};

using EnvelopeBody =
    std::variant<ResultsBody, CountBody, SuggestionsBody, RemoteBody, AckBody, ErrorBody>;

/// One reply of a node: the keyword/value couples of the query followed by
/// the facility-specific body.
struct ResponseEnvelope {
    WirePairs query;
    EnvelopeBody body;

    bool operator==(const ResponseEnvelope&) const = default;
};

ResponseEnvelope error_envelope(WirePairs query, ErrorCode code, std::string message);

// Canonical XML: UTF-8, LF, two-space indent, attributes in fixed order.
std::string encode_xml(const ResponseEnvelope& envelope);
nlohmann::ordered_json encode_json(const ResponseEnvelope& envelope);
/// Plain debug page, not meant for machines.
std::string encode_html(const ResponseEnvelope& envelope);

/// Inverse mappings, used by clients and by the XML/JSON equivalence
/// tests. Throw ParseError on structurally invalid input.
ResponseEnvelope decode_xml(std::string_view document);
ResponseEnvelope decode_json(const nlohmann::json& document);

/// Entry as it appears inside `<results>`: the canonical entry element
/// renamed to `entry` with a leading `collection` attribute.
xml::Element entry_result_element(const Entry& entry);
Entry entry_from_result_element(const xml::Element& element, const std::string& source);

nlohmann::ordered_json entry_to_json(const Entry& entry);
Entry entry_from_json(const nlohmann::json& value);

/// Count carried by LQF/SQF (hit count), RQF (count) and SUGGEST (list
/// length) envelopes; nullopt for the rest.
std::optional<std::size_t> envelope_count(const ResponseEnvelope& envelope);

} // namespace fedsearch
