#pragma once

#include "fedsearch/query.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fedsearch {

using WirePairs = std::vector<std::pair<std::string, std::string>>;

/// Splits a URL query string into ordered keyword/value pairs, applying
/// percent-decoding and '+' to space. A leading '?' is skipped. Malformed
/// escapes are kept literally.
WirePairs parse_query_string(std::string_view query);

/// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string format_query_string(const WirePairs& pairs);

std::string percent_encode(std::string_view text);

struct DecodedRequest {
    QueryRequest request;
    std::vector<std::string> warnings; // ignored keywords
};

/// Keywords: `type` (LQF|RQF|SQF|SUGGEST) and `domain`, both required and
/// single; repeated `value` for LQF/RQF/SUGGEST; a single `id` for SQF.
/// Unknown keywords become warnings. The value mode is looked up in
/// `domains`. Throws RequestError for anything that cannot form a valid
/// request; the domain itself is not checked here.
DecodedRequest decode_request(std::string_view query, const DomainConfig& domains);

/// Canonical pair order: type, domain, then values (or id for SQF).
WirePairs request_pairs(const QueryRequest& request);
std::string encode_request(const QueryRequest& request);

} // namespace fedsearch
