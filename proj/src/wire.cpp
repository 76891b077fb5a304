#include "fedsearch/wire.hpp"

#include "fedsearch/error.hpp"

#include <cctype>

namespace fedsearch {

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '+') {
            out += ' ';
        } else if (c == '%' && i + 2 < s.size() &&
                   hex_value(s[i + 1]) >= 0 && hex_value(s[i + 2]) >= 0) {
            out += static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2]));
            i += 2;
        } else {
            out += c;
        }
    }
    return out;
}

bool unreserved(unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~';
}

} // namespace

std::string percent_encode(std::string_view text) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size());
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (unreserved(c)) {
            out += ch;
        } else {
            out += '%';
            out += kHex[c >> 4];
            out += kHex[c & 0xF];
        }
    }
    return out;
}

WirePairs parse_query_string(std::string_view query) {
    if (!query.empty() && query.front() == '?') query.remove_prefix(1);
    WirePairs pairs;
    while (!query.empty()) {
        const auto amp = query.find('&');
        const auto part = query.substr(0, amp);
        query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
        if (part.empty()) continue;
        const auto eq = part.find('=');
        if (eq == std::string_view::npos) {
            pairs.emplace_back(percent_decode(part), std::string{});
        } else {
            pairs.emplace_back(percent_decode(part.substr(0, eq)), percent_decode(part.substr(eq + 1)));
        }
    }
    return pairs;
}

std::string format_query_string(const WirePairs& pairs) {
    std::string out;
    for (const auto& [k, v] : pairs) {
        if (!out.empty()) out += '&';
        out += percent_encode(k);
        out += '=';
        out += percent_encode(v);
    }
    return out;
}

DecodedRequest decode_request(std::string_view query, const DomainConfig& domains) {
    const auto pairs = parse_query_string(query);
    DecodedRequest out;
    std::optional<std::string> type, domain;
    std::vector<std::string> values, ids;

    for (const auto& [k, v] : pairs) {
        if (k == "type" || k == "domain") {
            auto& slot = k == "type" ? type : domain;
            if (slot) throw RequestError("keyword '" + k + "' given more than once");
            slot = v;
        } else if (k == "value") {
            values.push_back(v);
        } else if (k == "id") {
            ids.push_back(v);
        } else {
            out.warnings.push_back("ignored unknown keyword '" + k + "'");
        }
    }

    if (!type) throw RequestError("missing keyword 'type'");
    if (!domain) throw RequestError("missing keyword 'domain'");
    const auto facility = parse_facility(*type);
    if (!facility) {
        throw RequestError("invalid type '" + *type + "', allowed: LQF, RQF, SQF, SUGGEST");
    }
    if (domain->empty()) throw RequestError("keyword 'domain' is empty");

    auto& req = out.request;
    req.facility = *facility;
    req.domain = std::move(*domain);
    req.value_mode = domains.mode_for(req.domain);

    if (req.facility == Facility::SQF) {
        if (!values.empty()) out.warnings.push_back("ignored 'value' keywords in SQF request");
        if (ids.size() != 1) throw RequestError("SQF takes exactly one 'id'");
        if (!is_valid_id_value(ids.front())) {
            throw RequestError("invalid id '" + ids.front() + "'");
        }
        req.values = std::move(ids);
        return out;
    }

    if (!ids.empty()) out.warnings.push_back("ignored 'id' keyword outside SQF");
    if (values.empty()) throw RequestError("at least one 'value' is required");
    for (const auto& v : values) {
        if (v.empty()) throw RequestError("empty 'value'");
    }
    if (req.facility == Facility::SUGGEST && values.size() != 1) {
        throw RequestError("SUGGEST takes exactly one 'value'");
    }
    req.values = std::move(values);
    return out;
}

WirePairs request_pairs(const QueryRequest& request) {
    WirePairs pairs;
    pairs.emplace_back("type", std::string(to_string(request.facility)));
    pairs.emplace_back("domain", request.domain);
    const char* keyword = request.facility == Facility::SQF ? "id" : "value";
    for (const auto& v : request.values) pairs.emplace_back(keyword, v);
    return pairs;
}

std::string encode_request(const QueryRequest& request) {
    return format_query_string(request_pairs(request));
}

} // namespace fedsearch
