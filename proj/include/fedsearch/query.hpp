#pragma once

#include "fedsearch/catalog_store.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fedsearch {

enum class Facility { LQF, RQF, SQF, SUGGEST };

std::string_view to_string(Facility facility);
std::optional<Facility> parse_facility(std::string_view text);

enum class ValueMode { FreeText, Predefined };

/// A decoded search. For SQF the single value is the entry ID and `domain`
/// names its collection; for SUGGEST the single value is the fragment.
struct QueryRequest {
    Facility facility = Facility::LQF;
    std::string domain;
    std::vector<std::string> values;
    ValueMode value_mode = ValueMode::FreeText;

    bool operator==(const QueryRequest&) const = default;
};

/// Predefined-value domains (mission, target, ...). Each one is matched
/// against the resource section fields carrying the domain's name.
///
/// File format, UTF-8, one domain per line:
///
///     domain: value1|value2|...
///
/// Blank lines and lines starting with '#' are ignored. Values are trimmed.
class DomainConfig {
public:
    struct Domain {
        std::string name;
        std::vector<std::string> values;

        bool operator==(const Domain&) const = default;
    };

    DomainConfig() = default;
    explicit DomainConfig(std::vector<Domain> domains);

    static DomainConfig parse(std::string_view text, const std::string& source);
    static DomainConfig load(const std::filesystem::path& path);
    std::string serialize() const;

    const std::vector<Domain>& domains() const noexcept { return domains_; }
    const Domain* find(std::string_view name) const;

    /// Collections are free-text domains, configured names are predefined.
    bool is_known(std::string_view domain) const;
    ValueMode mode_for(std::string_view domain) const;

    bool operator==(const DomainConfig&) const = default;

private:
    std::vector<Domain> domains_;
};

struct LocalResultSet {
    QueryRequest echo;
    std::vector<Entry> hits;
    std::size_t count = 0;

    bool operator==(const LocalResultSet&) const = default;
};

/// ASCII case-insensitive substring test.
bool contains_ignore_case(std::string_view haystack, std::string_view needle);
bool equals_ignore_case(std::string_view a, std::string_view b);

/// Free-text domains: an entry matches when every value occurs, ignoring
/// ASCII case, in at least one of its text fields. Predefined domains: a
/// resource matches when one of its section fields named after the domain
/// equals the single selected value, ignoring ASCII case. Hits keep
/// document order.
///
/// Throws RequestError (wrong facility, no values, empty value, value not
/// in the predefined list) and DomainError (unknown domain).
LocalResultSet local_query(const Catalog& catalog, const DomainConfig& domains,
                           const QueryRequest& request);

enum class SuggestMatch {
    WordPrefix, ///< indexed words starting with the fragment
    Substring,  ///< indexed words containing the fragment
};

inline constexpr std::size_t kMaxSuggestions = 20;

/// Distinct lowercase words from the name/description index of a
/// collection domain, sorted, at most kMaxSuggestions. Non-collection
/// domains and blank fragments yield an empty list.
std::vector<std::string> suggest(const Catalog& catalog, std::string_view domain,
                                 std::string_view fragment,
                                 SuggestMatch match = SuggestMatch::WordPrefix);

/// ID drill-down: zero or one hit, wrapped in the LQF result envelope.
LocalResultSet secondary_query(const Catalog& catalog, const EntryId& id);

} // namespace fedsearch
