#include "fedsearch/query.hpp"

#include "fedsearch/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace fedsearch {

namespace {

char fold(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), fold);
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool free_text_match(const Entry& entry, const std::vector<std::string>& values) {
    const auto texts = text_fields(entry);
    return std::all_of(values.begin(), values.end(), [&](const std::string& v) {
        return std::any_of(texts.begin(), texts.end(),
                           [&](std::string_view t) { return contains_ignore_case(t, v); });
    });
}

bool designated_field_match(const Entry& entry, std::string_view field, std::string_view value) {
    const auto* r = std::get_if<ResourceDescriptor>(&entry);
    if (r == nullptr) return false;
    for (const auto& [_, fields] : r->sections) {
        for (const auto& f : fields) {
            if (equals_ignore_case(f.name, field) && equals_ignore_case(f.value, value)) {
                return true;
            }
        }
    }
    return false;
}

} // namespace

std::string_view to_string(Facility facility) {
    switch (facility) {
    case Facility::LQF: return "LQF";
    case Facility::RQF: return "RQF";
    case Facility::SQF: return "SQF";
    case Facility::SUGGEST: return "SUGGEST";
    }
    return "LQF";
}

std::optional<Facility> parse_facility(std::string_view text) {
    for (auto f : {Facility::LQF, Facility::RQF, Facility::SQF, Facility::SUGGEST}) {
        if (to_string(f) == text) return f;
    }
    return std::nullopt;
}

bool contains_ignore_case(std::string_view haystack, std::string_view needle) {
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                       [](char a, char b) { return fold(a) == fold(b); }) != haystack.end();
}

bool equals_ignore_case(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return fold(x) == fold(y); });
}

// --- DomainConfig --------------------------------------------------------

DomainConfig::DomainConfig(std::vector<Domain> domains) : domains_(std::move(domains)) {}

DomainConfig DomainConfig::parse(std::string_view text, const std::string& source) {
    std::vector<Domain> domains;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;

        const auto colon = line.find(':');
        if (colon == std::string_view::npos) {
            throw ParseError(source, line_no, "expected 'domain: value1|value2|...'");
        }
        Domain d;
        d.name = std::string(trim(line.substr(0, colon)));
        if (d.name.empty() || !is_valid_field_name(d.name)) {
            throw ParseError(source, line_no, "invalid domain name '" + d.name + "'");
        }
        if (parse_collection_name(d.name)) {
            throw ParseError(source, line_no, "'" + d.name + "' is a collection, not a predefined domain");
        }
        for (const auto& existing : domains) {
            if (existing.name == d.name) {
                throw ParseError(source, line_no, "duplicate domain '" + d.name + "'");
            }
        }
        auto rest = line.substr(colon + 1);
        while (true) {
            const auto bar = rest.find('|');
            auto value = trim(rest.substr(0, bar));
            if (value.empty()) {
                throw ParseError(source, line_no, "empty value in domain '" + d.name + "'");
            }
            d.values.emplace_back(value);
            if (bar == std::string_view::npos) break;
            rest = rest.substr(bar + 1);
        }
        domains.push_back(std::move(d));
    }
    return DomainConfig(std::move(domains));
}

DomainConfig DomainConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string DomainConfig::serialize() const {
    std::string out;
    for (const auto& d : domains_) {
        out += d.name + ": ";
        for (std::size_t i = 0; i < d.values.size(); ++i) {
            if (i > 0) out += '|';
            out += d.values[i];
        }
        out += '\n';
    }
    return out;
}

const DomainConfig::Domain* DomainConfig::find(std::string_view name) const {
    for (const auto& d : domains_) {
        if (d.name == name) return &d;
    }
    return nullptr;
}

bool DomainConfig::is_known(std::string_view domain) const {
    return parse_collection_name(domain).has_value() || find(domain) != nullptr;
}

ValueMode DomainConfig::mode_for(std::string_view domain) const {
    return find(domain) != nullptr ? ValueMode::Predefined : ValueMode::FreeText;
}

// --- facilities ----------------------------------------------------------

LocalResultSet local_query(const Catalog& catalog, const DomainConfig& domains,
                           const QueryRequest& request) {
    if (request.facility != Facility::LQF) {
        throw RequestError("local query requires facility LQF, got " +
                           std::string(to_string(request.facility)));
    }
    if (request.values.empty()) throw RequestError("at least one value is required");
    for (const auto& v : request.values) {
        if (v.empty()) throw RequestError("search values must not be empty");
    }

    LocalResultSet out;
    out.echo = request;

    if (auto collection = parse_collection_name(request.domain)) {
        for (const auto& e : catalog.entries(*collection)) {
            if (free_text_match(e, request.values)) out.hits.push_back(e);
        }
    } else if (const auto* domain = domains.find(request.domain)) {
        if (request.values.size() != 1) {
            throw RequestError("domain '" + domain->name + "' takes exactly one predefined value");
        }
        const auto& value = request.values.front();
        const bool listed = std::any_of(domain->values.begin(), domain->values.end(),
                                        [&](const std::string& v) { return equals_ignore_case(v, value); });
        if (!listed) {
            throw RequestError("'" + value + "' is not a predefined value of domain '" +
                               domain->name + "'");
        }
        for (const auto& e : catalog.entries(CollectionName::Resource)) {
            if (designated_field_match(e, domain->name, value)) out.hits.push_back(e);
        }
    } else {
        throw DomainError("unknown search domain '" + request.domain + "'");
    }
    out.count = out.hits.size();
    return out;
}

std::vector<std::string> suggest(const Catalog& catalog, std::string_view domain,
                                 std::string_view fragment, SuggestMatch match) {
    const auto collection = parse_collection_name(domain);
    const auto needle = lowercase(trim(fragment));
    if (!collection || needle.empty()) return {};

    const auto& words = catalog.word_index(*collection);
    std::vector<std::string> out;
    if (match == SuggestMatch::WordPrefix) {
        for (auto it = words.lower_bound(needle); it != words.end(); ++it) {
            if (it->first.compare(0, needle.size(), needle) != 0) break;
            out.push_back(it->first);
            if (out.size() == kMaxSuggestions) break;
        }
    } else {
        for (const auto& [word, _] : words) {
            if (word.find(needle) != std::string::npos) {
                out.push_back(word);
                if (out.size() == kMaxSuggestions) break;
            }
        }
    }
    return out;
}

LocalResultSet secondary_query(const Catalog& catalog, const EntryId& id) {
    LocalResultSet out;
    out.echo.facility = Facility::SQF;
    out.echo.domain = std::string(to_string(id.collection));
    out.echo.values = {id.value};
    if (const auto* e = lookup_by_id(catalog, id)) out.hits.push_back(*e);
    out.count = out.hits.size();
    return out;
}

} // namespace fedsearch
