#include "fedsearch/catalog_model.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace fedsearch {

namespace {

constexpr std::array<std::string_view, 11> kCollectionNames = {
    "Activity", "Country", "Institute", "Keyword", "KeywordType", "N2dwg",
    "Node",     "PDSnode", "Person",    "Resource", "ScienceCase",
};

constexpr std::array<std::string_view, 8> kSectionNames = {
    "General Info", "Resource Info", "Responsibilities", "Related Persons",
    "URLs",         "Restrictions",  "Biblio Ref.",      "Related Staff",
};

template <typename... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void push_field_values(std::vector<std::string_view>& out, const std::vector<Field>& fields) {
    for (const auto& f : fields) out.push_back(f.value);
}

void push_field_refs(std::vector<EntryId>& out, const std::vector<Field>& fields) {
    for (const auto& f : fields) {
        if (f.ref) out.push_back(*f.ref);
    }
}

} // namespace

std::string_view to_string(CollectionName name) {
    return kCollectionNames[static_cast<std::size_t>(name)];
}

std::optional<CollectionName> parse_collection_name(std::string_view text) {
    for (std::size_t i = 0; i < kCollectionNames.size(); ++i) {
        if (kCollectionNames[i] == text) return kAllCollections[i];
    }
    return std::nullopt;
}

std::string_view to_string(SectionName name) {
    return kSectionNames[static_cast<std::size_t>(name)];
}

std::optional<SectionName> parse_section_name(std::string_view text) {
    for (std::size_t i = 0; i < kSectionNames.size(); ++i) {
        if (kSectionNames[i] == text) return kAllSections[i];
    }
    return std::nullopt;
}

bool is_valid_id_value(std::string_view value) {
    if (value.empty()) return false;
    return std::none_of(value.begin(), value.end(), [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '=' || c == '&';
    });
}

std::string format_ref(const EntryId& id) {
    std::string out(to_string(id.collection));
    out += ':';
    out += id.value;
    return out;
}

std::optional<EntryId> parse_ref(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto collection = parse_collection_name(text.substr(0, colon));
    if (!collection) return std::nullopt;
    auto value = text.substr(colon + 1);
    if (!is_valid_id_value(value)) return std::nullopt;
    return EntryId{*collection, std::string(value)};
}

const EntryId& entry_id(const Entry& entry) {
    return std::visit([](const auto& e) -> const EntryId& { return e.id; }, entry);
}

EntryKind kind_for(CollectionName collection) {
    switch (collection) {
    case CollectionName::Resource: return EntryKind::Resource;
    case CollectionName::Person: return EntryKind::Person;
    case CollectionName::Keyword: return EntryKind::Keyword;
    default: return EntryKind::Generic;
    }
}

EntryKind kind_of(const Entry& entry) {
    return std::visit(overloaded{
                          [](const ResourceDescriptor&) { return EntryKind::Resource; },
                          [](const PersonDescriptor&) { return EntryKind::Person; },
                          [](const KeywordEntry&) { return EntryKind::Keyword; },
                          [](const GenericEntry&) { return EntryKind::Generic; },
                      },
                      entry);
}

std::vector<std::string_view> text_fields(const Entry& entry) {
    std::vector<std::string_view> out;
    std::visit(overloaded{
                   [&](const ResourceDescriptor& r) {
                       out.push_back(r.name);
                       out.push_back(r.short_description);
                       if (r.url) out.push_back(*r.url);
                       out.push_back(r.long_description);
                       for (const auto& [_, fields] : r.sections) push_field_values(out, fields);
                   },
                   [&](const PersonDescriptor& p) {
                       out.push_back(p.name);
                       push_field_values(out, p.free_fields);
                   },
                   [&](const KeywordEntry& k) { out.push_back(k.name); },
                   [&](const GenericEntry& g) { push_field_values(out, g.fields); },
               },
               entry);
    return out;
}

std::vector<std::string_view> suggestion_fields(const Entry& entry) {
    std::vector<std::string_view> out;
    auto named = [&](const std::vector<Field>& fields) {
        for (const auto& f : fields) {
            if (f.name == "name" || f.name == "description") out.push_back(f.value);
        }
    };
    std::visit(overloaded{
                   [&](const ResourceDescriptor& r) {
                       out.push_back(r.name);
                       out.push_back(r.short_description);
                   },
                   [&](const PersonDescriptor& p) {
                       out.push_back(p.name);
                       named(p.free_fields);
                   },
                   [&](const KeywordEntry& k) { out.push_back(k.name); },
                   [&](const GenericEntry& g) { named(g.fields); },
               },
               entry);
    return out;
}

std::string_view display_name(const Entry& entry) {
    return std::visit(overloaded{
                          [](const ResourceDescriptor& r) -> std::string_view { return r.name; },
                          [](const PersonDescriptor& p) -> std::string_view { return p.name; },
                          [](const KeywordEntry& k) -> std::string_view { return k.name; },
                          [](const GenericEntry& g) -> std::string_view {
                              for (const auto& f : g.fields) {
                                  if (f.name == "name") return f.value;
                              }
                              return {};
                          },
                      },
                      entry);
}

std::vector<EntryId> references(const Entry& entry) {
    std::vector<EntryId> out;
    std::visit(overloaded{
                   [&](const ResourceDescriptor& r) {
                       out.insert(out.end(), r.links.begin(), r.links.end());
                       for (const auto& [_, fields] : r.sections) push_field_refs(out, fields);
                   },
                   [&](const PersonDescriptor& p) {
                       if (p.institute) out.push_back(*p.institute);
                       push_field_refs(out, p.free_fields);
                   },
                   [&](const KeywordEntry& k) { out.push_back(k.type_id); },
                   [&](const GenericEntry& g) { push_field_refs(out, g.fields); },
               },
               entry);
    return out;
}

bool is_valid_field_name(std::string_view name) {
    if (name.empty()) return false;
    const auto first = static_cast<unsigned char>(name.front());
    if (!(std::isalpha(first) || first == '_')) return false;
    return std::all_of(name.begin() + 1, name.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || c == '_' || c == '-' || c == '.';
    });
}

bool is_absolute_url(std::string_view url) {
    const auto sep = url.find("://");
    if (sep == std::string_view::npos || sep == 0) return false;
    const auto scheme = url.substr(0, sep);
    if (!std::isalpha(static_cast<unsigned char>(scheme.front()))) return false;
    const bool scheme_ok = std::all_of(scheme.begin(), scheme.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
    });
    const auto rest = url.substr(sep + 3);
    const bool rest_ok =
        !rest.empty() && rest.front() != '/' &&
        std::none_of(rest.begin(), rest.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    return scheme_ok && rest_ok;
}

std::string to_string(const Violation& violation) {
    std::string out(to_string(violation.collection));
    out += ' ';
    out += violation.entry.empty() ? "-" : violation.entry;
    out += ' ';
    out += violation.rule;
    if (!violation.detail.empty()) {
        out += ": ";
        out += violation.detail;
    }
    return out;
}

std::vector<Violation> validate_catalog(const RawCatalog& catalog) {
    std::vector<Violation> out;
    std::unordered_set<EntryId> known;
    for (const auto& [collection, entries] : catalog) {
        for (const auto& e : entries) known.insert(entry_id(e));
    }

    for (const auto& [collection, entries] : catalog) {
        std::unordered_map<std::string, std::size_t> seen_ids;
        std::unordered_map<std::string, std::string> resource_names;
        for (const auto& e : entries) {
            const auto& id = entry_id(e);
            auto report = [&](std::string rule, std::string detail) {
                out.push_back({collection, id.value, std::move(rule), std::move(detail)});
            };

            if (id.collection != collection) {
                report("wrong-collection", "entry id belongs to " +
                                               std::string(to_string(id.collection)));
            }
            if (kind_of(e) != kind_for(collection)) {
                report("wrong-kind", "entry shape does not match its collection");
            }
            if (!is_valid_id_value(id.value)) report("invalid-id", "'" + id.value + "'");
            if (++seen_ids[id.value] == 2) report("duplicate-id", id.value);

            auto check_fields = [&](const std::vector<Field>& fields, bool element_names) {
                for (const auto& f : fields) {
                    if (element_names ? !is_valid_field_name(f.name) : f.name.empty()) {
                        report("invalid-field-name", "'" + f.name + "'");
                    }
                }
            };

            std::visit(overloaded{
                           [&](const ResourceDescriptor& r) {
                               if (r.name.empty()) report("empty-name", "resource name is empty");
                               auto [it, fresh] = resource_names.emplace(r.name, id.value);
                               if (!fresh && it->second != id.value) {
                                   report("duplicate-resource-name",
                                          "'" + r.name + "' also used by " + it->second);
                               }
                               if (r.url && !is_absolute_url(*r.url)) {
                                   report("invalid-url", *r.url);
                               }
                               for (const auto& [_, fields] : r.sections) check_fields(fields, false);
                           },
                           [&](const PersonDescriptor& p) {
                               if (p.institute &&
                                   p.institute->collection != CollectionName::Institute) {
                                   report("wrong-link-collection",
                                          "institute points at " + format_ref(*p.institute));
                               }
                               check_fields(p.free_fields, true);
                               for (const auto& f : p.free_fields) {
                                   if (f.name == "name" || f.name == "institute") {
                                       report("invalid-field-name",
                                              "'" + f.name + "' is reserved in Person");
                                   }
                               }
                           },
                           [&](const KeywordEntry& k) {
                               if (k.type_id.collection != CollectionName::KeywordType) {
                                   report("wrong-link-collection",
                                          "type points at " + format_ref(k.type_id));
                               }
                           },
                           [&](const GenericEntry& g) { check_fields(g.fields, true); },
                       },
                       e);

            for (const auto& ref : references(e)) {
                if (!known.contains(ref)) report("dangling-link", format_ref(ref));
            }
        }
    }
    return out;
}

} // namespace fedsearch
