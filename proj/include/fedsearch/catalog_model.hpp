#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fedsearch {

/// The eleven catalog collections. Enumerator order is the canonical
/// collection order used for document order across the whole catalog.
enum class CollectionName {
    Activity,
    Country,
    Institute,
    Keyword,
    KeywordType,
    N2dwg,
    Node,
    PDSnode,
    Person,
    Resource,
    ScienceCase,
};

inline constexpr std::array<CollectionName, 11> kAllCollections = {
    CollectionName::Activity,    CollectionName::Country, CollectionName::Institute,
    CollectionName::Keyword,     CollectionName::KeywordType, CollectionName::N2dwg,
    CollectionName::Node,        CollectionName::PDSnode, CollectionName::Person,
    CollectionName::Resource,    CollectionName::ScienceCase,
};

std::string_view to_string(CollectionName name);
std::optional<CollectionName> parse_collection_name(std::string_view text);

/// Result-card tabs of a resource, in display order.
enum class SectionName {
    GeneralInfo,
    ResourceInfo,
    Responsibilities,
    RelatedPersons,
    Urls,
    Restrictions,
    BiblioRef,
    RelatedStaff,
};

inline constexpr std::array<SectionName, 8> kAllSections = {
    SectionName::GeneralInfo,  SectionName::ResourceInfo, SectionName::Responsibilities,
    SectionName::RelatedPersons, SectionName::Urls,       SectionName::Restrictions,
    SectionName::BiblioRef,    SectionName::RelatedStaff,
};

std::string_view to_string(SectionName name);
std::optional<SectionName> parse_section_name(std::string_view text);

struct EntryId {
    CollectionName collection = CollectionName::Resource;
    std::string value;

    auto operator<=>(const EntryId&) const = default;
    bool operator==(const EntryId&) const = default;
};

/// Non-empty, no whitespace, no '=' or '&'.
bool is_valid_id_value(std::string_view value);

/// "Collection:value".
std::string format_ref(const EntryId& id);
std::optional<EntryId> parse_ref(std::string_view text);

/// A named display value. `ref` marks values that drill down to another
/// entry (the result card's question-mark button).
struct Field {
    std::string name;
    std::string value;
    std::optional<EntryId> ref;

    bool operator==(const Field&) const = default;
};

struct ResourceDescriptor {
    EntryId id;
    std::string name;
    std::string short_description;
    std::optional<std::string> url;
    std::string long_description;
    std::map<SectionName, std::vector<Field>> sections;
    std::vector<EntryId> links;

    bool operator==(const ResourceDescriptor&) const = default;
};

struct PersonDescriptor {
    EntryId id;
    std::string name;
    std::optional<EntryId> institute;
    std::vector<Field> free_fields;

    bool operator==(const PersonDescriptor&) const = default;
};

struct KeywordEntry {
    EntryId id;
    std::string name;
    EntryId type_id;

    bool operator==(const KeywordEntry&) const = default;
};

/// Flat entry used by every collection without a dedicated descriptor.
struct GenericEntry {
    EntryId id;
    std::vector<Field> fields;

    bool operator==(const GenericEntry&) const = default;
};

using Entry = std::variant<ResourceDescriptor, PersonDescriptor, KeywordEntry, GenericEntry>;

const EntryId& entry_id(const Entry& entry);
inline CollectionName entry_collection(const Entry& entry) { return entry_id(entry).collection; }

enum class EntryKind { Resource, Person, Keyword, Generic };
EntryKind kind_for(CollectionName collection);
EntryKind kind_of(const Entry& entry);

/// Every text value of the entry (names, descriptions, URL, field values),
/// in document order. IDs and attribute-only data are excluded.
std::vector<std::string_view> text_fields(const Entry& entry);

/// The name and description values feeding the suggestion index.
std::vector<std::string_view> suggestion_fields(const Entry& entry);

/// The display name (empty for generic entries without a `name` field).
std::string_view display_name(const Entry& entry);

/// Every EntryId the entry points at: links, field refs, institute, type.
std::vector<EntryId> references(const Entry& entry);

/// True for names usable as XML element names of free fields.
bool is_valid_field_name(std::string_view name);

bool is_absolute_url(std::string_view url);

struct NodeDescriptor {
    std::string name;
    std::string base_url;

    bool operator==(const NodeDescriptor&) const = default;
};

/// Unindexed catalog contents, as read from disk or generated in tests.
using RawCatalog = std::map<CollectionName, std::vector<Entry>>;

struct Violation {
    CollectionName collection;
    std::string entry;
    std::string rule;
    std::string detail;

    bool operator==(const Violation&) const = default;
};

std::string to_string(const Violation& violation);

/// Checks every model invariant. Violations are returned, never thrown.
std::vector<Violation> validate_catalog(const RawCatalog& catalog);

} // namespace fedsearch

template <>
struct std::hash<fedsearch::EntryId> {
    std::size_t operator()(const fedsearch::EntryId& id) const noexcept {
        return std::hash<std::string>{}(id.value) * 31u + static_cast<std::size_t>(id.collection);
    }
};
