#pragma once

#include "fedsearch/catalog_model.hpp"
#include "fedsearch/xml.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fedsearch {

/// Splits on every ASCII non-alphanumeric byte, lowercases ASCII letters,
/// and drops tokens shorter than two bytes. Bytes >= 0x80 are word bytes,
/// so multi-byte UTF-8 letters stay inside their word.
std::vector<std::string> tokenize(std::string_view text);

/// word -> ids of the entries whose suggestion fields contain it.
using WordIndex = std::map<std::string, std::set<std::string>>;

struct RemoveResult;

/// Immutable, indexed catalog. Collections are shared between versions;
/// a mutation copies only the collection it touches.
class Catalog {
public:
    Catalog();

    /// Builds both indexes. Throws IntegrityError listing every violation
    /// when `raw` does not pass validate_catalog.
    static Catalog from_raw(const RawCatalog& raw);

    const std::vector<Entry>& entries(CollectionName collection) const;
    const std::unordered_map<std::string, std::size_t>& id_index(CollectionName collection) const;
    const WordIndex& word_index(CollectionName collection) const;

    const Entry* find(const EntryId& id) const;
    std::size_t size() const;
    RawCatalog raw() const;

    /// Same entries with indexes recomputed from scratch.
    Catalog rebuilt() const;

    bool operator==(const Catalog& other) const;

private:
    struct CollectionData {
        std::vector<Entry> entries;
        std::unordered_map<std::string, std::size_t> positions;
        WordIndex words;
    };

    static std::shared_ptr<const CollectionData> build(std::vector<Entry> entries);

    const CollectionData& data(CollectionName c) const {
        return *collections_[static_cast<std::size_t>(c)];
    }

    std::array<std::shared_ptr<const CollectionData>, 11> collections_;

    friend Catalog upsert_entry(const Catalog&, Entry);
    friend RemoveResult remove_entry(const Catalog&, const EntryId&);
};

/// Inserts or replaces by ID. Throws IntegrityError when the entry is
/// malformed, links to unknown IDs, or reuses another resource's name.
Catalog upsert_entry(const Catalog& catalog, Entry entry);

struct RemoveResult {
    Catalog catalog;
    bool removed = false;
};

/// Removing an unknown ID is a no-op (`removed == false`). Throws
/// IntegrityError when another entry still references `id`.
RemoveResult remove_entry(const Catalog& catalog, const EntryId& id);

const Entry* lookup_by_id(const Catalog& catalog, const EntryId& id);

// Canonical XML mapping of a single entry. The element is named after the
// entry's collection and carries the `id` attribute.
xml::Element entry_to_xml(const Entry& entry);
Entry entry_from_xml(const xml::Element& element, CollectionName collection,
                     const std::string& source);

std::string serialize_collection(CollectionName collection, const std::vector<Entry>& entries);

/// Reads every collection file without validating cross-links, so that
/// callers can report violations. Throws ParseError and IoError.
RawCatalog read_catalog_directory(const std::filesystem::path& directory);

/// read_catalog_directory followed by Catalog::from_raw.
Catalog load_catalog(const std::filesystem::path& directory);

/// One file per non-empty collection; stale files of empty collections are
/// removed. Throws IoError.
void store_catalog(const Catalog& catalog, const std::filesystem::path& directory);

/// Snapshot holder shared by request handlers and admin writers. Readers
/// grab a shared_ptr and keep a consistent view for as long as they hold
/// it; writers serialize and publish a fresh snapshot atomically.
class CatalogStore {
public:
    explicit CatalogStore(Catalog initial,
                          std::optional<std::filesystem::path> persist_to = std::nullopt);

    std::shared_ptr<const Catalog> snapshot() const;

    void upsert(Entry entry);
    bool remove(const EntryId& id);

private:
    void publish(Catalog next, CollectionName touched);

    mutable std::mutex snapshot_mutex_;
    std::mutex write_mutex_;
    std::shared_ptr<const Catalog> current_;
    std::optional<std::filesystem::path> persist_to_;
};

} // namespace fedsearch
