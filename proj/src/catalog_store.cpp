#include "fedsearch/catalog_store.hpp"

#include "fedsearch/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <system_error>

namespace fedsearch {

namespace {

bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

void index_entry(WordIndex& words, const Entry& entry) {
    const auto& id = entry_id(entry).value;
    for (auto text : suggestion_fields(entry)) {
        for (auto& w : tokenize(text)) words[std::move(w)].insert(id);
    }
}

void unindex_entry(WordIndex& words, const Entry& entry) {
    const auto& id = entry_id(entry).value;
    for (auto text : suggestion_fields(entry)) {
        for (const auto& w : tokenize(text)) {
            auto it = words.find(w);
            if (it == words.end()) continue;
            it->second.erase(id);
            if (it->second.empty()) words.erase(it);
        }
    }
}

[[noreturn]] void fail(const std::string& source, const xml::Element& at,
                       const std::string& reason) {
    throw ParseError(source, at.line, reason);
}

const std::string& required_attribute(const xml::Element& el, std::string_view key,
                                      const std::string& source) {
    const auto* v = el.attribute(key);
    if (v == nullptr) {
        fail(source, el, "<" + el.name + "> is missing the '" + std::string(key) + "' attribute");
    }
    return *v;
}

EntryId ref_attribute(const xml::Element& el, const std::string& source) {
    const auto& text = required_attribute(el, "ref", source);
    auto ref = parse_ref(text);
    if (!ref) fail(source, el, "malformed ref '" + text + "' (expected Collection:id)");
    return *ref;
}

void require_leaf(const xml::Element& el, const std::string& source) {
    if (!el.children.empty()) fail(source, el, "<" + el.name + "> must not contain elements");
}

Field field_from(const xml::Element& el, std::string name, const std::string& source) {
    require_leaf(el, source);
    Field f{std::move(name), el.text, std::nullopt};
    if (el.attribute("ref") != nullptr) f.ref = ref_attribute(el, source);
    return f;
}

xml::Element leaf(std::string name, std::string text) {
    xml::Element el;
    el.name = std::move(name);
    el.text = std::move(text);
    return el;
}

xml::Element field_element(std::string element_name, const Field& f, bool named) {
    xml::Element el = leaf(std::move(element_name), f.value);
    if (named) el.attributes.emplace_back("name", f.name);
    if (f.ref) el.attributes.emplace_back("ref", format_ref(*f.ref));
    return el;
}

xml::Element ref_element(std::string name, const EntryId& id) {
    xml::Element el;
    el.name = std::move(name);
    el.attributes.emplace_back("ref", format_ref(id));
    return el;
}

template <typename... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw IoError("cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

std::filesystem::path collection_path(const std::filesystem::path& dir, CollectionName c) {
    return dir / (std::string(to_string(c)) + ".xml");
}

std::vector<std::string> describe(const std::vector<Violation>& violations) {
    std::vector<std::string> out;
    out.reserve(violations.size());
    for (const auto& v : violations) out.push_back(to_string(v));
    return out;
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (current.size() >= 2) out.push_back(current);
        current.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
        } else {
            flush();
        }
    }
    flush();
    return out;
}

// --- Catalog -------------------------------------------------------------

Catalog::Catalog() {
    auto empty = std::make_shared<const CollectionData>();
    collections_.fill(empty);
}

std::shared_ptr<const Catalog::CollectionData> Catalog::build(std::vector<Entry> entries) {
    auto d = std::make_shared<CollectionData>();
    d->entries = std::move(entries);
    for (std::size_t i = 0; i < d->entries.size(); ++i) {
        d->positions.emplace(entry_id(d->entries[i]).value, i);
        index_entry(d->words, d->entries[i]);
    }
    return d;
}

Catalog Catalog::from_raw(const RawCatalog& raw) {
    if (auto violations = validate_catalog(raw); !violations.empty()) {
        throw IntegrityError(describe(violations));
    }
    Catalog out;
    for (const auto& [collection, entries] : raw) {
        out.collections_[static_cast<std::size_t>(collection)] = build(entries);
    }
    return out;
}

const std::vector<Entry>& Catalog::entries(CollectionName collection) const {
    return data(collection).entries;
}

const std::unordered_map<std::string, std::size_t>& Catalog::id_index(
    CollectionName collection) const {
    return data(collection).positions;
}

const WordIndex& Catalog::word_index(CollectionName collection) const {
    return data(collection).words;
}

const Entry* Catalog::find(const EntryId& id) const {
    const auto& d = data(id.collection);
    auto it = d.positions.find(id.value);
    return it == d.positions.end() ? nullptr : &d.entries[it->second];
}

std::size_t Catalog::size() const {
    std::size_t n = 0;
    for (const auto& c : collections_) n += c->entries.size();
    return n;
}

RawCatalog Catalog::raw() const {
    RawCatalog out;
    for (auto c : kAllCollections) out[c] = entries(c);
    return out;
}

Catalog Catalog::rebuilt() const {
    Catalog out;
    for (auto c : kAllCollections) out.collections_[static_cast<std::size_t>(c)] = build(entries(c));
    return out;
}

bool Catalog::operator==(const Catalog& other) const {
    for (auto c : kAllCollections) {
        if (entries(c) != other.entries(c)) return false;
    }
    return true;
}

Catalog upsert_entry(const Catalog& catalog, Entry entry) {
    const EntryId id = entry_id(entry);

    // Shape checks on the entry alone; links are resolved against the
    // catalog below.
    RawCatalog alone;
    alone[id.collection].push_back(entry);
    std::vector<std::string> problems;
    for (const auto& v : validate_catalog(alone)) {
        if (v.rule != "dangling-link") problems.push_back(to_string(v));
    }
    for (const auto& ref : references(entry)) {
        if (ref != id && catalog.find(ref) == nullptr) {
            problems.push_back(std::string(to_string(id.collection)) + " " + id.value +
                               " dangling-link: " + format_ref(ref));
        }
    }
    if (const auto* r = std::get_if<ResourceDescriptor>(&entry)) {
        for (const auto& other : catalog.entries(CollectionName::Resource)) {
            const auto& o = std::get<ResourceDescriptor>(other);
            if (o.name == r->name && o.id != r->id) {
                problems.push_back("Resource " + id.value + " duplicate-resource-name: '" +
                                   r->name + "' also used by " + o.id.value);
            }
        }
    }
    if (!problems.empty()) throw IntegrityError(std::move(problems));

    const auto slot = static_cast<std::size_t>(id.collection);
    auto next = std::make_shared<Catalog::CollectionData>(*catalog.collections_[slot]);
    if (auto it = next->positions.find(id.value); it != next->positions.end()) {
        unindex_entry(next->words, next->entries[it->second]);
        next->entries[it->second] = std::move(entry);
        index_entry(next->words, next->entries[it->second]);
    } else {
        next->positions.emplace(id.value, next->entries.size());
        next->entries.push_back(std::move(entry));
        index_entry(next->words, next->entries.back());
    }
    Catalog out = catalog;
    out.collections_[slot] = std::move(next);
    return out;
}

RemoveResult remove_entry(const Catalog& catalog, const EntryId& id) {
    const auto* existing = catalog.find(id);
    if (existing == nullptr) return {catalog, false};

    std::vector<std::string> problems;
    for (auto c : kAllCollections) {
        for (const auto& e : catalog.entries(c)) {
            const auto& eid = entry_id(e);
            if (eid == id) continue;
            for (const auto& ref : references(e)) {
                if (ref == id) {
                    problems.push_back(std::string(to_string(c)) + " " + eid.value +
                                       " still links to " + format_ref(id));
                    break;
                }
            }
        }
    }
    if (!problems.empty()) throw IntegrityError(std::move(problems));

    const auto slot = static_cast<std::size_t>(id.collection);
    auto next = std::make_shared<Catalog::CollectionData>(*catalog.collections_[slot]);
    const auto pos = next->positions.at(id.value);
    unindex_entry(next->words, next->entries[pos]);
    next->entries.erase(next->entries.begin() + static_cast<std::ptrdiff_t>(pos));
    next->positions.erase(id.value);
    for (auto& [_, p] : next->positions) {
        if (p > pos) --p;
    }
    Catalog out = catalog;
    out.collections_[slot] = std::move(next);
    return {std::move(out), true};
}

const Entry* lookup_by_id(const Catalog& catalog, const EntryId& id) { return catalog.find(id); }

// --- XML mapping ---------------------------------------------------------

xml::Element entry_to_xml(const Entry& entry) {
    xml::Element el;
    const auto& id = entry_id(entry);
    el.name = std::string(to_string(id.collection));
    el.attributes.emplace_back("id", id.value);
    auto& kids = el.children;
    std::visit(overloaded{
                   [&](const ResourceDescriptor& r) {
                       kids.push_back(leaf("name", r.name));
                       kids.push_back(leaf("description", r.short_description));
                       if (r.url) kids.push_back(leaf("url", *r.url));
                       kids.push_back(leaf("long_description", r.long_description));
                       for (const auto& [section, fields] : r.sections) {
                           xml::Element s;
                           s.name = "section";
                           s.attributes.emplace_back("name", std::string(to_string(section)));
                           for (const auto& f : fields) {
                               s.children.push_back(field_element("field", f, true));
                           }
                           kids.push_back(std::move(s));
                       }
                       for (const auto& link : r.links) kids.push_back(ref_element("link", link));
                   },
                   [&](const PersonDescriptor& p) {
                       kids.push_back(leaf("name", p.name));
                       if (p.institute) kids.push_back(ref_element("institute", *p.institute));
                       for (const auto& f : p.free_fields) {
                           kids.push_back(field_element(f.name, f, false));
                       }
                   },
                   [&](const KeywordEntry& k) {
                       kids.push_back(leaf("name", k.name));
                       kids.push_back(ref_element("type", k.type_id));
                   },
                   [&](const GenericEntry& g) {
                       for (const auto& f : g.fields) kids.push_back(field_element(f.name, f, false));
                   },
               },
               entry);
    return el;
}

Entry entry_from_xml(const xml::Element& el, CollectionName collection,
                     const std::string& source) {
    EntryId id{collection, required_attribute(el, "id", source)};
    if (!is_valid_id_value(id.value)) fail(source, el, "invalid id '" + id.value + "'");

    auto take_once = [&](std::optional<std::string>& slot, const xml::Element& child) {
        require_leaf(child, source);
        if (slot) fail(source, child, "duplicate <" + child.name + ">");
        slot = child.text;
    };

    switch (kind_for(collection)) {
    case EntryKind::Resource: {
        ResourceDescriptor r;
        r.id = std::move(id);
        std::optional<std::string> name, description, long_description;
        for (const auto& child : el.children) {
            if (child.name == "name") {
                take_once(name, child);
            } else if (child.name == "description") {
                take_once(description, child);
            } else if (child.name == "url") {
                take_once(r.url, child);
            } else if (child.name == "long_description") {
                take_once(long_description, child);
            } else if (child.name == "section") {
                const auto& label = required_attribute(child, "name", source);
                auto section = parse_section_name(label);
                if (!section) fail(source, child, "unknown section '" + label + "'");
                if (r.sections.contains(*section)) fail(source, child, "duplicate section '" + label + "'");
                auto& fields = r.sections[*section];
                for (const auto& f : child.children) {
                    if (f.name != "field") fail(source, f, "unexpected <" + f.name + "> in section");
                    fields.push_back(field_from(f, required_attribute(f, "name", source), source));
                }
            } else if (child.name == "link") {
                require_leaf(child, source);
                r.links.push_back(ref_attribute(child, source));
            } else {
                fail(source, child, "unexpected <" + child.name + "> in Resource");
            }
        }
        if (!name) fail(source, el, "Resource " + r.id.value + " has no <name>");
        r.name = std::move(*name);
        r.short_description = description.value_or("");
        r.long_description = long_description.value_or("");
        return r;
    }
    case EntryKind::Person: {
        PersonDescriptor p;
        p.id = std::move(id);
        std::optional<std::string> name;
        for (const auto& child : el.children) {
            if (child.name == "name") {
                take_once(name, child);
            } else if (child.name == "institute") {
                require_leaf(child, source);
                if (p.institute) fail(source, child, "duplicate <institute>");
                p.institute = ref_attribute(child, source);
            } else {
                p.free_fields.push_back(field_from(child, child.name, source));
            }
        }
        p.name = name.value_or("");
        return p;
    }
    case EntryKind::Keyword: {
        KeywordEntry k;
        k.id = std::move(id);
        std::optional<std::string> name;
        std::optional<EntryId> type;
        for (const auto& child : el.children) {
            if (child.name == "name") {
                take_once(name, child);
            } else if (child.name == "type") {
                require_leaf(child, source);
                if (type) fail(source, child, "duplicate <type>");
                type = ref_attribute(child, source);
            } else {
                fail(source, child, "unexpected <" + child.name + "> in Keyword");
            }
        }
        if (!type) fail(source, el, "Keyword " + k.id.value + " has no <type>");
        k.name = name.value_or("");
        k.type_id = std::move(*type);
        return k;
    }
    case EntryKind::Generic: break;
    }
    GenericEntry g;
    g.id = std::move(id);
    for (const auto& child : el.children) g.fields.push_back(field_from(child, child.name, source));
    return g;
}

std::string serialize_collection(CollectionName collection, const std::vector<Entry>& entries) {
    xml::Writer w;
    const auto name = to_string(collection);
    if (entries.empty()) {
        w.empty(name);
        return w.finish();
    }
    w.open(name);
    for (const auto& e : entries) xml::write_element(w, entry_to_xml(e));
    w.close();
    return w.finish();
}

RawCatalog read_catalog_directory(const std::filesystem::path& directory) {
    std::error_code ec;
    if (!std::filesystem::is_directory(directory, ec)) {
        throw IoError("not a readable directory: " + directory.string());
    }
    RawCatalog raw;
    for (auto c : kAllCollections) raw[c];

    std::vector<std::filesystem::path> files;
    for (const auto& de : std::filesystem::directory_iterator(directory, ec)) {
        if (de.is_regular_file() && de.path().extension() == ".xml") files.push_back(de.path());
    }
    if (ec) throw IoError("cannot list " + directory.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        const auto stem = path.stem().string();
        const auto collection = parse_collection_name(stem);
        const auto source = path.string();
        if (!collection) throw ParseError(source, 0, "unknown collection file '" + stem + "'");
        const auto root = xml::parse(read_file(path), source);
        if (root.name != stem) {
            fail(source, root, "root element <" + root.name + "> does not match collection " + stem);
        }
        auto& entries = raw[*collection];
        for (const auto& child : root.children) {
            if (child.name != stem) {
                fail(source, child, "unexpected <" + child.name + ">, expected <" + stem + ">");
            }
            entries.push_back(entry_from_xml(child, *collection, source));
        }
    }
    return raw;
}

Catalog load_catalog(const std::filesystem::path& directory) {
    return Catalog::from_raw(read_catalog_directory(directory));
}

void store_catalog(const Catalog& catalog, const std::filesystem::path& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());
    for (auto c : kAllCollections) {
        const auto path = collection_path(directory, c);
        const auto& entries = catalog.entries(c);
        if (entries.empty()) {
            std::filesystem::remove(path, ec);
            if (ec) throw IoError("cannot remove " + path.string() + ": " + ec.message());
        } else {
            write_file(path, serialize_collection(c, entries));
        }
    }
}

// --- CatalogStore --------------------------------------------------------

CatalogStore::CatalogStore(Catalog initial, std::optional<std::filesystem::path> persist_to)
    : current_(std::make_shared<const Catalog>(std::move(initial))),
      persist_to_(std::move(persist_to)) {}

std::shared_ptr<const Catalog> CatalogStore::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return current_;
}

void CatalogStore::publish(Catalog next, CollectionName touched) {
    if (persist_to_) {
        const auto path = collection_path(*persist_to_, touched);
        const auto& entries = next.entries(touched);
        if (entries.empty()) {
            std::error_code ec;
            std::filesystem::remove(path, ec);
        } else {
            write_file(path, serialize_collection(touched, entries));
        }
    }
    auto fresh = std::make_shared<const Catalog>(std::move(next));
    std::lock_guard lock(snapshot_mutex_);
    current_ = std::move(fresh);
}

void CatalogStore::upsert(Entry entry) {
    std::lock_guard writer(write_mutex_);
    const auto touched = entry_collection(entry);
    publish(upsert_entry(*snapshot(), std::move(entry)), touched);
}

bool CatalogStore::remove(const EntryId& id) {
    std::lock_guard writer(write_mutex_);
    auto result = remove_entry(*snapshot(), id);
    if (result.removed) publish(std::move(result.catalog), id.collection);
    return result.removed;
}

} // namespace fedsearch
