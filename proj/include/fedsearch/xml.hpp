#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fedsearch::xml {

/// Minimal element tree. Mixed content is flattened: `text` holds the
/// concatenated character data that sits directly inside the element.
struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Element> children;
    std::string text;
    std::size_t line = 0;

    const std::string* attribute(std::string_view key) const;
    const Element* child(std::string_view child_name) const;

    bool operator==(const Element&) const = default;
};

/// Parses a complete UTF-8 document. Throws ParseError carrying `source`
/// (usually the file path) and the line where expat stopped.
Element parse(std::string_view document, const std::string& source);

std::string escape(std::string_view text);

/// Streaming writer producing the canonical layout: two-space indent,
/// LF line endings, attributes in insertion order, text-only elements on
/// one line.
class Writer {
public:
    Writer();

    void open(std::string_view name,
              std::initializer_list<std::pair<std::string_view, std::string_view>> attrs = {});
    void open(std::string_view name,
              const std::vector<std::pair<std::string, std::string>>& attrs);
    void close();
    void leaf(std::string_view name, std::string_view text,
              std::initializer_list<std::pair<std::string_view, std::string_view>> attrs = {});
    void leaf(std::string_view name, std::string_view text,
              const std::vector<std::pair<std::string, std::string>>& attrs);
    void empty(std::string_view name,
               std::initializer_list<std::pair<std::string_view, std::string_view>> attrs = {});
    void empty(std::string_view name,
               const std::vector<std::pair<std::string, std::string>>& attrs);

    std::string finish();

private:
    void indent();
    template <typename Attrs>
    void start_tag(std::string_view name, const Attrs& attrs);

    std::string out_;
    std::vector<std::string> stack_;
};

/// Serializes an element tree in canonical layout (no declaration).
void write_element(Writer& writer, const Element& element);

} // namespace fedsearch::xml
