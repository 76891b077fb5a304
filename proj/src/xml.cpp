#include "fedsearch/xml.hpp"

#include "fedsearch/error.hpp"

#include <expat.h>

#include <algorithm>
#include <memory>

namespace fedsearch::xml {

const std::string* Element::attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes) {
        if (k == key) return &v;
    }
    return nullptr;
}

const Element* Element::child(std::string_view child_name) const {
    for (const auto& c : children) {
        if (c.name == child_name) return &c;
    }
    return nullptr;
}

namespace {

struct BuildState {
    XML_Parser parser = nullptr;
    std::vector<Element*> open;
    Element root;
    bool have_root = false;
};

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r';
    });
}

void XMLCALL on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
    auto* st = static_cast<BuildState*>(user);
    Element el;
    el.name = name;
    el.line = static_cast<std::size_t>(XML_GetCurrentLineNumber(st->parser));
    for (const XML_Char** a = attrs; *a != nullptr; a += 2) {
        el.attributes.emplace_back(a[0], a[1]);
    }
    if (st->open.empty()) {
        st->root = std::move(el);
        st->have_root = true;
        st->open.push_back(&st->root);
    } else {
        auto& siblings = st->open.back()->children;
        siblings.push_back(std::move(el));
        st->open.push_back(&siblings.back());
    }
}

void XMLCALL on_end(void* user, const XML_Char*) {
    auto* st = static_cast<BuildState*>(user);
    Element* el = st->open.back();
    if (!el->children.empty() && is_blank(el->text)) el->text.clear();
    st->open.pop_back();
}

void XMLCALL on_text(void* user, const XML_Char* s, int len) {
    auto* st = static_cast<BuildState*>(user);
    if (!st->open.empty()) st->open.back()->text.append(s, static_cast<std::size_t>(len));
}

struct ParserDeleter {
    void operator()(XML_ParserStruct* p) const { XML_ParserFree(p); }
};

// Appends `cp` as UTF-8.
void put_codepoint(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Decodes one UTF-8 sequence at `i`; returns 0xFFFD and advances one byte
// on malformed input.
char32_t next_codepoint(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int extra = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
        extra = 1;
        cp = b0 & 0x1F;
        min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        extra = 2;
        cp = b0 & 0x0F;
        min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        extra = 3;
        cp = b0 & 0x07;
        min = 0x10000;
    } else {
        ++i;
        return 0xFFFD;
    }
    if (i + static_cast<std::size_t>(extra) >= s.size()) {
        ++i;
        return 0xFFFD;
    }
    for (int k = 1; k <= extra; ++k) {
        const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++i;
        return 0xFFFD;
    }
    i += static_cast<std::size_t>(extra) + 1;
    return cp;
}

bool allowed_in_xml(char32_t cp) {
    return cp == 0x9 || cp == 0xA || cp == 0xD || (cp >= 0x20 && cp <= 0xD7FF) ||
           (cp >= 0xE000 && cp <= 0xFFFD) || (cp >= 0x10000 && cp <= 0x10FFFF);
}

std::string escape_impl(std::string_view text, bool attribute) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = next_codepoint(text, i);
        if (!allowed_in_xml(cp)) cp = 0xFFFD;
        switch (cp) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += attribute ? "&quot;" : "\""; break;
        case '\r': out += "&#13;"; break;
        case '\n': out += attribute ? "&#10;" : "\n"; break;
        case '\t': out += attribute ? "&#9;" : "\t"; break;
        default: put_codepoint(out, cp);
        }
    }
    return out;
}

} // namespace

Element parse(std::string_view document, const std::string& source) {
    std::unique_ptr<XML_ParserStruct, ParserDeleter> parser(XML_ParserCreate("UTF-8"));
    if (!parser) throw ParseError(source, 0, "cannot allocate XML parser");
    BuildState st;
    st.parser = parser.get();
    XML_SetUserData(parser.get(), &st);
    XML_SetElementHandler(parser.get(), on_start, on_end);
    XML_SetCharacterDataHandler(parser.get(), on_text);
    const auto ok = XML_Parse(parser.get(), document.data(), static_cast<int>(document.size()),
                              XML_TRUE);
    if (ok == XML_STATUS_ERROR) {
        throw ParseError(source,
                         static_cast<std::size_t>(XML_GetCurrentLineNumber(parser.get())),
                         XML_ErrorString(XML_GetErrorCode(parser.get())));
    }
    if (!st.have_root) throw ParseError(source, 1, "no root element");
    return std::move(st.root);
}

std::string escape(std::string_view text) { return escape_impl(text, false); }

Writer::Writer() { out_ = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"; }

void Writer::indent() { out_.append(stack_.size() * 2, ' '); }

template <typename Attrs>
void Writer::start_tag(std::string_view name, const Attrs& attrs) {
    indent();
    out_ += '<';
    out_ += name;
    for (const auto& [k, v] : attrs) {
        out_ += ' ';
        out_ += k;
        out_ += "=\"";
        out_ += escape_impl(v, true);
        out_ += '"';
    }
}

void Writer::open(std::string_view name,
                  std::initializer_list<std::pair<std::string_view, std::string_view>> attrs) {
    start_tag(name, attrs);
    out_ += ">\n";
    stack_.emplace_back(name);
}

void Writer::open(std::string_view name,
                  const std::vector<std::pair<std::string, std::string>>& attrs) {
    start_tag(name, attrs);
    out_ += ">\n";
    stack_.emplace_back(name);
}

void Writer::close() {
    std::string name = std::move(stack_.back());
    stack_.pop_back();
    indent();
    out_ += "</" + name + ">\n";
}

void Writer::leaf(std::string_view name, std::string_view text,
                  std::initializer_list<std::pair<std::string_view, std::string_view>> attrs) {
    start_tag(name, attrs);
    out_ += '>';
    out_ += escape_impl(text, false);
    out_ += "</";
    out_ += name;
    out_ += ">\n";
}

void Writer::leaf(std::string_view name, std::string_view text,
                  const std::vector<std::pair<std::string, std::string>>& attrs) {
    start_tag(name, attrs);
    out_ += '>';
    out_ += escape_impl(text, false);
    out_ += "</";
    out_ += name;
    out_ += ">\n";
}

void Writer::empty(std::string_view name,
                   std::initializer_list<std::pair<std::string_view, std::string_view>> attrs) {
    start_tag(name, attrs);
    out_ += "/>\n";
}

void Writer::empty(std::string_view name,
                   const std::vector<std::pair<std::string, std::string>>& attrs) {
    start_tag(name, attrs);
    out_ += "/>\n";
}

std::string Writer::finish() {
    while (!stack_.empty()) close();
    return std::move(out_);
}

void write_element(Writer& writer, const Element& element) {
    if (element.children.empty() && element.text.empty()) {
        writer.empty(element.name, element.attributes);
        return;
    }
    if (element.children.empty()) {
        writer.leaf(element.name, element.text, element.attributes);
        return;
    }
    writer.open(element.name, element.attributes);
    for (const auto& c : element.children) write_element(writer, c);
    writer.close();
}

} // namespace fedsearch::xml
