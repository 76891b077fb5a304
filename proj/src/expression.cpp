#include "fedsearch/expression.hpp"

#include "fedsearch/error.hpp"

#include <algorithm>
#include <cctype>

namespace fedsearch {

Predicate Predicate::contains(std::string field, std::string text) {
    return {Kind::Contains, std::move(field), std::move(text), {}};
}

Predicate Predicate::equals(std::string field, std::string text) {
    return {Kind::Equals, std::move(field), std::move(text), {}};
}

Predicate Predicate::conjunction(Predicate lhs, Predicate rhs) {
    Predicate p{Kind::And, {}, {}, {}};
    p.operands.push_back(std::move(lhs));
    p.operands.push_back(std::move(rhs));
    return p;
}

Predicate Predicate::disjunction(Predicate lhs, Predicate rhs) {
    Predicate p{Kind::Or, {}, {}, {}};
    p.operands.push_back(std::move(lhs));
    p.operands.push_back(std::move(rhs));
    return p;
}

namespace {

// --- lexer ---------------------------------------------------------------

enum class Tok { Slash, DoubleSlash, Name, Star, LBracket, RBracket, LParen, RParen, Comma, Eq, Dot, String, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t pos;
};

bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::string describe(const Token& t) {
    switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::String: return "string literal";
    case Tok::Name: return "'" + t.text + "'";
    default: return "'" + t.text + "'";
    }
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        const auto start = pos_;
        if (pos_ >= src_.size()) return {Tok::End, "", start};
        const char c = src_[pos_];
        auto single = [&](Tok k) {
            ++pos_;
            return Token{k, std::string(1, c), start};
        };
        switch (c) {
        case '/':
            if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                pos_ += 2;
                return {Tok::DoubleSlash, "//", start};
            }
            return single(Tok::Slash);
        case '*': return single(Tok::Star);
        case '[': return single(Tok::LBracket);
        case ']': return single(Tok::RBracket);
        case '(': return single(Tok::LParen);
        case ')': return single(Tok::RParen);
        case ',': return single(Tok::Comma);
        case '=': return single(Tok::Eq);
        case '.': return single(Tok::Dot);
        case '\'':
        case '"': return string_literal(c, start);
        default: break;
        }
        if (name_start(c)) {
            while (pos_ < src_.size() && name_char(src_[pos_])) ++pos_;
            return {Tok::Name, std::string(src_.substr(start, pos_ - start)), start};
        }
        throw SyntaxError(start, {"'/'", "'//'", "name", "'['", "string literal"},
                          "'" + std::string(1, c) + "'");
    }

private:
    // A doubled quote inside a literal stands for one quote character.
    Token string_literal(char quote, std::size_t start) {
        ++pos_;
        std::string value;
        while (true) {
            if (pos_ >= src_.size()) {
                throw SyntaxError(pos_, {std::string("closing ") + quote}, "end of input");
            }
            const char c = src_[pos_++];
            if (c == quote) {
                if (pos_ < src_.size() && src_[pos_] == quote) {
                    value += quote;
                    ++pos_;
                    continue;
                }
                return {Tok::String, std::move(value), start};
            }
            value += c;
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

// --- parser --------------------------------------------------------------

struct Parsed {
    Predicate predicate;
    int depth = 0;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lexer_(src) { advance(); }

    PathExpression parse() {
        PathExpression out;
        if (cur_.kind != Tok::Slash && cur_.kind != Tok::DoubleSlash) {
            fail({"'/'", "'//'"});
        }
        while (cur_.kind == Tok::Slash || cur_.kind == Tok::DoubleSlash) {
            Step step;
            step.axis = cur_.kind == Tok::Slash ? Axis::Child : Axis::Descendant;
            advance();
            if (cur_.kind == Tok::Name) {
                step.name = cur_.text;
            } else if (cur_.kind == Tok::Star) {
                step.name = "*";
            } else {
                fail({"element name", "'*'"});
            }
            advance();
            out.steps.push_back(std::move(step));
        }
        if (cur_.kind == Tok::LBracket) {
            advance();
            out.predicate = parse_or(0).predicate;
            expect(Tok::RBracket, "']'");
            if (cur_.kind != Tok::End) fail({"end of input"});
        } else if (cur_.kind != Tok::End) {
            fail({"'/'", "'//'", "'['", "end of input"});
        }
        return out;
    }

private:
    void advance() { cur_ = lexer_.next(); }

    [[noreturn]] void fail(std::vector<std::string> expected) {
        throw SyntaxError(cur_.pos, std::move(expected), describe(cur_));
    }

    void expect(Tok kind, const char* label) {
        if (cur_.kind != kind) fail({label});
        advance();
    }

    bool at_keyword(std::string_view word) const {
        return cur_.kind == Tok::Name && cur_.text == word;
    }

    Parsed combine(Parsed lhs, Parsed rhs, bool conj, std::size_t op_pos) {
        const int depth = 1 + std::max(lhs.depth, rhs.depth);
        if (depth > kMaxPredicateDepth) {
            throw SyntaxError(op_pos, {"at most 32 nested and/or"}, "deeper nesting");
        }
        return {conj ? Predicate::conjunction(std::move(lhs.predicate), std::move(rhs.predicate))
                     : Predicate::disjunction(std::move(lhs.predicate), std::move(rhs.predicate)),
                depth};
    }

    Parsed parse_or(int parens) {
        Parsed lhs = parse_and(parens);
        while (at_keyword("or")) {
            const auto pos = cur_.pos;
            advance();
            lhs = combine(std::move(lhs), parse_and(parens), false, pos);
        }
        return lhs;
    }

    Parsed parse_and(int parens) {
        Parsed lhs = parse_primary(parens);
        while (at_keyword("and")) {
            const auto pos = cur_.pos;
            advance();
            lhs = combine(std::move(lhs), parse_primary(parens), true, pos);
        }
        return lhs;
    }

    std::string parse_operand() {
        if (cur_.kind == Tok::Dot) {
            advance();
            return ".";
        }
        if (cur_.kind != Tok::Name) fail({"field name", "'.'"});
        auto name = cur_.text;
        advance();
        return name;
    }

    std::string parse_literal() {
        if (cur_.kind != Tok::String) fail({"string literal"});
        auto text = cur_.text;
        advance();
        return text;
    }

    Parsed parse_primary(int parens) {
        if (cur_.kind == Tok::LParen) {
            if (parens + 1 > kMaxPredicateDepth) {
                throw SyntaxError(cur_.pos, {"at most 32 nested parentheses"}, "'('");
            }
            advance();
            Parsed inner = parse_or(parens + 1);
            expect(Tok::RParen, "')'");
            return inner;
        }
        if (at_keyword("contains")) {
            // `contains` is a function only when a '(' follows; otherwise it
            // is an ordinary field name.
            Lexer probe = lexer_;
            if (probe.next().kind == Tok::LParen) {
                advance();
                advance();
                auto field = parse_operand();
                expect(Tok::Comma, "','");
                auto text = parse_literal();
                expect(Tok::RParen, "')'");
                return {Predicate::contains(std::move(field), std::move(text)), 0};
            }
        }
        if (cur_.kind != Tok::Name && cur_.kind != Tok::Dot) {
            fail({"'('", "'contains('", "field name", "'.'"});
        }
        auto field = parse_operand();
        expect(Tok::Eq, "'='");
        auto text = parse_literal();
        return {Predicate::equals(std::move(field), std::move(text)), 0};
    }

    Lexer lexer_;
    Token cur_{Tok::End, "", 0};
};

// --- printer -------------------------------------------------------------

std::string quote(const std::string& text) {
    std::string out = "'";
    for (char c : text) {
        if (c == '\'') out += '\'';
        out += c;
    }
    out += '\'';
    return out;
}

void print_predicate(std::string& out, const Predicate& p) {
    using K = Predicate::Kind;
    auto wrapped = [&](const Predicate& child, bool parens) {
        if (parens) out += '(';
        print_predicate(out, child);
        if (parens) out += ')';
    };
    switch (p.kind) {
    case K::Contains:
        out += "contains(" + p.field + "," + quote(p.text) + ")";
        break;
    case K::Equals:
        out += p.field + "=" + quote(p.text);
        break;
    case K::And:
        wrapped(p.operands[0], p.operands[0].kind == K::Or);
        out += " and ";
        wrapped(p.operands[1], p.operands[1].kind == K::Or || p.operands[1].kind == K::And);
        break;
    case K::Or:
        wrapped(p.operands[0], false);
        out += " or ";
        wrapped(p.operands[1], p.operands[1].kind == K::Or);
        break;
    }
}

// --- evaluation ----------------------------------------------------------

constexpr std::size_t kNoOwner = static_cast<std::size_t>(-1);

/// Preorder flattening of the catalog document.
struct FlatDocument {
    std::vector<const xml::Element*> element; // nullptr for the virtual root
    std::vector<std::size_t> end;             // one past the subtree
    std::vector<std::size_t> owner;           // index into `entries`
    std::vector<const Entry*> entries;
    std::vector<xml::Element> roots;          // storage for collection roots
};

void flatten(FlatDocument& doc, const xml::Element& el, std::size_t owner) {
    const auto self = doc.element.size();
    doc.element.push_back(&el);
    doc.end.push_back(0);
    doc.owner.push_back(owner);
    for (const auto& c : el.children) flatten(doc, c, owner);
    doc.end[self] = doc.element.size();
}

FlatDocument flatten_catalog(const Catalog& catalog) {
    FlatDocument doc;
    doc.roots.reserve(kAllCollections.size());
    for (auto c : kAllCollections) {
        xml::Element root;
        root.name = std::string(to_string(c));
        for (const auto& e : catalog.entries(c)) {
            root.children.push_back(entry_to_xml(e));
            doc.entries.push_back(&e);
        }
        doc.roots.push_back(std::move(root));
    }
    doc.element.push_back(nullptr);
    doc.end.push_back(0);
    doc.owner.push_back(kNoOwner);
    std::size_t next_entry = 0;
    for (const auto& root : doc.roots) {
        const auto self = doc.element.size();
        doc.element.push_back(&root);
        doc.end.push_back(0);
        doc.owner.push_back(kNoOwner);
        for (const auto& e : root.children) flatten(doc, e, next_entry++);
        doc.end[self] = doc.element.size();
    }
    doc.end[0] = doc.element.size();
    return doc;
}

char fold(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool contains_folded(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                       [](char a, char b) { return fold(a) == fold(b); }) != haystack.end();
}

bool any_text(const FlatDocument& doc, std::size_t node, const Predicate& leaf) {
    for (std::size_t i = node; i < doc.end[node]; ++i) {
        const auto& text = doc.element[i]->text;
        const bool hit = leaf.kind == Predicate::Kind::Contains ? contains_folded(text, leaf.text)
                                                                : text == leaf.text;
        if (hit) return true;
    }
    return false;
}

bool matches(const FlatDocument& doc, std::size_t node, const Predicate& p) {
    switch (p.kind) {
    case Predicate::Kind::And:
        return matches(doc, node, p.operands[0]) && matches(doc, node, p.operands[1]);
    case Predicate::Kind::Or:
        return matches(doc, node, p.operands[0]) || matches(doc, node, p.operands[1]);
    default: break;
    }
    if (p.field == ".") return any_text(doc, node, p);
    for (std::size_t c = node + 1; c < doc.end[node]; c = doc.end[c]) {
        if (doc.element[c]->name == p.field && any_text(doc, c, p)) return true;
    }
    return false;
}

bool name_matches(const FlatDocument& doc, std::size_t node, const std::string& name) {
    return name == "*" || doc.element[node]->name == name;
}

} // namespace

PathExpression parse_expression(std::string_view text) { return Parser(text).parse(); }

std::string print_expression(const PathExpression& expression) {
    std::string out;
    for (const auto& s : expression.steps) {
        out += s.axis == Axis::Child ? "/" : "//";
        out += s.name;
    }
    if (expression.predicate) {
        out += '[';
        print_predicate(out, *expression.predicate);
        out += ']';
    }
    return out;
}

std::vector<Entry> evaluate(const Catalog& catalog, const PathExpression& expression) {
    if (expression.steps.empty()) return {};
    const FlatDocument doc = flatten_catalog(catalog);

    std::vector<std::size_t> context{0};
    std::vector<char> mark(doc.element.size());
    for (const auto& step : expression.steps) {
        std::fill(mark.begin(), mark.end(), 0);
        for (auto ctx : context) {
            if (step.axis == Axis::Child) {
                for (std::size_t c = ctx + 1; c < doc.end[ctx]; c = doc.end[c]) {
                    if (name_matches(doc, c, step.name)) mark[c] = 1;
                }
            } else {
                for (std::size_t d = ctx + 1; d < doc.end[ctx]; ++d) {
                    if (name_matches(doc, d, step.name)) mark[d] = 1;
                }
            }
        }
        context.clear();
        for (std::size_t i = 0; i < mark.size(); ++i) {
            if (mark[i]) context.push_back(i);
        }
        if (context.empty()) break;
    }

    std::vector<Entry> out;
    std::size_t last_owner = kNoOwner;
    for (auto node : context) {
        if (expression.predicate && !matches(doc, node, *expression.predicate)) continue;
        const auto owner = doc.owner[node];
        // Context is in document order, so equal owners are adjacent.
        if (owner == kNoOwner || owner == last_owner) continue;
        last_owner = owner;
        out.push_back(*doc.entries[owner]);
    }
    return out;
}

} // namespace fedsearch
