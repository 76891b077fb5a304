#include "fedsearch/envelope.hpp"

#include "fedsearch/error.hpp"

#include <algorithm>
#include <cctype>

namespace fedsearch {

namespace {

template <typename... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr const char* kEnvelopeSource = "response";

[[noreturn]] void bad(const std::string& reason, std::size_t line = 0) {
    throw ParseError(kEnvelopeSource, line, reason);
}

std::size_t parse_count(std::string_view text, std::size_t line) {
    if (text.empty() || text.size() > 18 ||
        !std::all_of(text.begin(), text.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        bad("bad count '" + std::string(text) + "'", line);
    }
    return static_cast<std::size_t>(std::stoull(std::string(text)));
}

const std::string& attr(const xml::Element& el, std::string_view key) {
    const auto* v = el.attribute(key);
    if (v == nullptr) bad("<" + el.name + "> lacks '" + std::string(key) + "'", el.line);
    return *v;
}

EntryId json_ref(const nlohmann::json& v) {
    auto ref = parse_ref(v.get<std::string>());
    if (!ref) bad("malformed ref " + v.dump());
    return *ref;
}

nlohmann::ordered_json fields_to_json(const std::vector<Field>& fields) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& f : fields) {
        nlohmann::ordered_json j;
        j["name"] = f.name;
        j["value"] = f.value;
        if (f.ref) j["ref"] = format_ref(*f.ref);
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<Field> fields_from_json(const nlohmann::json& arr) {
    std::vector<Field> out;
    for (const auto& j : arr) {
        Field f{j.at("name").get<std::string>(), j.at("value").get<std::string>(), std::nullopt};
        if (j.contains("ref")) f.ref = json_ref(j.at("ref"));
        out.push_back(std::move(f));
    }
    return out;
}

const char* status_of(const PeerOutcome& o) {
    return std::holds_alternative<Count>(o) ? "ok" : "unreachable";
}

std::string html_escape(std::string_view s) { return xml::escape(s); }

} // namespace

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::DomainUnknown: return "DOMAIN_UNKNOWN";
    case ErrorCode::BadRequest: return "BAD_REQUEST";
    case ErrorCode::Internal: return "INTERNAL";
    case ErrorCode::Forbidden: return "FORBIDDEN";
    case ErrorCode::Conflict: return "CONFLICT";
    }
    return "INTERNAL";
}

std::optional<ErrorCode> parse_error_code(std::string_view text) {
    for (auto c : {ErrorCode::DomainUnknown, ErrorCode::BadRequest, ErrorCode::Internal,
                   ErrorCode::Forbidden, ErrorCode::Conflict}) {
        if (to_string(c) == text) return c;
    }
    return std::nullopt;
}

int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::DomainUnknown: return 404;
    case ErrorCode::BadRequest: return 400;
    case ErrorCode::Forbidden: return 403;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::Internal: return 500;
    }
    return 500;
}

ResponseEnvelope error_envelope(WirePairs query, ErrorCode code, std::string message) {
    return {std::move(query), ErrorBody{code, std::move(message)}};
}

std::optional<std::size_t> envelope_count(const ResponseEnvelope& envelope) {
    return std::visit(overloaded{
                          [](const ResultsBody& b) -> std::optional<std::size_t> { return b.hits.size(); },
                          [](const CountBody& b) -> std::optional<std::size_t> { return b.count; },
                          [](const SuggestionsBody& b) -> std::optional<std::size_t> {
                              return b.words.size();
                          },
                          [](const auto&) -> std::optional<std::size_t> { return std::nullopt; },
                      },
                      envelope.body);
}

// --- entries -------------------------------------------------------------

xml::Element entry_result_element(const Entry& entry) {
    auto el = entry_to_xml(entry);
    el.attributes.insert(el.attributes.begin(), {"collection", el.name});
    el.name = "entry";
    return el;
}

Entry entry_from_result_element(const xml::Element& element, const std::string& source) {
    const auto& label = attr(element, "collection");
    const auto collection = parse_collection_name(label);
    if (!collection) bad("unknown collection '" + label + "'", element.line);
    return entry_from_xml(element, *collection, source);
}

nlohmann::ordered_json entry_to_json(const Entry& entry) {
    nlohmann::ordered_json j;
    const auto& id = entry_id(entry);
    j["collection"] = std::string(to_string(id.collection));
    j["id"] = id.value;
    std::visit(overloaded{
                   [&](const ResourceDescriptor& r) {
                       j["name"] = r.name;
                       j["description"] = r.short_description;
                       if (r.url) j["url"] = *r.url;
                       j["long_description"] = r.long_description;
                       auto sections = nlohmann::ordered_json::array();
                       for (const auto& [name, fields] : r.sections) {
                           nlohmann::ordered_json s;
                           s["name"] = std::string(to_string(name));
                           s["fields"] = fields_to_json(fields);
                           sections.push_back(std::move(s));
                       }
                       j["sections"] = std::move(sections);
                       auto links = nlohmann::ordered_json::array();
                       for (const auto& l : r.links) links.push_back(format_ref(l));
                       j["links"] = std::move(links);
                   },
                   [&](const PersonDescriptor& p) {
                       j["name"] = p.name;
                       if (p.institute) j["institute"] = format_ref(*p.institute);
                       j["fields"] = fields_to_json(p.free_fields);
                   },
                   [&](const KeywordEntry& k) {
                       j["name"] = k.name;
                       j["type"] = format_ref(k.type_id);
                   },
                   [&](const GenericEntry& g) { j["fields"] = fields_to_json(g.fields); },
               },
               entry);
    return j;
}

Entry entry_from_json(const nlohmann::json& j) {
    const auto label = j.at("collection").get<std::string>();
    const auto collection = parse_collection_name(label);
    if (!collection) bad("unknown collection '" + label + "'");
    EntryId id{*collection, j.at("id").get<std::string>()};
    switch (kind_for(*collection)) {
    case EntryKind::Resource: {
        ResourceDescriptor r;
        r.id = std::move(id);
        r.name = j.at("name").get<std::string>();
        r.short_description = j.at("description").get<std::string>();
        if (j.contains("url")) r.url = j.at("url").get<std::string>();
        r.long_description = j.at("long_description").get<std::string>();
        for (const auto& s : j.at("sections")) {
            const auto name = s.at("name").get<std::string>();
            auto section = parse_section_name(name);
            if (!section) bad("unknown section '" + name + "'");
            r.sections[*section] = fields_from_json(s.at("fields"));
        }
        for (const auto& l : j.at("links")) r.links.push_back(json_ref(l));
        return r;
    }
    case EntryKind::Person: {
        PersonDescriptor p;
        p.id = std::move(id);
        p.name = j.at("name").get<std::string>();
        if (j.contains("institute")) p.institute = json_ref(j.at("institute"));
        p.free_fields = fields_from_json(j.at("fields"));
        return p;
    }
    case EntryKind::Keyword:
        return KeywordEntry{std::move(id), j.at("name").get<std::string>(), json_ref(j.at("type"))};
    case EntryKind::Generic: break;
    }
    return GenericEntry{std::move(id), fields_from_json(j.at("fields"))};
}

// --- XML -----------------------------------------------------------------

std::string encode_xml(const ResponseEnvelope& envelope) {
    xml::Writer w;
    w.open("response");
    if (envelope.query.empty()) {
        w.empty("query");
    } else {
        w.open("query");
        for (const auto& [k, v] : envelope.query) w.leaf("pair", v, {{"keyword", k}});
        w.close();
    }
    std::visit(overloaded{
                   [&](const ResultsBody& b) {
                       const auto count = std::to_string(b.hits.size());
                       if (b.hits.empty()) {
                           w.empty("results", {{"count", count}});
                           return;
                       }
                       w.open("results", {{"count", count}});
                       for (const auto& e : b.hits) xml::write_element(w, entry_result_element(e));
                       w.close();
                   },
                   [&](const CountBody& b) { w.leaf("count", std::to_string(b.count)); },
                   [&](const SuggestionsBody& b) {
                       if (b.words.empty()) {
                           w.empty("suggestions");
                           return;
                       }
                       w.open("suggestions");
                       for (const auto& s : b.words) w.leaf("s", s);
                       w.close();
                   },
                   [&](const RemoteBody& b) {
                       const auto local = std::to_string(b.counts.local_count);
                       if (b.counts.per_node.empty()) {
                           w.empty("remote", {{"local", local}});
                           return;
                       }
                       w.open("remote", {{"local", local}});
                       for (const auto& r : b.counts.per_node) {
                           std::vector<std::pair<std::string, std::string>> attrs{
                               {"name", r.node.name},
                               {"url", r.node.base_url},
                               {"status", status_of(r.outcome)},
                           };
                           if (const auto* c = std::get_if<Count>(&r.outcome)) {
                               attrs.emplace_back("count", std::to_string(c->value));
                           } else {
                               attrs.emplace_back("reason", std::get<Unreachable>(r.outcome).reason);
                           }
                           attrs.emplace_back("results", r.results_url);
                           w.empty("node", attrs);
                       }
                       w.close();
                   },
                   [&](const AckBody& b) {
                       w.empty("ack", {{"action", b.action},
                                       {"ref", b.ref},
                                       {"changed", b.changed ? "true" : "false"}});
                   },
                   [&](const ErrorBody& b) {
                       w.leaf("error", b.message, {{"code", to_string(b.code)}});
                   },
               },
               envelope.body);
    w.close();
    return w.finish();
}

ResponseEnvelope decode_xml(std::string_view document) {
    const auto root = xml::parse(document, kEnvelopeSource);
    if (root.name != "response") bad("root element is <" + root.name + ">", root.line);
    if (root.children.size() != 2 || root.children[0].name != "query") {
        bad("expected <query> followed by one body element", root.line);
    }
    ResponseEnvelope out;
    for (const auto& p : root.children[0].children) {
        if (p.name != "pair") bad("unexpected <" + p.name + "> in <query>", p.line);
        out.query.emplace_back(attr(p, "keyword"), p.text);
    }

    const auto& body = root.children[1];
    if (body.name == "results") {
        ResultsBody b;
        for (const auto& e : body.children) {
            if (e.name != "entry") bad("unexpected <" + e.name + "> in <results>", e.line);
            b.hits.push_back(entry_from_result_element(e, kEnvelopeSource));
        }
        if (parse_count(attr(body, "count"), body.line) != b.hits.size()) {
            bad("results count does not match the number of entries", body.line);
        }
        out.body = std::move(b);
    } else if (body.name == "count") {
        out.body = CountBody{parse_count(body.text, body.line)};
    } else if (body.name == "suggestions") {
        SuggestionsBody b;
        for (const auto& s : body.children) {
            if (s.name != "s") bad("unexpected <" + s.name + "> in <suggestions>", s.line);
            b.words.push_back(s.text);
        }
        out.body = std::move(b);
    } else if (body.name == "remote") {
        RemoteBody b;
        b.counts.local_count = parse_count(attr(body, "local"), body.line);
        for (const auto& n : body.children) {
            if (n.name != "node") bad("unexpected <" + n.name + "> in <remote>", n.line);
            PeerResult r;
            r.node = {attr(n, "name"), attr(n, "url")};
            const auto& status = attr(n, "status");
            if (status == "ok") {
                r.outcome = Count{parse_count(attr(n, "count"), n.line)};
            } else if (status == "unreachable") {
                r.outcome = Unreachable{attr(n, "reason")};
            } else {
                bad("unknown node status '" + status + "'", n.line);
            }
            r.results_url = attr(n, "results");
            b.counts.per_node.push_back(std::move(r));
        }
        out.body = std::move(b);
    } else if (body.name == "ack") {
        out.body = AckBody{attr(body, "action"), attr(body, "ref"), attr(body, "changed") == "true"};
    } else if (body.name == "error") {
        const auto& label = attr(body, "code");
        auto code = parse_error_code(label);
        if (!code) bad("unknown error code '" + label + "'", body.line);
        out.body = ErrorBody{*code, body.text};
    } else {
        bad("unknown body <" + body.name + ">", body.line);
    }
    return out;
}

// --- JSON ----------------------------------------------------------------

nlohmann::ordered_json encode_json(const ResponseEnvelope& envelope) {
    nlohmann::ordered_json j;
    auto query = nlohmann::ordered_json::array();
    for (const auto& [k, v] : envelope.query) query.push_back({{"keyword", k}, {"value", v}});
    j["query"] = std::move(query);
    std::visit(overloaded{
                   [&](const ResultsBody& b) {
                       auto entries = nlohmann::ordered_json::array();
                       for (const auto& e : b.hits) entries.push_back(entry_to_json(e));
                       j["results"] = {{"count", b.hits.size()}, {"entries", std::move(entries)}};
                   },
                   [&](const CountBody& b) { j["count"] = b.count; },
                   [&](const SuggestionsBody& b) { j["suggestions"] = b.words; },
                   [&](const RemoteBody& b) {
                       auto nodes = nlohmann::ordered_json::array();
                       for (const auto& r : b.counts.per_node) {
                           nlohmann::ordered_json n;
                           n["name"] = r.node.name;
                           n["url"] = r.node.base_url;
                           n["status"] = status_of(r.outcome);
                           if (const auto* c = std::get_if<Count>(&r.outcome)) {
                               n["count"] = c->value;
                           } else {
                               n["reason"] = std::get<Unreachable>(r.outcome).reason;
                           }
                           n["results"] = r.results_url;
                           nodes.push_back(std::move(n));
                       }
                       j["remote"] = {{"local", b.counts.local_count}, {"nodes", std::move(nodes)}};
                   },
                   [&](const AckBody& b) {
                       j["ack"] = {{"action", b.action}, {"ref", b.ref}, {"changed", b.changed}};
                   },
                   [&](const ErrorBody& b) {
                       j["error"] = {{"code", std::string(to_string(b.code))}, {"message", b.message}};
                   },
               },
               envelope.body);
    return j;
}

ResponseEnvelope decode_json(const nlohmann::json& j) {
    try {
        ResponseEnvelope out;
        for (const auto& p : j.at("query")) {
            out.query.emplace_back(p.at("keyword").get<std::string>(), p.at("value").get<std::string>());
        }
        if (j.contains("results")) {
            ResultsBody b;
            for (const auto& e : j.at("results").at("entries")) b.hits.push_back(entry_from_json(e));
            if (j.at("results").at("count").get<std::size_t>() != b.hits.size()) {
                bad("results count does not match the number of entries");
            }
            out.body = std::move(b);
        } else if (j.contains("count")) {
            out.body = CountBody{j.at("count").get<std::size_t>()};
        } else if (j.contains("suggestions")) {
            out.body = SuggestionsBody{j.at("suggestions").get<std::vector<std::string>>()};
        } else if (j.contains("remote")) {
            RemoteBody b;
            const auto& remote = j.at("remote");
            b.counts.local_count = remote.at("local").get<std::size_t>();
            for (const auto& n : remote.at("nodes")) {
                PeerResult r;
                r.node = {n.at("name").get<std::string>(), n.at("url").get<std::string>()};
                if (n.at("status") == "ok") {
                    r.outcome = Count{n.at("count").get<std::size_t>()};
                } else {
                    r.outcome = Unreachable{n.at("reason").get<std::string>()};
                }
                r.results_url = n.at("results").get<std::string>();
                b.counts.per_node.push_back(std::move(r));
            }
            out.body = std::move(b);
        } else if (j.contains("ack")) {
            const auto& a = j.at("ack");
            out.body = AckBody{a.at("action").get<std::string>(), a.at("ref").get<std::string>(),
                               a.at("changed").get<bool>()};
        } else if (j.contains("error")) {
            const auto label = j.at("error").at("code").get<std::string>();
            auto code = parse_error_code(label);
            if (!code) bad("unknown error code '" + label + "'");
            out.body = ErrorBody{*code, j.at("error").at("message").get<std::string>()};
        } else {
            bad("no body member");
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        bad(e.what());
    }
}

// --- HTML ----------------------------------------------------------------

std::string encode_html(const ResponseEnvelope& envelope) {
    std::string out = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>";
    std::string title;
    for (const auto& [k, v] : envelope.query) {
        if (k == "value" || k == "id") title += (title.empty() ? "'" : ", '") + v + "'";
    }
    for (const auto& [k, v] : envelope.query) {
        if (k == "domain") title += " (" + v + ")";
    }
    title = "Results for " + title;
    out += html_escape(title) + "</title></head>\n<body>\n<h1>" + html_escape(title) + "</h1>\n";
    std::visit(overloaded{
                   [&](const ResultsBody& b) {
                       out += "<p>" + std::to_string(b.hits.size()) + " results</p>\n";
                       for (const auto& e : b.hits) {
                           const auto j = entry_to_json(e);
                           out += "<div class=\"card\"><h2>" + html_escape(display_name(e)) + "</h2>";
                           if (const auto* r = std::get_if<ResourceDescriptor>(&e)) {
                               out += "<p>(" + html_escape(r->short_description) + ")</p>";
                               if (r->url) out += "<p>" + html_escape(*r->url) + "</p>";
                               out += "<p>" + html_escape(r->long_description) + "</p>";
                               for (const auto& [s, fields] : r->sections) {
                                   out += "<h3>" + html_escape(to_string(s)) + "</h3><ul>";
                                   for (const auto& f : fields) {
                                       out += "<li>" + html_escape(f.name) + ": " + html_escape(f.value) + "</li>";
                                   }
                                   out += "</ul>";
                               }
                           } else {
                               out += "<pre>" + html_escape(j.dump(2)) + "</pre>";
                           }
                           out += "</div>\n";
                       }
                   },
                   [&](const CountBody& b) { out += "<p>" + std::to_string(b.count) + " results</p>\n"; },
                   [&](const SuggestionsBody& b) {
                       out += "<ul>";
                       for (const auto& s : b.words) out += "<li>" + html_escape(s) + "</li>";
                       out += "</ul>\n";
                   },
                   [&](const RemoteBody& b) {
                       out += "<p>Local: " + std::to_string(b.counts.local_count) + " results</p>\n";
                       for (const auto& r : b.counts.per_node) {
                           out += "<h2>Results from " + html_escape(r.node.name) + "</h2><p>";
                           if (const auto* c = std::get_if<Count>(&r.outcome)) {
                               out += std::to_string(c->value) + " results";
                           } else {
                               out += "unreachable (" + html_escape(std::get<Unreachable>(r.outcome).reason) + ")";
                           }
                           out += "</p>\n";
                       }
                   },
                   [&](const AckBody& b) { out += "<p>" + html_escape(b.action + " " + b.ref) + "</p>\n"; },
                   [&](const ErrorBody& b) {
                       out += "<p class=\"error\">" + html_escape(to_string(b.code)) + ": " +
                              html_escape(b.message) + "</p>\n";
                   },
               },
               envelope.body);
    out += "</body></html>\n";
    return out;
}

} // namespace fedsearch
