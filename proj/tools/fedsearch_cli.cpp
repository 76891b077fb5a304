// fedsearch: node operator tool.
//
// Exit codes: 0 ok, 1 violation or failed assertion, 2 usage, I/O or
// network error.

#include "fedsearch/catalog_store.hpp"
#include "fedsearch/envelope.hpp"
#include "fedsearch/error.hpp"
#include "fedsearch/harness.hpp"
#include "fedsearch/service.hpp"
#include "fedsearch/wire.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace fedsearch;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DomainConfig load_domains(const std::string& path) {
    return path.empty() ? DomainConfig{} : DomainConfig::load(path);
}

/// Where a query goes: a running node over HTTP, or a catalog directory
/// handled in-process.
struct Target {
    std::string node = "http://127.0.0.1:8080";
    std::string data;
    std::string domains;
    int timeout_ms = 10000;
};

void add_target_options(CLI::App* cmd, Target& t) {
    cmd->add_option("--node", t.node, "Base URL of the node")->envname("FEDSEARCH_NODE");
    cmd->add_option("--data", t.data, "Query a catalog directory in-process instead of a node");
    cmd->add_option("--domains", t.domains, "Domain config for --data")->envname("FEDSEARCH_DOMAINS");
    cmd->add_option("--timeout", t.timeout_ms, "HTTP timeout in milliseconds");
}

struct Reply {
    std::string body;
    std::string content_type;
};

Reply fetch(const Target& t, const std::string& path, bool json) {
    httplib::Client client(t.node);
    const std::chrono::milliseconds timeout(t.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    auto res = client.Get(path, {{"Accept", json ? "application/json" : "application/xml"}});
    if (!res) throw IoError("cannot reach " + t.node + ": " + httplib::to_string(res.error()));
    return {res->body, res->get_header_value("Content-Type")};
}

std::string summarize(const ResponseEnvelope& envelope) {
    std::ostringstream out;
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, ResultsBody>) {
                out << body.hits.size() << " results\n";
                for (const auto& e : body.hits) {
                    out << "  " << format_ref(entry_id(e)) << "  " << display_name(e) << "\n";
                }
            } else if constexpr (std::is_same_v<T, CountBody>) {
                out << body.count << " results\n";
            } else if constexpr (std::is_same_v<T, SuggestionsBody>) {
                out << body.words.size() << " suggestions\n";
                for (const auto& w : body.words) out << "  " << w << "\n";
            } else if constexpr (std::is_same_v<T, RemoteBody>) {
                out << "local: " << body.counts.local_count << " results\n";
                for (const auto& p : body.counts.per_node) {
                    out << "  " << p.node.name << ": ";
                    if (const auto* c = std::get_if<Count>(&p.outcome)) {
                        out << c->value << " results  " << p.results_url << "\n";
                    } else {
                        out << "unreachable (" << std::get<Unreachable>(p.outcome).reason << ")\n";
                    }
                }
            } else if constexpr (std::is_same_v<T, AckBody>) {
                out << body.action << " " << body.ref << (body.changed ? " done" : " no change") << "\n";
            } else {
                out << "error " << to_string(body.code) << ": " << body.message << "\n";
            }
        },
        envelope.body);
    return out.str();
}

std::string full_entries(const ResponseEnvelope& envelope) {
    const auto* results = std::get_if<ResultsBody>(&envelope.body);
    if (results == nullptr) return {};
    xml::Writer writer;
    writer.open("results");
    for (const auto& e : results->hits) xml::write_element(writer, entry_result_element(e));
    writer.close();
    return writer.finish();
}

/// Runs one request and prints it. Returns the exit code.
int run_request(const Target& t, const QueryRequest& request, bool remote, bool raw, bool json,
                bool full) {
    const auto query = encode_request(request);
    ResponseEnvelope envelope;
    if (!t.data.empty()) {
        if (remote) throw IoError("--remote needs a running node");
        const auto catalog = load_catalog(t.data);
        envelope = handle(catalog, load_domains(t.domains), request);
        if (raw || json) {
            std::cout << (json ? encode_json(envelope).dump(2) + "\n" : encode_xml(envelope));
            return std::holds_alternative<ErrorBody>(envelope.body) ? kViolation : kOk;
        }
    } else {
        const auto reply = fetch(t, (remote ? "/remote?" : "/query?") + query, json);
        envelope = json ? decode_json(nlohmann::json::parse(reply.body)) : decode_xml(reply.body);
        if (raw || json) {
            std::cout << reply.body;
            return std::holds_alternative<ErrorBody>(envelope.body) ? kViolation : kOk;
        }
    }
    std::cout << summarize(envelope);
    if (full) std::cout << full_entries(envelope);
    return std::holds_alternative<ErrorBody>(envelope.body) ? kViolation : kOk;
}

/// Blocks SIGINT/SIGTERM in every thread started afterwards; wait_for_signal
/// then picks them up synchronously.
sigset_t block_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    return set;
}

void wait_for_signal(const sigset_t& set) {
    int sig = 0;
    sigwait(&set, &sig);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated metadata search node and operator tools"};
    app.require_subcommand(1);
    int exit_code = kOk;

    // validate
    std::string validate_dir;
    auto* validate = app.add_subcommand("validate", "Check a catalog directory");
    validate->add_option("directory", validate_dir)->required();

    // query
    Target qt;
    std::string q_type = "LQF", q_domain;
    std::vector<std::string> q_values;
    bool q_remote = false, q_raw = false, q_json = false, q_full = false;
    auto* query = app.add_subcommand("query", "Send one request and print the reply");
    query->add_option("type", q_type, "LQF | RQF | SQF | SUGGEST")->required();
    query->add_option("domain", q_domain, "Search domain or collection")->required();
    query->add_option("values", q_values, "Search values (the id for SQF)")->required();
    query->add_flag("--remote", q_remote, "Fan out through the node's /remote endpoint");
    query->add_flag("--raw", q_raw, "Print the XML reply as received");
    query->add_flag("--json", q_json, "Ask for and print the JSON mirror");
    query->add_flag("--full", q_full, "Print every hit in full");
    add_target_options(query, qt);

    // suggest
    Target st;
    std::string s_domain, s_fragment;
    bool s_raw = false, s_json = false;
    auto* sug = app.add_subcommand("suggest", "Word suggestions for a fragment");
    sug->add_option("domain", s_domain)->required();
    sug->add_option("fragment", s_fragment)->required();
    sug->add_flag("--raw", s_raw);
    sug->add_flag("--json", s_json);
    add_target_options(sug, st);

    // upsert / remove
    Target at;
    std::string admin_token, upsert_file, rm_collection, rm_id;
    auto add_admin = [&](CLI::App* cmd) {
        cmd->add_option("--node", at.node, "Base URL of the node")->envname("FEDSEARCH_NODE");
        cmd->add_option("--data", at.data, "Edit a catalog directory directly instead");
        cmd->add_option("--token", admin_token, "Admin secret")->envname("FEDSEARCH_ADMIN_TOKEN");
        cmd->add_option("--timeout", at.timeout_ms, "HTTP timeout in milliseconds");
    };
    auto* upsert = app.add_subcommand("upsert", "Insert or replace one entry");
    upsert->add_option("file", upsert_file, "File holding one <entry collection=...> element")
        ->required();
    add_admin(upsert);
    auto* remove = app.add_subcommand("remove", "Remove one entry");
    remove->add_option("collection", rm_collection)->required();
    remove->add_option("id", rm_id)->required();
    add_admin(remove);

    // serve
    NodeOptions so;
    std::string sv_data, sv_registry, sv_domains;
    int sv_timeout_ms = static_cast<int>(kDefaultPeerTimeout.count());
    bool sv_substring = false;
    auto* serve = app.add_subcommand("serve", "Run a node");
    serve->add_option("--name", so.name, "Node name, skipped in the registry")->envname("FEDSEARCH_NAME");
    serve->add_option("--host", so.host)->envname("FEDSEARCH_HOST");
    serve->add_option("--port", so.port, "0 picks a free port")->envname("FEDSEARCH_PORT");
    serve->add_option("--data", sv_data, "Catalog directory")->envname("FEDSEARCH_DATA")->required();
    serve->add_option("--registry", sv_registry, "Peer registry file")->envname("FEDSEARCH_REGISTRY");
    serve->add_option("--domains", sv_domains, "Predefined domain config")->envname("FEDSEARCH_DOMAINS");
    serve->add_option("--timeout", sv_timeout_ms, "Peer timeout in milliseconds")
        ->envname("FEDSEARCH_TIMEOUT_MS")
        ->check(CLI::PositiveNumber);
    serve->add_option("--admin-token", so.admin_token, "Enables the admin routes")
        ->envname("FEDSEARCH_ADMIN_TOKEN");
    serve->add_option("--ui", so.ui_directory, "Static files served under /ui")->envname("FEDSEARCH_UI");
    serve->add_flag("--suggest-substring", sv_substring, "Suggest words containing the fragment");

    // harness
    std::string h_config, h_scenario;
    bool h_keep = false;
    auto* harness = app.add_subcommand("harness", "Start a multi-node federation");
    harness->add_option("config", h_config)->required();
    harness->add_option("--scenario", h_scenario, "Scenario file to run once all nodes are up");
    harness->add_flag("--keep-running", h_keep, "Keep serving after the scenario until interrupted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*validate) {
            const auto raw = read_catalog_directory(validate_dir);
            const auto violations = validate_catalog(raw);
            for (const auto& v : violations) std::cout << to_string(v) << "\n";
            std::size_t total = 0;
            for (const auto& [c, entries] : raw) total += entries.size();
            std::cout << total << " entries, " << violations.size() << " violations\n";
            exit_code = violations.empty() ? kOk : kViolation;
        } else if (*query) {
            const auto facility = parse_facility(q_type);
            if (!facility) throw RequestError("unknown type '" + q_type + "'");
            QueryRequest request{*facility, q_domain, q_values,
                                 load_domains(qt.data.empty() ? "" : qt.domains).mode_for(q_domain)};
            if (qt.data.empty()) {
                // The node decides the value mode; encode_request only needs the pairs.
                request.value_mode = ValueMode::FreeText;
            }
            exit_code = run_request(qt, request, q_remote, q_raw, q_json, q_full);
        } else if (*sug) {
            const QueryRequest request{Facility::SUGGEST, s_domain, {s_fragment}, ValueMode::FreeText};
            exit_code = run_request(st, request, false, s_raw, s_json, false);
        } else if (*upsert || *remove) {
            if (!at.data.empty()) {
                CatalogStore store(load_catalog(at.data), std::filesystem::path(at.data));
                if (*upsert) {
                    const auto root = xml::parse(read_file(upsert_file), upsert_file);
                    auto entry = entry_from_result_element(root, upsert_file);
                    const auto ref = format_ref(entry_id(entry));
                    store.upsert(std::move(entry));
                    std::cout << "upsert " << ref << " done\n";
                } else {
                    const auto collection = parse_collection_name(rm_collection);
                    if (!collection) throw RequestError("unknown collection '" + rm_collection + "'");
                    const EntryId id{*collection, rm_id};
                    std::cout << "remove " << format_ref(id)
                              << (store.remove(id) ? " done\n" : " no change\n");
                }
            } else {
                httplib::Client client(at.node);
                const std::chrono::milliseconds timeout(at.timeout_ms);
                client.set_connection_timeout(timeout);
                client.set_read_timeout(timeout);
                const httplib::Headers headers{{"X-Admin-Token", admin_token},
                                               {"Accept", "application/xml"}};
                auto res = *upsert
                               ? client.Post("/admin/entry", headers, read_file(upsert_file),
                                             "application/xml")
                               : client.Delete("/admin/entry/" + percent_encode(rm_collection) + "/" +
                                                   percent_encode(rm_id),
                                               headers);
                if (!res) throw IoError("cannot reach " + at.node + ": " + httplib::to_string(res.error()));
                const auto envelope = decode_xml(res->body);
                std::cout << summarize(envelope);
                exit_code = std::holds_alternative<ErrorBody>(envelope.body) ? kViolation : kOk;
            }
        } else if (*serve) {
            so.peer_timeout = std::chrono::milliseconds(sv_timeout_ms);
            so.suggest_match = sv_substring ? SuggestMatch::Substring : SuggestMatch::WordPrefix;
            auto store = std::make_shared<CatalogStore>(load_catalog(sv_data),
                                                        std::filesystem::path(sv_data));
            auto registry = sv_registry.empty() ? NodeRegistry(so.name, {})
                                                : NodeRegistry::load(sv_registry, so.name);
            const auto signals = block_signals();
            NodeServer server(so, std::move(store), load_domains(sv_domains), std::move(registry));
            server.start();
            std::cout << "node '" << so.name << "' serving " << server.base_url() << std::endl;
            wait_for_signal(signals);
            server.stop();
        } else if (*harness) {
            const auto signals = block_signals();
            Harness h(HarnessConfig::load(h_config));
            h.start();
            for (const auto& n : h.config().nodes) {
                std::cout << "node '" << n.name << "' " << h.base_url(n.name)
                          << (n.mode == NodeMode::Stall  ? " (stalled)"
                              : n.mode == NodeMode::Down ? " (down)"
                                                         : "")
                          << "\n";
            }
            std::cout << std::flush;
            if (!h_scenario.empty()) {
                const auto report = run_scenario(h, Scenario::load(h_scenario));
                std::cout << report.format() << std::flush;
                exit_code = report.passed() ? kOk : kViolation;
            }
            if (h_scenario.empty() || h_keep) wait_for_signal(signals);
            h.stop();
        }
    } catch (const ParseError& e) {
        std::cerr << "fedsearch: " << e.what() << "\n";
        return kUsage;
    } catch (const IntegrityError& e) {
        std::cerr << "fedsearch: " << e.what() << "\n";
        return kViolation;
    } catch (const std::exception& e) {
        std::cerr << "fedsearch: " << e.what() << "\n";
        return kUsage;
    }
    return exit_code;
}
