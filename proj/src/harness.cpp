#include "fedsearch/harness.hpp"

#include "fedsearch/envelope.hpp"
#include "fedsearch/error.hpp"

#include <httplib.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fedsearch {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    return lines;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

/// Next whitespace-delimited token, or a double-quoted string without
/// escapes. Advances `rest` past it.
std::optional<std::string> next_token(std::string_view& rest, const std::string& source,
                                      std::size_t line) {
    while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
    if (rest.empty()) return std::nullopt;
    if (rest.front() == '"') {
        const auto close = rest.find('"', 1);
        if (close == std::string_view::npos) throw ParseError(source, line, "unterminated quoted name");
        std::string token(rest.substr(1, close - 1));
        rest.remove_prefix(close + 1);
        if (!rest.empty() && !is_space(rest.front())) {
            throw ParseError(source, line, "expected whitespace after quoted name");
        }
        return token;
    }
    std::size_t end = 0;
    while (end < rest.size() && !is_space(rest[end])) ++end;
    std::string token(rest.substr(0, end));
    rest.remove_prefix(end);
    return token;
}

std::string require_token(std::string_view& rest, const std::string& source, std::size_t line,
                          const char* what) {
    auto token = next_token(rest, source, line);
    if (!token) throw ParseError(source, line, std::string("missing ") + what);
    return *token;
}

void require_end(std::string_view rest, const std::string& source, std::size_t line) {
    while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
    if (!rest.empty()) throw ParseError(source, line, "unexpected '" + std::string(rest) + "'");
}

std::optional<long long> parse_number(std::string_view text) {
    if (text.empty() || text.size() > 18) return std::nullopt;
    if (!std::all_of(text.begin(), text.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        return std::nullopt;
    }
    return std::stoll(std::string(text));
}

int pick_free_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error("cannot open socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    socklen_t len = sizeof addr;
    const bool ok = ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0 &&
                    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0;
    ::close(fd);
    if (!ok) throw Error("cannot find a free port");
    return ntohs(addr.sin_port);
}

std::string format_step(const ScenarioStep& step) {
    auto quote = [](const std::string& name) {
        return name.find_first_of(" \t") == std::string::npos ? name : "\"" + name + "\"";
    };
    std::string out = "EXPECT " + quote(step.node) + " " +
                      (step.expected ? std::to_string(*step.expected) : std::string("UNREACHABLE"));
    if (step.via) out += " VIA " + quote(*step.via);
    return out + " FOR " + step.query;
}

} // namespace

// --- HarnessConfig -------------------------------------------------------

HarnessConfig HarnessConfig::parse(std::string_view text, const std::string& source,
                                   const std::filesystem::path& base) {
    HarnessConfig config;
    std::optional<bool> wiring;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        auto rest = line;
        const auto keyword = next_token(rest, source, line_no);
        if (!keyword || keyword->front() == '#') continue;
        if (*keyword == "node") {
            HarnessNodeSpec node;
            node.name = require_token(rest, source, line_no, "node name");
            if (node.name.empty()) throw ParseError(source, line_no, "empty node name");
            const auto port_text = require_token(rest, source, line_no, "port");
            const auto port = parse_number(port_text);
            if (!port || *port > 65535) throw ParseError(source, line_no, "bad port '" + port_text + "'");
            node.port = static_cast<int>(*port);
            const auto data = require_token(rest, source, line_no, "data directory");
            if (data != "-") node.data_directory = base / data;
            if (auto mode = next_token(rest, source, line_no)) {
                if (*mode == "normal") node.mode = NodeMode::Normal;
                else if (*mode == "stall") node.mode = NodeMode::Stall;
                else if (*mode == "down") node.mode = NodeMode::Down;
                else throw ParseError(source, line_no, "unknown node mode '" + *mode + "'");
            }
            require_end(rest, source, line_no);
            for (const auto& other : config.nodes) {
                if (other.name == node.name) {
                    throw ParseError(source, line_no, "duplicate node name '" + node.name + "'");
                }
                if (node.port != 0 && other.port == node.port) {
                    throw ParseError(source, line_no, "duplicate port " + port_text);
                }
            }
            config.nodes.push_back(std::move(node));
        } else if (*keyword == "wiring") {
            const auto kind = require_token(rest, source, line_no, "wiring kind");
            require_end(rest, source, line_no);
            if (wiring) throw ParseError(source, line_no, "wiring given twice");
            if (kind == "full-mesh") wiring = true;
            else if (kind == "explicit") wiring = false;
            else throw ParseError(source, line_no, "unknown wiring '" + kind + "'");
        } else if (*keyword == "edge") {
            auto from = require_token(rest, source, line_no, "edge source");
            auto to = require_token(rest, source, line_no, "edge target");
            require_end(rest, source, line_no);
            if (from == to) throw ParseError(source, line_no, "edge from a node to itself");
            config.edges.emplace_back(std::move(from), std::move(to));
        } else if (*keyword == "domains") {
            config.domains_file = base / require_token(rest, source, line_no, "domains path");
            require_end(rest, source, line_no);
        } else if (*keyword == "timeout") {
            const auto ms_text = require_token(rest, source, line_no, "timeout");
            const auto ms = parse_number(ms_text);
            if (!ms || *ms == 0) throw ParseError(source, line_no, "bad timeout '" + ms_text + "'");
            config.peer_timeout = std::chrono::milliseconds(*ms);
            require_end(rest, source, line_no);
        } else {
            throw ParseError(source, line_no, "unknown directive '" + *keyword + "'");
        }
    }
    config.full_mesh = wiring.value_or(true);
    if (config.full_mesh && !config.edges.empty()) {
        throw ParseError(source, 0, "edges given with full-mesh wiring");
    }
    for (const auto& [from, to] : config.edges) {
        if (!config.find(from) || !config.find(to)) {
            throw ParseError(source, 0, "edge " + from + " -> " + to + " names an unknown node");
        }
    }
    if (config.nodes.empty()) throw ParseError(source, 0, "no nodes");
    return config;
}

HarnessConfig HarnessConfig::load(const std::filesystem::path& path) {
    return parse(read_file(path), path.string(), path.parent_path());
}

const HarnessNodeSpec* HarnessConfig::find(std::string_view name) const {
    const auto it = std::find_if(nodes.begin(), nodes.end(),
                                 [&](const HarnessNodeSpec& n) { return n.name == name; });
    return it == nodes.end() ? nullptr : &*it;
}

std::vector<std::string> HarnessConfig::peers_of(std::string_view name) const {
    std::vector<std::string> peers;
    for (const auto& n : nodes) {
        if (n.name == name) continue;
        const bool wired = full_mesh || std::any_of(edges.begin(), edges.end(), [&](const auto& e) {
                               return e.first == name && e.second == n.name;
                           });
        if (wired) peers.push_back(n.name);
    }
    return peers;
}

bool port_is_free(int port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return false;
    int yes = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    const bool ok = ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
    ::close(fd);
    return ok;
}

// --- Harness -------------------------------------------------------------

struct Harness::StallServer {
    httplib::Server server;
    std::thread thread;
    std::mutex mutex;
    std::condition_variable released;
    bool stopping = false;

    explicit StallServer(const std::string& name) {
        use_exclusive_port(server);
        server.Get("/health", [name](const httplib::Request&, httplib::Response& res) {
            res.set_content("ok " + name + "\n", "text/plain");
        });
        server.Get(R"(/.*)", [this](const httplib::Request&, httplib::Response& res) {
            std::unique_lock lock(mutex);
            released.wait(lock, [this] { return stopping; });
            res.status = 503;
        });
    }

    void start(int port) {
        if (!server.bind_to_port("127.0.0.1", port)) {
            throw Error("cannot bind 127.0.0.1:" + std::to_string(port));
        }
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    void stop() {
        {
            std::lock_guard lock(mutex);
            stopping = true;
        }
        released.notify_all();
        server.stop();
        if (thread.joinable()) thread.join();
    }

    ~StallServer() { stop(); }
};

Harness::Harness(HarnessConfig config) : config_(std::move(config)) {}

Harness::~Harness() { stop(); }

std::string Harness::base_url(std::string_view name) const {
    const auto it = ports_.find(name);
    if (it == ports_.end()) throw Error("unknown harness node '" + std::string(name) + "'");
    return "http://127.0.0.1:" + std::to_string(it->second);
}

NodeServer* Harness::node(std::string_view name) const {
    for (const auto& s : servers_) {
        if (s->options().name == name) return s.get();
    }
    return nullptr;
}

void Harness::start() {
    if (running_) return;
    for (const auto& n : config_.nodes) {
        if (n.port != 0 && !port_is_free(n.port)) {
            throw Error("port " + std::to_string(n.port) + " of node '" + n.name + "' is in use");
        }
    }
    ports_.clear();
    for (const auto& n : config_.nodes) ports_[n.name] = n.port != 0 ? n.port : pick_free_port();

    const auto domains =
        config_.domains_file ? DomainConfig::load(*config_.domains_file) : DomainConfig{};

    // Load every catalog before binding anything so bad data aborts cleanly.
    std::vector<Catalog> catalogs;
    for (const auto& n : config_.nodes) {
        catalogs.push_back(n.data_directory && n.mode == NodeMode::Normal
                               ? load_catalog(*n.data_directory)
                               : Catalog{});
    }

    running_ = true;
    try {
        for (std::size_t i = 0; i < config_.nodes.size(); ++i) {
            const auto& n = config_.nodes[i];
            if (n.mode == NodeMode::Down) continue;
            if (n.mode == NodeMode::Stall) {
                stalled_.push_back(std::make_unique<StallServer>(n.name));
                stalled_.back()->start(ports_[n.name]);
                continue;
            }
            std::vector<NodeDescriptor> peers;
            for (const auto& p : config_.peers_of(n.name)) peers.push_back({p, base_url(p)});
            NodeOptions options;
            options.name = n.name;
            options.port = ports_[n.name];
            options.peer_timeout = config_.peer_timeout;
            auto store = std::make_shared<CatalogStore>(std::move(catalogs[i]));
            servers_.push_back(std::make_unique<NodeServer>(
                options, std::move(store), domains, NodeRegistry(n.name, std::move(peers))));
            servers_.back()->start();
        }
        for (const auto& n : config_.nodes) {
            if (n.mode == NodeMode::Down) continue;
            httplib::Client client("127.0.0.1", ports_[n.name]);
            client.set_connection_timeout(std::chrono::milliseconds(200));
            bool healthy = false;
            for (int attempt = 0; attempt < 50 && !healthy; ++attempt) {
                const auto res = client.Get("/health");
                healthy = res && res->status == 200;
                if (!healthy) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            }
            if (!healthy) throw Error("node '" + n.name + "' did not become healthy");
        }
    } catch (...) {
        stop();
        throw;
    }
}

void Harness::stop() {
    if (!running_) return;
    for (auto& s : stalled_) s->stop();
    for (auto& s : servers_) s->stop();
    stalled_.clear();
    servers_.clear();
    running_ = false;
}

// --- scenarios -----------------------------------------------------------

Scenario Scenario::parse(std::string_view text, const std::string& source) {
    Scenario scenario;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        auto rest = line;
        const auto keyword = next_token(rest, source, line_no);
        if (!keyword || keyword->front() == '#') continue;
        if (*keyword != "EXPECT") throw ParseError(source, line_no, "expected EXPECT");
        ScenarioStep step;
        step.line = line_no;
        step.node = require_token(rest, source, line_no, "node name");
        const auto expected = require_token(rest, source, line_no, "expected count");
        if (expected != "UNREACHABLE") {
            const auto n = parse_number(expected);
            if (!n) throw ParseError(source, line_no, "bad expected count '" + expected + "'");
            step.expected = static_cast<std::size_t>(*n);
        }
        auto word = require_token(rest, source, line_no, "FOR");
        if (word == "VIA") {
            step.via = require_token(rest, source, line_no, "VIA node");
            word = require_token(rest, source, line_no, "FOR");
        }
        if (word != "FOR") throw ParseError(source, line_no, "expected FOR, found '" + word + "'");
        while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
        while (!rest.empty() && is_space(rest.back())) rest.remove_suffix(1);
        if (rest.empty()) throw ParseError(source, line_no, "missing query");
        step.query = std::string(rest);
        scenario.steps.push_back(std::move(step));
    }
    return scenario;
}

Scenario Scenario::load(const std::filesystem::path& path) {
    return parse(read_file(path), path.string());
}

bool ScenarioReport::passed() const {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const StepOutcome& o) { return o.passed; });
}

std::string ScenarioReport::format() const {
    std::string out;
    std::size_t passed_steps = 0;
    for (const auto& o : outcomes) {
        passed_steps += o.passed ? 1 : 0;
        out += (o.passed ? "PASS " : "FAIL ") + std::string("line ") + std::to_string(o.step.line) +
               ": " + format_step(o.step) + " -> " + o.observed + "\n";
    }
    out += std::to_string(passed_steps) + "/" + std::to_string(outcomes.size()) + " steps passed\n";
    return out;
}

ScenarioReport run_scenario(const Harness& harness, const Scenario& scenario) {
    const auto client_timeout = harness.config().peer_timeout + std::chrono::milliseconds(2000);
    ScenarioReport report;
    for (const auto& step : scenario.steps) {
        StepOutcome outcome{step, "UNREACHABLE", false};
        const auto& target = step.via ? *step.via : step.node;
        if (harness.config().find(target) == nullptr || harness.config().find(step.node) == nullptr) {
            outcome.observed = "ERROR unknown node";
            report.outcomes.push_back(std::move(outcome));
            continue;
        }
        httplib::Client client(harness.base_url(target));
        client.set_connection_timeout(client_timeout);
        client.set_read_timeout(client_timeout);
        const auto path = std::string(step.via ? "/remote?" : "/query?") + step.query;
        const auto res = client.Get(path, {{"Accept", "application/xml"}});
        std::optional<std::size_t> count;
        if (res && (res->status == 200 || !res->body.empty())) {
            try {
                const auto envelope = decode_xml(res->body);
                if (const auto* err = std::get_if<ErrorBody>(&envelope.body)) {
                    outcome.observed = "ERROR " + std::string(to_string(err->code));
                } else if (const auto* remote = std::get_if<RemoteBody>(&envelope.body)) {
                    if (step.node == *step.via) {
                        count = remote->counts.local_count;
                    } else {
                        const auto& per = remote->counts.per_node;
                        const auto it = std::find_if(per.begin(), per.end(), [&](const PeerResult& r) {
                            return r.node.name == step.node;
                        });
                        if (it == per.end()) {
                            outcome.observed = "ERROR not a peer of " + *step.via;
                        } else if (const auto* c = std::get_if<Count>(&it->outcome)) {
                            count = c->value;
                        }
                    }
                } else {
                    count = envelope_count(envelope);
                    if (!count) outcome.observed = "ERROR no count in reply";
                }
            } catch (const Error&) {
                outcome.observed = "ERROR malformed reply";
            }
        }
        if (count) outcome.observed = std::to_string(*count);
        outcome.passed = step.expected ? count == step.expected : outcome.observed == "UNREACHABLE";
        report.outcomes.push_back(std::move(outcome));
    }
    return report;
}

} // namespace fedsearch
