#include "fedsearch/federation.hpp"

#include "fedsearch/error.hpp"
#include "fedsearch/wire.hpp"
#include "fedsearch/xml.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace fedsearch {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string prefix; // path without trailing '/'
};

SplitUrl split_base_url(const std::string& base) {
    const auto sep = base.find("://");
    const auto path = base.find('/', sep == std::string::npos ? 0 : sep + 3);
    SplitUrl out;
    out.origin = base.substr(0, path);
    if (path != std::string::npos) out.prefix = base.substr(path);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

PeerOutcome read_count_reply(const std::string& body) {
    xml::Element root;
    try {
        root = xml::parse(body, "peer reply");
    } catch (const ParseError& e) {
        return Unreachable{"malformed reply: " + e.reason()};
    }
    if (root.name != "response") return Unreachable{"malformed reply: root <" + root.name + ">"};
    if (const auto* err = root.child("error")) {
        const auto* code = err->attribute("code");
        return Unreachable{"peer error " + (code ? *code : std::string("?")) + ": " + err->text};
    }
    const auto* count = root.child("count");
    if (count == nullptr) return Unreachable{"malformed reply: no <count>"};
    const auto text = trim(count->text);
    if (text.empty() || text.size() > 18 ||
        !std::all_of(text.begin(), text.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        return Unreachable{"malformed reply: bad count '" + std::string(text) + "'"};
    }
    return Count{static_cast<std::size_t>(std::stoull(std::string(text)))};
}

} // namespace

// --- NodeRegistry --------------------------------------------------------

NodeRegistry::NodeRegistry(std::string self_name, std::vector<NodeDescriptor> nodes)
    : self_name_(std::move(self_name)), nodes_(std::move(nodes)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.name.empty()) throw Error("registry entry with empty name");
        if (n.name == self_name_) throw Error("registry lists the local node '" + n.name + "'");
        if (!is_absolute_url(n.base_url) || n.base_url.rfind("http://", 0) != 0) {
            throw Error("invalid base URL for '" + n.name + "': " + n.base_url);
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (nodes_[j].name == n.name) throw Error("duplicate peer name '" + n.name + "'");
            if (nodes_[j].base_url == n.base_url) {
                throw Error("duplicate peer URL " + n.base_url);
            }
        }
    }
}

NodeRegistry NodeRegistry::parse(std::string_view text, const std::string& source,
                                 std::string self_name) {
    std::vector<NodeDescriptor> nodes;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'name = base_url'");
        NodeDescriptor n{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1)))};
        if (n.name == self_name) continue;
        nodes.push_back(std::move(n));
    }
    try {
        return NodeRegistry(std::move(self_name), std::move(nodes));
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(source, 0, e.what());
    }
}

NodeRegistry NodeRegistry::load(const std::filesystem::path& path, std::string self_name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string(), std::move(self_name));
}

// --- transport -----------------------------------------------------------

PeerOutcome HttpPeerTransport::fetch_count(const NodeDescriptor& node,
                                           const std::string& query_string,
                                           std::chrono::milliseconds timeout) {
    const auto url = split_base_url(node.base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    client.set_keep_alive(false);
    auto res = client.Get(url.prefix + "/query?" + query_string, {{"Accept", "application/xml"}});
    if (!res) return Unreachable{httplib::to_string(res.error())};
    return read_count_reply(res->body);
}

// --- fan-out -------------------------------------------------------------

std::string results_link(const NodeDescriptor& node, const QueryRequest& request) {
    QueryRequest lqf = request;
    lqf.facility = Facility::LQF;
    auto base = node.base_url;
    while (!base.empty() && base.back() == '/') base.pop_back();
    return base + "/query?" + encode_request(lqf);
}

RemoteCountSet remote_query(const NodeRegistry& registry, const QueryRequest& request,
                            std::size_t local_count, std::shared_ptr<PeerTransport> transport,
                            std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;

    QueryRequest rqf = request;
    rqf.facility = Facility::RQF;
    const auto query = encode_request(rqf);
    const auto& nodes = registry.nodes();

    struct Shared {
        std::mutex mutex;
        std::condition_variable done;
        std::vector<std::optional<PeerOutcome>> outcomes;
        std::size_t pending = 0;
    };
    auto shared = std::make_shared<Shared>();
    shared->outcomes.resize(nodes.size());
    shared->pending = nodes.size();

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        std::thread([shared, transport, node = nodes[i], query, timeout, i] {
            PeerOutcome outcome;
            try {
                outcome = transport->fetch_count(node, query, timeout);
            } catch (const std::exception& e) {
                outcome = Unreachable{e.what()};
            }
            std::lock_guard lock(shared->mutex);
            shared->outcomes[i] = std::move(outcome);
            --shared->pending;
            shared->done.notify_all();
        }).detach();
    }

    RemoteCountSet out;
    out.local_count = local_count;
    std::unique_lock lock(shared->mutex);
    shared->done.wait_until(lock, deadline, [&] { return shared->pending == 0; });
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        PeerResult r{nodes[i], Unreachable{"timeout"}, results_link(nodes[i], request)};
        if (shared->outcomes[i]) r.outcome = *shared->outcomes[i];
        out.per_node.push_back(std::move(r));
    }
    return out;
}

std::size_t answer_remote(const Catalog& catalog, const DomainConfig& domains,
                          const QueryRequest& request) {
    QueryRequest lqf = request;
    lqf.facility = Facility::LQF;
    return local_query(catalog, domains, lqf).count;
}

} // namespace fedsearch
