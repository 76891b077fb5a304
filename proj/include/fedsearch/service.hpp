#pragma once

#include "fedsearch/catalog_store.hpp"
#include "fedsearch/envelope.hpp"
#include "fedsearch/federation.hpp"
#include "fedsearch/query.hpp"

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace fedsearch {

/// Plain SO_REUSEADDR instead of httplib's SO_REUSEPORT, so that a second
/// server cannot bind a port that is already being served.
void use_exclusive_port(httplib::Server& server);

/// Routes a decoded request to its facility over one catalog snapshot:
/// LQF -> local_query, SUGGEST -> suggest, SQF -> secondary_query,
/// RQF -> answer_remote. Facility errors come back as error envelopes.
ResponseEnvelope handle(const Catalog& catalog, const DomainConfig& domains,
                        const QueryRequest& request,
                        SuggestMatch suggest_match = SuggestMatch::WordPrefix);

struct HandledQuery {
    ResponseEnvelope envelope;
    std::vector<std::string> warnings;
};

/// decode_request + handle. Total: every input yields a well-formed
/// envelope, decoding failures included.
HandledQuery handle_query_string(const Catalog& catalog, const DomainConfig& domains,
                                 std::string_view query,
                                 SuggestMatch suggest_match = SuggestMatch::WordPrefix);

struct NodeOptions {
    std::string name = "local";
    std::string host = "127.0.0.1";
    int port = 8080; ///< 0 picks a free port
    std::chrono::milliseconds peer_timeout = kDefaultPeerTimeout;
    std::string admin_token; ///< empty disables the admin routes
    SuggestMatch suggest_match = SuggestMatch::WordPrefix;
    /// Served under /ui when set.
    std::string ui_directory;
};

/// One federation node over HTTP.
///
///   GET    /query?...                      all facilities
///   GET    /remote?...                     RQF fan-out to every peer
///   GET    /health
///   POST   /admin/entry                    body: one <entry collection=..> element
///   DELETE /admin/entry/{collection}/{id}
///
/// Admin routes need the `X-Admin-Token` header. Replies are XML unless
/// the Accept header asks for application/json (or text/html for the
/// debug page).
class NodeServer {
public:
    NodeServer(NodeOptions options, std::shared_ptr<CatalogStore> store, DomainConfig domains,
               NodeRegistry registry,
               std::shared_ptr<PeerTransport> transport = std::make_shared<HttpPeerTransport>());
    ~NodeServer();

    NodeServer(const NodeServer&) = delete;
    NodeServer& operator=(const NodeServer&) = delete;

    /// Binds and starts serving on a background thread. Throws Error when
    /// the port cannot be bound.
    void start();
    /// Blocks the calling thread while serving.
    void run();
    void stop();

    int port() const noexcept { return port_; }
    std::string base_url() const;
    const NodeOptions& options() const noexcept { return options_; }
    const std::shared_ptr<CatalogStore>& store() const noexcept { return store_; }

    /// RQF fan-out for an already decoded request.
    RemoteCountSet fan_out(const QueryRequest& request) const;

private:
    void install_routes();
    int bind();

    NodeOptions options_;
    std::shared_ptr<CatalogStore> store_;
    DomainConfig domains_;
    NodeRegistry registry_;
    std::shared_ptr<PeerTransport> transport_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace fedsearch
