#pragma once

#include "fedsearch/catalog_model.hpp"
#include "fedsearch/query.hpp"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fedsearch {

/// Peers of the local node, in display order. The local node never lists
/// itself.
class NodeRegistry {
public:
    NodeRegistry() = default;

    /// Throws Error when a peer carries `self_name`, a base URL is invalid,
    /// or two peers share a name or base URL.
    NodeRegistry(std::string self_name, std::vector<NodeDescriptor> nodes);

    /// File format, UTF-8, one peer per line: `name = base_url`. Blank
    /// lines and '#' comments are ignored. Peers named `self_name` are
    /// skipped so that one shared file can serve the whole federation.
    static NodeRegistry parse(std::string_view text, const std::string& source,
                              std::string self_name);
    static NodeRegistry load(const std::filesystem::path& path, std::string self_name);

    const std::string& self_name() const noexcept { return self_name_; }
    const std::vector<NodeDescriptor>& nodes() const noexcept { return nodes_; }

private:
    std::string self_name_;
    std::vector<NodeDescriptor> nodes_;
};

struct Count {
    std::size_t value = 0;
    bool operator==(const Count&) const = default;
};

struct Unreachable {
    std::string reason;
    bool operator==(const Unreachable&) const = default;
};

using PeerOutcome = std::variant<Count, Unreachable>;

struct PeerResult {
    NodeDescriptor node;
    PeerOutcome outcome;
    /// Where the peer's own result list for this query lives.
    std::string results_url;

    bool operator==(const PeerResult&) const = default;
};

struct RemoteCountSet {
    std::vector<PeerResult> per_node;
    std::size_t local_count = 0;

    bool operator==(const RemoteCountSet&) const = default;
};

/// How a single count request reaches a peer.
class PeerTransport {
public:
    virtual ~PeerTransport() = default;

    /// Must give up after roughly `timeout`; remote_query does not wait
    /// longer than that either way.
    virtual PeerOutcome fetch_count(const NodeDescriptor& node, const std::string& query_string,
                                    std::chrono::milliseconds timeout) = 0;
};

/// GET `<base_url>/query?<query>` and read the `<count>` of the XML reply.
class HttpPeerTransport final : public PeerTransport {
public:
    PeerOutcome fetch_count(const NodeDescriptor& node, const std::string& query_string,
                            std::chrono::milliseconds timeout) override;
};

inline constexpr std::chrono::milliseconds kDefaultPeerTimeout{5000};

/// `<base_url>/query?<request as LQF>`.
std::string results_link(const NodeDescriptor& node, const QueryRequest& request);

/// Sends the request (coerced to RQF) to every peer at once and collects
/// one outcome per peer in registry order. Returns no later than `timeout`
/// after the call started; peers that have not answered by then are
/// Unreachable("timeout"). Single attempt per peer. Late workers keep the
/// transport alive through the shared_ptr.
RemoteCountSet remote_query(const NodeRegistry& registry, const QueryRequest& request,
                            std::size_t local_count, std::shared_ptr<PeerTransport> transport,
                            std::chrono::milliseconds timeout = kDefaultPeerTimeout);

/// Server side of RQF: the LQF count of the same request.
std::size_t answer_remote(const Catalog& catalog, const DomainConfig& domains,
                          const QueryRequest& request);

} // namespace fedsearch
