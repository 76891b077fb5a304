#pragma once

#include "fedsearch/catalog_store.hpp"
#include "fedsearch/federation.hpp"
#include "fedsearch/query.hpp"
#include "fedsearch/service.hpp"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fedsearch {

enum class NodeMode {
    Normal,
    Stall, ///< accepts connections, answers /health, never answers anything else
    Down,  ///< not started; its port refuses connections
};

struct HarnessNodeSpec {
    std::string name;
    int port = 0; ///< 0 picks a free port at start
    std::optional<std::filesystem::path> data_directory; ///< nullopt: empty catalog
    NodeMode mode = NodeMode::Normal;

    bool operator==(const HarnessNodeSpec&) const = default;
};

/// A federation of in-process nodes. Grammar in docs/harness.md.
struct HarnessConfig {
    std::vector<HarnessNodeSpec> nodes;
    bool full_mesh = true;
    std::vector<std::pair<std::string, std::string>> edges; ///< from, to
    std::optional<std::filesystem::path> domains_file;
    std::chrono::milliseconds peer_timeout = kDefaultPeerTimeout;

    /// Relative paths resolve against `base`. Throws ParseError, including
    /// for repeated names, repeated non-zero ports and edges naming
    /// unknown nodes.
    static HarnessConfig parse(std::string_view text, const std::string& source,
                               const std::filesystem::path& base);
    static HarnessConfig load(const std::filesystem::path& path);

    const HarnessNodeSpec* find(std::string_view name) const;
    /// Peer names of `name` in config order.
    std::vector<std::string> peers_of(std::string_view name) const;
};

bool port_is_free(int port);

class Harness {
public:
    explicit Harness(HarnessConfig config);
    ~Harness();

    Harness(const Harness&) = delete;
    Harness& operator=(const Harness&) = delete;

    /// Checks every configured port, then starts the nodes and waits for
    /// their /health. Throws Error before starting anything when a port is
    /// taken, and stops what it started when a later step fails.
    void start();
    void stop();

    const HarnessConfig& config() const noexcept { return config_; }
    /// Throws Error for unknown names.
    std::string base_url(std::string_view name) const;
    /// Running Normal node, or nullptr.
    NodeServer* node(std::string_view name) const;

private:
    struct StallServer;

    HarnessConfig config_;
    std::map<std::string, int, std::less<>> ports_;
    std::vector<std::unique_ptr<NodeServer>> servers_;
    std::vector<std::unique_ptr<StallServer>> stalled_;
    bool running_ = false;
};

/// `EXPECT <node> <count|UNREACHABLE> [VIA <node>] FOR <query>`.
struct ScenarioStep {
    std::size_t line = 0;
    std::string node;
    std::optional<std::size_t> expected; ///< nullopt: UNREACHABLE
    std::optional<std::string> via;
    std::string query;

    bool operator==(const ScenarioStep&) const = default;
};

struct Scenario {
    std::vector<ScenarioStep> steps;

    static Scenario parse(std::string_view text, const std::string& source);
    static Scenario load(const std::filesystem::path& path);
};

struct StepOutcome {
    ScenarioStep step;
    std::string observed; ///< "<count>", "UNREACHABLE" or "ERROR <code>"
    bool passed = false;
};

struct ScenarioReport {
    std::vector<StepOutcome> outcomes;

    bool passed() const;
    /// One line per step plus a summary line; no timings, so runs compare
    /// equal byte for byte.
    std::string format() const;
};

/// Without VIA the query goes to the node's /query and the envelope count
/// is compared. With VIA it goes to the VIA node's /remote and the count
/// reported for the node (or the local count when both are the same) is
/// compared. Steps run in file order.
ScenarioReport run_scenario(const Harness& harness, const Scenario& scenario);

} // namespace fedsearch
