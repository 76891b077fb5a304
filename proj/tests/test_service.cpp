#include "fedsearch/catalog_store.hpp"
#include "fedsearch/error.hpp"
#include "fedsearch/service.hpp"
#include "fedsearch/wire.hpp"

#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <filesystem>

using namespace fedsearch;

namespace {

const std::filesystem::path kSource(FEDSEARCH_SOURCE_DIR);

const Catalog& fixture() {
    static const Catalog c = load_catalog(kSource / "data/fixture");
    return c;
}

const DomainConfig& domains() {
    static const DomainConfig d = DomainConfig::load(kSource / "config/domains.conf");
    return d;
}

std::optional<ErrorCode> error_of(const ResponseEnvelope& e) {
    if (const auto* err = std::get_if<ErrorBody>(&e.body)) return err->code;
    return std::nullopt;
}

/// Node over a private copy of the fixture.
struct LiveNode {
    std::unique_ptr<NodeServer> server;
    std::unique_ptr<httplib::Client> client;

    explicit LiveNode(std::string name, NodeRegistry registry = {}, std::string token = "s3cret") {
        NodeOptions options;
        options.name = std::move(name);
        options.port = 0;
        options.admin_token = std::move(token);
        options.peer_timeout = std::chrono::milliseconds(1000);
        server = std::make_unique<NodeServer>(options, std::make_shared<CatalogStore>(fixture()), domains(),
                                              std::move(registry));
        server->start();
        client = std::make_unique<httplib::Client>(server->base_url());
    }
    ~LiveNode() { server->stop(); }

    ResponseEnvelope get(const std::string& path) {
        auto res = client->Get(path);
        if (!res) throw std::runtime_error("no reply for " + path);
        return decode_xml(res->body);
    }
};

} // namespace

TEST(Handle, RoutesEachFacility) {
    const QueryRequest lqf{Facility::LQF, "Resource", {"planet"}, ValueMode::FreeText};
    auto env = handle(fixture(), domains(), lqf);
    ASSERT_TRUE(std::holds_alternative<ResultsBody>(env.body));
    EXPECT_EQ(std::get<ResultsBody>(env.body).hits.size(), 7u);
    EXPECT_EQ(env.query, request_pairs(lqf));

    auto rqf = lqf;
    rqf.facility = Facility::RQF;
    EXPECT_EQ(handle(fixture(), domains(), rqf).body, EnvelopeBody(CountBody{7}));

    const QueryRequest sqf{Facility::SQF, "Keyword", {"rosetta"}, ValueMode::FreeText};
    env = handle(fixture(), domains(), sqf);
    ASSERT_TRUE(std::holds_alternative<ResultsBody>(env.body));
    EXPECT_EQ(entry_id(std::get<ResultsBody>(env.body).hits.at(0)), (EntryId{CollectionName::Keyword, "rosetta"}));

    const QueryRequest sug{Facility::SUGGEST, "Resource", {"plan"}, ValueMode::FreeText};
    EXPECT_EQ(handle(fixture(), domains(), sug).body,
              EnvelopeBody(SuggestionsBody{{"planetary", "planets"}}));
}

TEST(Handle, MapsFailuresToErrorCodes) {
    EXPECT_EQ(error_of(handle(fixture(), domains(), {Facility::LQF, "Nope", {"x"}, ValueMode::FreeText})),
              ErrorCode::DomainUnknown);
    EXPECT_EQ(error_of(handle(fixture(), domains(), {Facility::LQF, "Resource", {}, ValueMode::FreeText})),
              ErrorCode::BadRequest);
    EXPECT_EQ(error_of(handle(fixture(), domains(), {Facility::SQF, "Nope", {"x"}, ValueMode::FreeText})),
              ErrorCode::DomainUnknown);
    EXPECT_EQ(error_of(handle(fixture(), domains(), {Facility::SUGGEST, "mission", {"x"}, ValueMode::FreeText})),
              std::nullopt);
    EXPECT_EQ(error_of(handle(fixture(), domains(), {Facility::SUGGEST, "Nope", {"x"}, ValueMode::FreeText})),
              ErrorCode::DomainUnknown);
    EXPECT_EQ(error_of(handle(fixture(), domains(),
                              {Facility::LQF, "mission", {"Venus Express"}, ValueMode::Predefined})),
              ErrorCode::BadRequest);
}

TEST(Handle, ErrorEnvelopesEchoTheRequest) {
    const QueryRequest bad{Facility::LQF, "Nope", {"x"}, ValueMode::FreeText};
    EXPECT_EQ(handle(fixture(), domains(), bad).query, request_pairs(bad));
    const QueryRequest empty{Facility::RQF, "Resource", {""}, ValueMode::FreeText};
    EXPECT_EQ(handle(fixture(), domains(), empty).query, request_pairs(empty));
}

TEST(Handle, SqfOfUnknownIdIsEmptyNotAnError) {
    const auto env = handle(fixture(), domains(), {Facility::SQF, "Person", {"nobody"}, ValueMode::FreeText});
    EXPECT_EQ(env.body, EnvelopeBody(ResultsBody{}));
}

TEST(Handle, QueryStringIsTotal) {
    testkit::Rng rng(4242);
    for (int i = 0; i < 10000; ++i) {
        const auto q = testkit::random_query_string(rng);
        HandledQuery h;
        ASSERT_NO_THROW(h = handle_query_string(fixture(), domains(), q)) << q;
        // Control bytes and broken UTF-8 are sanitized once, then stable.
        const auto xml_text = encode_xml(h.envelope);
        ASSERT_EQ(encode_xml(decode_xml(xml_text)), xml_text) << q;
    }
}

TEST(Handle, UndecodableQueryEchoesItsPairs) {
    const auto h = handle_query_string(fixture(), domains(), "type=LQF&domain=Resource&type=RQF");
    EXPECT_EQ(error_of(h.envelope), ErrorCode::BadRequest);
    EXPECT_EQ(h.envelope.query, parse_query_string("type=LQF&domain=Resource&type=RQF"));

    const auto w = handle_query_string(fixture(), domains(), "type=RQF&domain=Resource&value=planet&lang=en");
    EXPECT_EQ(w.envelope.body, EnvelopeBody(CountBody{7}));
    EXPECT_EQ(w.warnings.size(), 1u);
}

TEST(Handle, RemoteCountEqualsLocalCountOnRandomCatalogs) {
    testkit::Rng rng(99);
    const auto doms = testkit::test_domains();
    for (int c = 0; c < 100; ++c) {
        const auto catalog = Catalog::from_raw(testkit::random_catalog(rng, 60));
        for (int q = 0; q < 20; ++q) {
            auto request = testkit::random_request(rng, doms);
            const auto local = handle(catalog, doms, request);
            request.facility = Facility::RQF;
            const auto remote = handle(catalog, doms, request);
            if (const auto* r = std::get_if<ResultsBody>(&local.body)) {
                ASSERT_EQ(remote.body, EnvelopeBody(CountBody{r->hits.size()}));
            } else {
                ASSERT_EQ(error_of(remote), error_of(local));
            }
        }
    }
}

TEST(Http, QueryNegotiatesFormat) {
    LiveNode node("A");
    auto xml_res = node.client->Get("/query?type=LQF&domain=Resource&value=planet");
    ASSERT_TRUE(xml_res);
    EXPECT_EQ(xml_res->status, 200);
    EXPECT_EQ(xml_res->get_header_value("Content-Type").rfind("application/xml", 0), 0u);
    EXPECT_EQ(envelope_count(decode_xml(xml_res->body)), 7u);

    auto json_res = node.client->Get("/query?type=LQF&domain=Resource&value=planet",
                                     {{"Accept", "application/json"}});
    ASSERT_TRUE(json_res);
    EXPECT_EQ(decode_json(nlohmann::json::parse(json_res->body)), decode_xml(xml_res->body));

    auto html_res = node.client->Get("/query?type=LQF&domain=Resource&value=planet", {{"Accept", "text/html"}});
    ASSERT_TRUE(html_res);
    EXPECT_NE(html_res->body.find("<!DOCTYPE html>"), std::string::npos);

    auto health = node.client->Get("/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->body, "ok A\n");
}

TEST(Http, ErrorsCarryStatusAndEnvelope) {
    LiveNode node("A");
    auto res = node.client->Get("/query?type=LQF&domain=Nope&value=x");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    EXPECT_EQ(error_of(decode_xml(res->body)), ErrorCode::DomainUnknown);

    res = node.client->Get("/query?type=BOGUS");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);

    res = node.client->Get("/no/such/route");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    EXPECT_EQ(error_of(decode_xml(res->body)), ErrorCode::BadRequest);
}

TEST(Http, WarningsComeBackAsHeaders) {
    LiveNode node("A");
    auto res = node.client->Get("/query?type=RQF&domain=Resource&value=planet&colour=red");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_TRUE(res->has_header("X-Query-Warning"));
}

TEST(Http, AdminNeedsTheToken) {
    LiveNode node("A");
    const std::string body = R"(<entry collection="Keyword" id="giotto"><name>Giotto</name>)"
                             R"(<type ref="KeywordType:mission"/></entry>)";
    auto res = node.client->Post("/admin/entry", body, "application/xml");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 403);
    res = node.client->Post("/admin/entry", {{"X-Admin-Token", "wrong"}}, body, "application/xml");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 403);

    LiveNode closed("B", {}, "");
    res = closed.client->Post("/admin/entry", {{"X-Admin-Token", ""}}, body, "application/xml");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 403);
}

TEST(Http, AdminUpsertAndDeleteAreVisibleToQueries) {
    LiveNode node("A");
    const httplib::Headers auth{{"X-Admin-Token", "s3cret"}};
    const std::string body = R"(<entry collection="Keyword" id="giotto"><name>Giotto</name>)"
                             R"(<type ref="KeywordType:mission"/></entry>)";
    auto res = node.client->Post("/admin/entry", auth, body, "application/xml");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(decode_xml(res->body).body, EnvelopeBody(AckBody{"upsert", "Keyword:giotto", true}));
    EXPECT_EQ(envelope_count(node.get("/query?type=LQF&domain=Keyword&value=giotto")), 1u);

    const std::string dangling = R"(<entry collection="Keyword" id="x"><name>X</name>)"
                                 R"(<type ref="KeywordType:nope"/></entry>)";
    res = node.client->Post("/admin/entry", auth, dangling, "application/xml");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 409);

    res = node.client->Post("/admin/entry", auth, "<entry", "application/xml");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);

    res = node.client->Delete("/admin/entry/KeywordType/mission", auth);
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 409) << "still referenced by rosetta and giotto";

    res = node.client->Delete("/admin/entry/Keyword/giotto", auth);
    ASSERT_TRUE(res);
    EXPECT_EQ(decode_xml(res->body).body, EnvelopeBody(AckBody{"remove", "Keyword:giotto", true}));
    res = node.client->Delete("/admin/entry/Keyword/giotto", auth);
    ASSERT_TRUE(res);
    EXPECT_EQ(decode_xml(res->body).body, EnvelopeBody(AckBody{"remove", "Keyword:giotto", false}));
    EXPECT_EQ(envelope_count(node.get("/query?type=LQF&domain=Keyword&value=giotto")), 0u);

    res = node.client->Delete("/admin/entry/Planet/x", auth);
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
}

TEST(Http, RemoteFansOutToPeers) {
    LiveNode peer("B");
    LiveNode dead_slot("C");
    const auto dead_url = dead_slot.server->base_url();
    dead_slot.server->stop();

    LiveNode portal("A", NodeRegistry("A", {{"B", peer.server->base_url()}, {"C", dead_url}}));
    const auto env = portal.get("/remote?type=LQF&domain=Resource&value=planet");
    const auto* body = std::get_if<RemoteBody>(&env.body);
    ASSERT_NE(body, nullptr);
    EXPECT_EQ(env.query, parse_query_string("type=RQF&domain=Resource&value=planet"));
    EXPECT_EQ(body->counts.local_count, 7u);
    ASSERT_EQ(body->counts.per_node.size(), 2u);
    EXPECT_EQ(body->counts.per_node[0].outcome, PeerOutcome(Count{7}));
    EXPECT_TRUE(std::holds_alternative<Unreachable>(body->counts.per_node[1].outcome));

    // A peer answering an RQF and the same node answering the LQF agree.
    EXPECT_EQ(envelope_count(peer.get("/query?type=RQF&domain=target&value=comets")),
              envelope_count(peer.get("/query?type=LQF&domain=target&value=comets")));
}

TEST(Http, FuzzedQueryStringsAlwaysGetAnEnvelope) {
    LiveNode node("A");
    testkit::Rng rng(515);
    for (int i = 0; i < 300; ++i) {
        const auto q = testkit::random_query_string(rng);
        auto res = node.client->Get("/query?" + q);
        ASSERT_TRUE(res) << q;
        ASSERT_NO_THROW(decode_xml(res->body)) << q;
    }
}
