#include "fedsearch/error.hpp"
#include "fedsearch/query.hpp"

#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace fedsearch;

namespace {

const std::filesystem::path kSource(FEDSEARCH_SOURCE_DIR);

QueryRequest lqf(std::string domain, std::vector<std::string> values) {
    return {Facility::LQF, std::move(domain), std::move(values), ValueMode::FreeText};
}

testkit::OracleResult run(const Catalog& catalog, const DomainConfig& domains, const QueryRequest& r) {
    try {
        return {testkit::OracleStatus::Ok, testkit::ids_of(local_query(catalog, domains, r).hits)};
    } catch (const RequestError&) {
        return {testkit::OracleStatus::BadRequest, {}};
    } catch (const DomainError&) {
        return {testkit::OracleStatus::UnknownDomain, {}};
    }
}

std::string describe(const QueryRequest& r) {
    std::string out = r.domain + ":";
    for (const auto& v : r.values) out += " [" + v + "]";
    return out;
}

bool same(const testkit::OracleResult& a, const testkit::OracleResult& b) {
    return a.status == b.status && a.ids == b.ids;
}

} // namespace

TEST(DomainConfig, ParsesAndSerializes) {
    const auto d = DomainConfig::parse("# c\n\nmission: Rosetta | Giotto\ntarget:Comets\n", "t");
    ASSERT_EQ(d.domains().size(), 2u);
    EXPECT_EQ(d.domains()[0].values, (std::vector<std::string>{"Rosetta", "Giotto"}));
    EXPECT_EQ(DomainConfig::parse(d.serialize(), "t"), d);
    EXPECT_TRUE(d.is_known("Resource"));
    EXPECT_TRUE(d.is_known("mission"));
    EXPECT_FALSE(d.is_known("Mission"));
    EXPECT_EQ(d.mode_for("mission"), ValueMode::Predefined);
    EXPECT_EQ(d.mode_for("Resource"), ValueMode::FreeText);
}

TEST(DomainConfig, RejectsMalformedLines) {
    EXPECT_THROW(DomainConfig::parse("mission Rosetta", "t"), ParseError);
    EXPECT_THROW(DomainConfig::parse("mission: a||b", "t"), ParseError);
    EXPECT_THROW(DomainConfig::parse("Resource: a", "t"), ParseError);
    EXPECT_THROW(DomainConfig::parse("a: x\na: y", "t"), ParseError);
    EXPECT_THROW(DomainConfig::parse("two words: x", "t"), ParseError);
}

TEST(LocalQuery, FixturePlanetQuery) {
    const auto catalog = load_catalog(kSource / "data" / "fixture");
    const auto domains = DomainConfig::load(kSource / "config" / "domains.conf");
    const auto result = local_query(catalog, domains, lqf("Resource", {"planet"}));
    EXPECT_EQ(result.count, 7u);
    ASSERT_EQ(result.hits.size(), 7u);
    EXPECT_EQ(display_name(result.hits[0]), "Data from the OSIRIS WAC instrument");
    EXPECT_EQ(display_name(result.hits[1]), "Solar System Data DB");
    EXPECT_EQ(display_name(result.hits[2]), "Hypervelocity impact facility: a two-stages light gas accelerator");
    EXPECT_EQ(local_query(catalog, domains, lqf("Resource", {"PLANET"})).hits, result.hits);
    EXPECT_EQ(local_query(catalog, domains, lqf("Resource", {"planet", "Rosetta"})).count, 2u);
}

TEST(LocalQuery, PredefinedDomains) {
    const auto catalog = load_catalog(kSource / "data" / "fixture");
    const auto domains = DomainConfig::load(kSource / "config" / "domains.conf");
    EXPECT_EQ(local_query(catalog, domains, lqf("mission", {"Rosetta"})).count, 2u);
    EXPECT_EQ(local_query(catalog, domains, lqf("mission", {"rosetta"})).count, 2u);
    EXPECT_EQ(local_query(catalog, domains, lqf("target", {"Comets"})).count, 2u);
    EXPECT_EQ(local_query(catalog, domains, lqf("mission", {"Giotto"})).count, 0u);
    EXPECT_THROW(local_query(catalog, domains, lqf("mission", {"Roset"})), RequestError);
    EXPECT_THROW(local_query(catalog, domains, lqf("mission", {"Rosetta", "Giotto"})), RequestError);
}

TEST(LocalQuery, Errors) {
    const Catalog catalog;
    const DomainConfig domains;
    EXPECT_THROW(local_query(catalog, domains, lqf("Galaxy", {"x"})), DomainError);
    EXPECT_THROW(local_query(catalog, domains, lqf("Resource", {})), RequestError);
    EXPECT_THROW(local_query(catalog, domains, lqf("Resource", {""})), RequestError);
    auto r = lqf("Resource", {"x"});
    r.facility = Facility::RQF;
    EXPECT_THROW(local_query(catalog, domains, r), RequestError);
    EXPECT_EQ(local_query(catalog, domains, lqf("Resource", {"x"})).count, 0u);
}

TEST(LocalQuery, AgreesWithBruteForceOracle) {
    testkit::Rng rng(101);
    const auto domains = testkit::test_domains();
    for (int i = 0; i < 300; ++i) {
        const auto raw = testkit::random_catalog(rng, 60);
        const auto catalog = Catalog::from_raw(raw);
        for (int q = 0; q < 20; ++q) {
            const auto r = testkit::random_request(rng, domains);
            ASSERT_TRUE(same(run(catalog, domains, r), testkit::oracle_local_query(raw, domains, r)))
                << describe(r);
        }
    }
}

TEST(LocalQuery, ConjunctionMonotonicityAndCaseLaws) {
    testkit::Rng rng(103);
    const auto domains = testkit::test_domains();
    for (int i = 0; i < 150; ++i) {
        const auto catalog = Catalog::from_raw(testkit::random_catalog(rng, 60));
        for (int q = 0; q < 10; ++q) {
            const auto collection = std::string(to_string(kAllCollections[rng.index(11)]));
            const auto a = testkit::random_value(rng);
            const auto b = testkit::random_value(rng);
            const auto ha = testkit::ids_of(local_query(catalog, domains, lqf(collection, {a})).hits);
            const auto hb = testkit::ids_of(local_query(catalog, domains, lqf(collection, {b})).hits);
            const auto hab = testkit::ids_of(local_query(catalog, domains, lqf(collection, {a, b})).hits);
            std::vector<EntryId> both;
            for (const auto& id : ha) {
                if (std::find(hb.begin(), hb.end(), id) != hb.end()) both.push_back(id);
            }
            ASSERT_EQ(hab, both) << "conjunction: " << a << " / " << b;
            ASSERT_LE(hab.size(), ha.size()) << "monotonicity";
            const auto flipped = testkit::flip_case(rng, a);
            ASSERT_EQ(testkit::ids_of(local_query(catalog, domains, lqf(collection, {flipped})).hits), ha)
                << "case: " << a << " vs " << flipped;
        }
    }
}

TEST(Suggest, FixtureExamples) {
    const auto catalog = load_catalog(kSource / "data" / "fixture");
    const auto words = suggest(catalog, "Resource", "plan");
    EXPECT_NE(std::find(words.begin(), words.end(), "planetary"), words.end());
    EXPECT_TRUE(suggest(catalog, "Resource", "zzz").empty());
    EXPECT_TRUE(suggest(catalog, "Resource", "   ").empty());
    EXPECT_TRUE(suggest(catalog, "mission", "ros").empty());
    EXPECT_EQ(suggest(catalog, "Keyword", " ROS "), std::vector<std::string>{"rosetta"});
    const auto inner = suggest(catalog, "Resource", "lanet", SuggestMatch::Substring);
    EXPECT_NE(std::find(inner.begin(), inner.end(), "planetary"), inner.end());
    EXPECT_TRUE(suggest(catalog, "Resource", "lanet").empty());
}

TEST(Suggest, AgreesWithRegexOracle) {
    testkit::Rng rng(107);
    for (int i = 0; i < 300; ++i) {
        const auto raw = testkit::random_catalog(rng, 80);
        const auto catalog = Catalog::from_raw(raw);
        for (int q = 0; q < 10; ++q) {
            const auto domain = rng.chance(0.9) ? std::string(to_string(kAllCollections[rng.index(11)]))
                                                : std::string("mission");
            auto fragment = testkit::random_value(rng);
            if (rng.chance(0.3)) fragment = fragment.substr(0, 1);
            if (rng.chance(0.1)) fragment = " " + fragment + " ";
            const bool substring = rng.chance(0.3);
            ASSERT_EQ(suggest(catalog, domain, fragment,
                              substring ? SuggestMatch::Substring : SuggestMatch::WordPrefix),
                      testkit::oracle_suggest(raw, domain, fragment, substring))
                << domain << " [" << fragment << "]";
        }
    }
}

TEST(SecondaryQuery, ReturnsExactlyTheEntry) {
    const auto catalog = load_catalog(kSource / "data" / "fixture");
    for (auto c : kAllCollections) {
        for (const auto& e : catalog.entries(c)) {
            const auto r = secondary_query(catalog, entry_id(e));
            ASSERT_EQ(r.count, 1u);
            ASSERT_EQ(r.hits.front(), e);
            EXPECT_EQ(r.echo.facility, Facility::SQF);
        }
    }
    EXPECT_EQ(secondary_query(catalog, {CollectionName::Keyword, "nope"}).count, 0u);
    const auto rosetta = secondary_query(catalog, {CollectionName::Keyword, "rosetta"});
    ASSERT_EQ(rosetta.count, 1u);
    const auto& k = std::get<KeywordEntry>(rosetta.hits.front());
    EXPECT_EQ(k.name, "Rosetta");
    EXPECT_EQ(k.type_id, (EntryId{CollectionName::KeywordType, "mission"}));
}
