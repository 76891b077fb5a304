#include "fedsearch/catalog_store.hpp"
#include "fedsearch/error.hpp"

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/store_ops.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

using namespace fedsearch;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("fedsearch-test-" + name + "-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

const fs::path kFixture = fs::path(FEDSEARCH_SOURCE_DIR) / "data" / "fixture";

} // namespace

TEST(Tokenize, MatchesRegexOracle) {
    testkit::Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        std::string text;
        const int n = rng.uniform(0, 30);
        for (int j = 0; j < n; ++j) text += static_cast<char>(rng.uniform(0, 255));
        if (rng.chance(0.5)) text = testkit::random_text(rng, 0, 6);
        std::vector<std::string> expected;
        static const std::regex word("[A-Za-z0-9\\x80-\\xff]+");
        for (std::sregex_iterator it(text.begin(), text.end(), word), end; it != end; ++it) {
            auto w = testkit::ascii_lower(it->str());
            if (w.size() >= 2) expected.push_back(w);
        }
        ASSERT_EQ(tokenize(text), expected) << text;
    }
}

TEST(Tokenize, Examples) {
    EXPECT_EQ(tokenize("On-line archive for planetary data"),
              (std::vector<std::string>{"on", "line", "archive", "for", "planetary", "data"}));
    EXPECT_EQ(tokenize("a B c2 Ångström"), (std::vector<std::string>{"c2", "Ångström"}));
}

TEST(Catalog, LoadsFixture) {
    const auto catalog = load_catalog(kFixture);
    EXPECT_EQ(catalog.entries(CollectionName::Resource).size(), 9u);
    const auto* rosetta = catalog.find({CollectionName::Keyword, "rosetta"});
    ASSERT_NE(rosetta, nullptr);
    EXPECT_EQ(display_name(*rosetta), "Rosetta");
    EXPECT_TRUE(catalog.word_index(CollectionName::Resource).contains("planetary"));
    EXPECT_FALSE(catalog.word_index(CollectionName::Resource).contains("italian"))
        << "long descriptions are not indexed";
}

TEST(Catalog, FromRawRejectsInvalidCatalogs) {
    RawCatalog raw;
    ResourceDescriptor r;
    r.id = {CollectionName::Resource, "a"};
    r.name = "A";
    r.links = {{CollectionName::Person, "nobody"}};
    raw[CollectionName::Resource] = {r};
    try {
        Catalog::from_raw(raw);
        FAIL();
    } catch (const IntegrityError& e) {
        ASSERT_EQ(e.problems().size(), 1u);
        EXPECT_NE(e.problems()[0].find("dangling-link"), std::string::npos);
    }
}

TEST(Catalog, UpsertRejectsDanglingLinksAndNameClashes) {
    const auto catalog = load_catalog(kFixture);
    ResourceDescriptor r;
    r.id = {CollectionName::Resource, "new"};
    r.name = "Solar System Data DB";
    EXPECT_THROW(upsert_entry(catalog, r), IntegrityError);
    r.name = "Fresh";
    r.links = {{CollectionName::Person, "nobody"}};
    EXPECT_THROW(upsert_entry(catalog, r), IntegrityError);
    r.links = {{CollectionName::Person, "mrossi"}};
    const auto next = upsert_entry(catalog, r);
    EXPECT_EQ(next.entries(CollectionName::Resource).size(), 10u);
    EXPECT_EQ(catalog.entries(CollectionName::Resource).size(), 9u) << "original untouched";
}

TEST(Catalog, RemoveRefusesReferencedEntries) {
    const auto catalog = load_catalog(kFixture);
    EXPECT_THROW(remove_entry(catalog, {CollectionName::Keyword, "rosetta"}), IntegrityError);
    const auto missing = remove_entry(catalog, {CollectionName::Keyword, "nope"});
    EXPECT_FALSE(missing.removed);
    const auto gone = remove_entry(catalog, {CollectionName::Resource, "meteor-radar"});
    EXPECT_TRUE(gone.removed);
    EXPECT_EQ(gone.catalog.find({CollectionName::Resource, "meteor-radar"}), nullptr);
    EXPECT_FALSE(gone.catalog.word_index(CollectionName::Resource).contains("radar"));
}

TEST(Catalog, RandomOperationSequencesKeepIndexesCoherent) {
    testkit::Rng rng(23);
    for (int round = 0; round < 20; ++round) {
        testkit::OpModel model;
        model.raw = testkit::random_catalog(rng, 40);
        CatalogStore store(Catalog::from_raw(model.raw));
        for (int op = 0; op < 150; ++op) {
            testkit::random_op(rng, store, model);
            if (op % 25 == 0) {
                const auto problem = testkit::index_mismatch(*store.snapshot(), model);
                ASSERT_EQ(problem, "") << "round " << round << " op " << op;
            }
        }
        ASSERT_EQ(testkit::index_mismatch(*store.snapshot(), model), "");
    }
}

TEST(Persistence, RoundTripIsIdentity) {
    testkit::Rng rng(5);
    const auto dir = temp_dir("persist");
    for (int i = 0; i < 40; ++i) {
        const auto catalog = Catalog::from_raw(testkit::random_catalog(rng, 80));
        store_catalog(catalog, dir);
        const auto back = load_catalog(dir);
        ASSERT_EQ(back.raw(), catalog.raw());
        for (auto c : kAllCollections) {
            ASSERT_EQ(back.word_index(c), catalog.word_index(c));
            ASSERT_EQ(fs::exists(dir / (std::string(to_string(c)) + ".xml")), !catalog.entries(c).empty());
        }
    }
    fs::remove_all(dir);
}

TEST(Persistence, FixtureSurvivesRewrite) {
    const auto dir = temp_dir("fixture");
    const auto catalog = load_catalog(kFixture);
    store_catalog(catalog, dir);
    EXPECT_EQ(load_catalog(dir).raw(), catalog.raw());
    fs::remove_all(dir);
}

TEST(Persistence, StoreWritesOnlyTheTouchedCollection) {
    const auto dir = temp_dir("touched");
    store_catalog(load_catalog(kFixture), dir);
    const auto person = dir / "Person.xml";
    write(person, std::string("<?xml version=\"1.0\"?>\n<Person>") +
                      "<Person id=\"mrossi\"><name>Edited outside</name></Person>" +
                      "<Person id=\"lbianchi\"><name>Laura Bianchi</name></Person></Person>");
    CatalogStore store(load_catalog(dir), dir);
    KeywordEntry k{{CollectionName::Keyword, "giotto"}, "Giotto", {CollectionName::KeywordType, "mission"}};
    store.upsert(k);
    EXPECT_NE(load_catalog(dir).find({CollectionName::Keyword, "giotto"}), nullptr);
    std::ifstream in(person);
    const std::string text((std::istreambuf_iterator<char>(in)), {});
    EXPECT_NE(text.find("Edited outside"), std::string::npos);
    EXPECT_TRUE(store.remove({CollectionName::Keyword, "giotto"}));
    EXPECT_EQ(load_catalog(dir).find({CollectionName::Keyword, "giotto"}), nullptr);
    fs::remove_all(dir);
}

TEST(Persistence, ReadErrorsNameTheFile) {
    EXPECT_THROW(read_catalog_directory("/nonexistent/fedsearch"), IoError);
    const auto dir = temp_dir("errors");
    write(dir / "Planet.xml", "<Planet/>");
    EXPECT_THROW(read_catalog_directory(dir), ParseError);
    fs::remove(dir / "Planet.xml");
    write(dir / "Keyword.xml", "<Keyword>\n<Keyword id=\"a\">\n<name>A</name>\n</Keyword>\n</Keyword>");
    try {
        read_catalog_directory(dir);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(e.source().find("Keyword.xml"), std::string::npos);
    }
    write(dir / "Keyword.xml", "<Keyword><Keyword id=\"a\"><name>A</name>");
    EXPECT_THROW(read_catalog_directory(dir), ParseError);
    fs::remove_all(dir);
}

TEST(Snapshot, ReadersSeeWholeVersionsDuringWrites) {
    auto store = std::make_shared<CatalogStore>(load_catalog(kFixture));
    std::atomic<bool> done{false};
    std::atomic<int> torn{0};
    std::atomic<int> reads{0};
    // Each upsert writes the same generation number into two collections;
    // a single snapshot must never show them apart by more than the one
    // write in progress.
    std::vector<std::thread> readers;
    for (int t = 0; t < 3; ++t) {
        readers.emplace_back([&] {
            while (!done) {
                const auto snap = store->snapshot();
                const auto a = snap->entries(CollectionName::Activity).size();
                const auto c = snap->entries(CollectionName::Country).size();
                if (a != c && a != c + 1) ++torn;
                const auto again = snap->entries(CollectionName::Activity).size();
                if (again != a) ++torn;
                ++reads;
            }
        });
    }
    for (int i = 0; i < 300; ++i) {
        store->upsert(GenericEntry{{CollectionName::Activity, "g" + std::to_string(i)}, {}});
        store->upsert(GenericEntry{{CollectionName::Country, "g" + std::to_string(i)}, {}});
    }
    done = true;
    for (auto& t : readers) t.join();
    EXPECT_EQ(torn.load(), 0);
    EXPECT_GT(reads.load(), 0);
}
