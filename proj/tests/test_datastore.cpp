#include <doctest.h>

#include <cmath>
#include <set>

#include "licem/dataset.hpp"
#include "licem/embedding.hpp"
#include "licem/split.hpp"
#include "support.hpp"

using namespace licem;
using licem::test::TempDir;
using licem::test::slurp;
using licem::test::spit;

namespace {

ConceptSchema cebab_schema() {
    ConceptSchema s;
    s.concept_names = {"Good Food", "Good Ambiance", "Good Service", "Good Noise"};
    s.class_names = {"negative", "neutral", "positive"};
    return s;
}

} // namespace

TEST_CASE("datastore: schema validation") {
    ConceptSchema s = cebab_schema();
    CHECK_NOTHROW(s.validate());
    CHECK(s.task_kind() == TaskKind::multiclass);

    ConceptSchema dup = s;
    dup.concept_names[1] = "Good Food";
    CHECK_THROWS_AS(dup.validate(), ConfigError);

    ConceptSchema one_class;
    one_class.concept_names = {"a"};
    one_class.class_names = {"only"};
    CHECK_THROWS_AS(one_class.validate(), ConfigError);

    CHECK(s.hash() != ConceptSchema{{"x"}, {"a", "b"}}.hash());
}

TEST_CASE("datastore: well-formed file loads and a short concept row is rejected") {
    TempDir tmp("ds");
    spit(tmp.file("schema.json"),
         R"({"concepts":["Good Food","Good Ambiance","Good Service","Good Noise"],"classes":["negative","neutral","positive"]})");
    spit(tmp.file("data.jsonl"),
         R"({"id":"a","text":"great pasta","label":2,"concepts":[1,0,1,0]}
{"id":"b","label":0,"concepts":[0,0,-1,0]}
{"id":"c","label":1}
)");
    Dataset ds = load_dataset(tmp.file("data.jsonl"), tmp.file("schema.json"));
    CHECK(ds.size() == 3);
    CHECK(ds.samples[0].text.value() == "great pasta");
    CHECK(ds.samples[1].concepts[2] == kUnknownConcept);
    CHECK_FALSE(ds.samples[2].has_concepts());

    spit(tmp.file("bad.jsonl"), R"({"id":"a","label":0,"concepts":[1,0,1]})");
    CHECK_THROWS_WITH_AS(load_dataset(tmp.file("bad.jsonl"), tmp.file("schema.json")),
                         doctest::Contains("'a'"), ParseError);

    spit(tmp.file("dup.jsonl"), "{\"id\":\"a\",\"label\":0}\n{\"id\":\"a\",\"label\":1}\n");
    CHECK_THROWS_WITH_AS(load_dataset(tmp.file("dup.jsonl"), tmp.file("schema.json")),
                         doctest::Contains("duplicate id"), ParseError);

    spit(tmp.file("range.jsonl"), R"({"id":"a","label":3})");
    CHECK_THROWS_WITH_AS(load_dataset(tmp.file("range.jsonl"), tmp.file("schema.json")),
                         doctest::Contains("label"), ParseError);
}

TEST_CASE("datastore: canonicalized dataset write-read round trip is byte identical") {
    TempDir tmp("ds_rt");
    Dataset ds;
    ds.schema = cebab_schema();
    for (int i = 0; i < 5; ++i) {
        Sample s;
        s.id = "r" + std::to_string(i);
        s.text = "review " + std::to_string(i);
        s.label = i % 3;
        s.concepts = {1, 0, i % 2, -1};
        ds.samples.push_back(s);
    }
    save_dataset(ds, tmp.file("a.jsonl"));
    Dataset again = load_dataset_with_schema(tmp.file("a.jsonl"), ds.schema);
    save_dataset(again, tmp.file("b.jsonl"));
    CHECK(slurp(tmp.file("a.jsonl")) == slurp(tmp.file("b.jsonl")));

    ds.schema.save(tmp.file("s1.json"));
    ConceptSchema s2 = ConceptSchema::load(tmp.file("s1.json"));
    s2.save(tmp.file("s2.json"));
    CHECK(slurp(tmp.file("s1.json")) == slurp(tmp.file("s2.json")));
}

TEST_CASE("datastore: embedding store io") {
    TempDir tmp("emb");
    EmbeddingStore store(4, "test encoder");
    store.put("a", {1.0, 2.0, 3.0, 4.0});
    store.put("b", {-1.0, 0.5, 0.25, 0.125});
    store.save(tmp.file("e.bin"));

    EmbeddingStore loaded = EmbeddingStore::load(tmp.file("e.bin"));
    CHECK(loaded.size() == 2);
    CHECK(loaded.dim() == 4);
    CHECK(loaded.provenance() == "test encoder");
    CHECK(loaded.get("b")[3] == 0.125);

    loaded.save(tmp.file("e2.bin"));
    CHECK(slurp(tmp.file("e.bin")) == slurp(tmp.file("e2.bin")));
}

TEST_CASE("datastore: embedding store rejects NaN naming the id") {
    EmbeddingStore store;
    CHECK_THROWS_WITH_AS(store.put("poison", {1.0, std::nan("")}), doctest::Contains("poison"),
                         ParseError);
}

TEST_CASE("datastore: wide vectors accepted and truncation reported with byte offset") {
    TempDir tmp("emb4096");
    EmbeddingStore store(4096, "wide");
    std::vector<double> v(4096, 0.5);
    store.put("w", v);
    store.save(tmp.file("wide.bin"));
    CHECK(EmbeddingStore::load(tmp.file("wide.bin")).dim() == 4096);

    std::string bytes = slurp(tmp.file("wide.bin"));
    spit(tmp.file("cut.bin"), bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_WITH_AS(EmbeddingStore::load(tmp.file("cut.bin")), doctest::Contains("byte"),
                         ParseError);

    spit(tmp.file("magic.bin"), "NOPE" + bytes.substr(4));
    CHECK_THROWS_WITH_AS(EmbeddingStore::load(tmp.file("magic.bin")), doctest::Contains("magic"),
                         ParseError);
}

TEST_CASE("datastore: split determinism, sizes and coverage") {
    Dataset ds;
    ds.schema = cebab_schema();
    for (int i = 0; i < 8; ++i) {
        Sample s;
        s.id = "s" + std::to_string(i);
        s.label = 0;
        ds.samples.push_back(s);
    }

    SplitSpec spec;
    spec.seed = 42;
    SplitResult a = split(ds, spec);
    CHECK(a.val.size() == 1); // 1/8 of 8
    CHECK(a.train.size() == 7);
    CHECK(a.test.empty());

    SplitResult b = split(ds, spec);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);

    spec.seed = 43;
    SplitResult c = split(ds, spec);
    CHECK(c.val.size() == 1);
    CHECK(c.train.size() == 7);
    const bool differs = c.val != a.val || c.train != a.train;
    CHECK(differs);

    std::set<int> seen;
    for (int i : a.train) {
        CHECK(seen.insert(i).second);
    }
    for (int i : a.val) {
        CHECK(seen.insert(i).second);
    }
    CHECK(seen.size() == ds.size());
}

TEST_CASE("datastore: explicit test partition honored, train/val derived") {
    TempDir tmp("split");
    Dataset ds;
    ds.schema = cebab_schema();
    for (int i = 0; i < 10; ++i) {
        Sample s;
        s.id = "s" + std::to_string(i);
        s.label = 0;
        ds.samples.push_back(s);
    }
    spit(tmp.file("split.json"), R"({"test":["s0","s9"]})");
    SplitSpec spec;
    spec.seed = 1;
    spec.validation_fraction = 0.25;
    spec.split_file = tmp.file("split.json");
    SplitResult r = split(ds, spec);
    CHECK(r.test == std::vector<int>{0, 9});
    CHECK(r.val.size() == 2); // 25% of the remaining 8
    CHECK(r.train.size() == 6);

    spit(tmp.file("overlap.json"), R"({"test":["s0"],"train":["s0"]})");
    SplitSpec bad = spec;
    bad.split_file = tmp.file("overlap.json");
    CHECK_THROWS_AS(split(ds, bad), ConfigError);
}

TEST_CASE("datastore: concept overlay replaces labels without touching the rest") {
    Dataset ds;
    ds.schema = cebab_schema();
    Sample s;
    s.id = "a";
    s.label = 1;
    s.concepts = {0, 0, 0, 0};
    ds.samples.push_back(s);

    ConceptFile overlay;
    overlay.entries.emplace_back("a", std::vector<int>{1, 1, 0, 1});
    Dataset out = apply_concepts(ds, overlay);
    CHECK(out.samples[0].concepts == std::vector<int>{1, 1, 0, 1});
    CHECK(out.samples[0].label == 1);
    CHECK(ds.samples[0].concepts == std::vector<int>{0, 0, 0, 0}); // source untouched
}
