#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "wclre/records.hpp"

using namespace wclre;
using testutil::make_instance;

TEST_CASE("well-formed record parses to the expected instance") {
  const std::string line =
      R"({"tokens":["joe","biden","leads","america"],"head":[0,2],"tail":[3,4],"relation":"leader_of"})";
  const Instance inst = parse_instance_record(line);
  CHECK(inst.tokens == std::vector<std::string>{"joe", "biden", "leads", "america"});
  CHECK(inst.head == Span{0, 2});
  CHECK(inst.tail == Span{3, 4});
  CHECK(inst.relation.name == "leader_of");
  CHECK_FALSE(inst.confidence.has_value());
}

TEST_CASE("empty span is rejected") {
  const std::string line =
      R"({"tokens":["a","b","c","d"],"head":[3,3],"tail":[0,1],"relation":"r"})";
  CHECK_THROWS_WITH(parse_instance_record(line), Catch::Matchers::ContainsSubstring("empty span"));
}

TEST_CASE("span past the sentence is rejected") {
  const std::string line = R"({"tokens":["a","b"],"head":[0,1],"tail":[1,3],"relation":"r"})";
  CHECK_THROWS_WITH(parse_instance_record(line),
                    Catch::Matchers::ContainsSubstring("span out of bounds"));
}

TEST_CASE("confidence passes through") {
  const std::string line =
      R"({"tokens":["a","b"],"head":[0,1],"tail":[1,2],"relation":"r","confidence":0.75})";
  CHECK(parse_instance_record(line).confidence == 0.75);
}

TEST_CASE("malformed records name the offending field") {
  CHECK_THROWS_WITH(parse_instance_record(R"({"head":[0,1],"tail":[1,2],"relation":"r"})"),
                    Catch::Matchers::ContainsSubstring("tokens"));
  CHECK_THROWS_WITH(
      parse_instance_record(R"({"tokens":["a","b"],"head":"x","tail":[1,2],"relation":"r"})"),
      Catch::Matchers::ContainsSubstring("head"));
  CHECK_THROWS_WITH(
      parse_instance_record(R"({"tokens":["a","b"],"head":[0,1],"tail":[1,2]})"),
      Catch::Matchers::ContainsSubstring("relation"));
  CHECK_THROWS_WITH(
      parse_instance_record(
          R"({"tokens":["a","b"],"head":[0,1],"tail":[1,2],"relation":"r","bogus":1})"),
      Catch::Matchers::ContainsSubstring("bogus"));
  CHECK_THROWS_AS(parse_instance_record("not json"), data_error);
}

TEST_CASE("serialization omits the confidence field when absent") {
  const Instance inst = make_instance("a b c", {0, 1}, {2, 3}, "r");
  CHECK(serialize_instance_record(inst).find("confidence") == std::string::npos);
  const Instance with_conf = make_instance("a b c", {0, 1}, {2, 3}, "r", 0.5);
  CHECK(serialize_instance_record(with_conf).find("confidence") != std::string::npos);
}

TEST_CASE("NA relation passes through serialization") {
  const Instance inst = make_instance("a b", {0, 1}, {1, 2}, "NA");
  const std::string line = serialize_instance_record(inst);
  CHECK(line.find("\"NA\"") != std::string::npos);
  CHECK(parse_instance_record(line).relation.is_na());
}

TEST_CASE("round-trip identity on random valid instances") {
  Rng rng(20240201);
  for (int i = 0; i < 500; ++i) {
    const Instance inst = testutil::random_instance(rng);
    const Instance back = parse_instance_record(serialize_instance_record(inst));
    REQUIRE(back == inst);
    // span containment, per the parser contract
    REQUIRE(back.head.end <= back.tokens.size());
    REQUIRE(back.tail.end <= back.tokens.size());
  }
}

TEST_CASE("validate_dataset flags each seeded violation by index") {
  Dataset ds;
  ds.instances.push_back(make_instance("a b c d", {0, 1}, {2, 3}, "r1"));
  ds.instances.push_back(make_instance("a b c d", {1, 2}, {3, 4}, "r2"));
  ds.instances.push_back(make_instance("x y z w", {0, 2}, {3, 4}, "r1"));
  rebuild_label_set(ds);
  CHECK(validate_dataset(ds).ok());

  SECTION("overlapping spans") {
    ds.instances[1].head = {2, 4};
    ds.instances[1].tail = {3, 4};
    const auto report = validate_dataset(ds);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].index == 1);
    CHECK(report.violations[0].rule == "overlapping spans");
  }

  SECTION("unknown label") {
    ds.instances[2].relation = "mystery";
    const auto report = validate_dataset(ds);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].rule == "unknown label");
  }

  SECTION("confidence out of range") {
    ds.instances[0].confidence = 1.5;
    const auto report = validate_dataset(ds);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].rule == "confidence out of range");
  }

  SECTION("report text format") {
    ds.instances[2].relation = "mystery";
    const auto text = validate_dataset(ds).to_text();
    CHECK(text == "3\tunknown label\trelation 'mystery' not in label set\n");
  }
}

TEST_CASE("dataset file round-trip") {
  const auto dir = testutil::temp_dir("records");
  Dataset ds;
  ds.instances.push_back(make_instance("a b c", {0, 1}, {2, 3}, "r1", 0.25));
  ds.instances.push_back(make_instance("d e f", {0, 1}, {1, 2}, "NA"));
  rebuild_label_set(ds);
  save_dataset(ds, dir / "ds.jsonl");
  const Dataset back = load_dataset(dir / "ds.jsonl");
  CHECK(back.instances == ds.instances);
  CHECK(back.label_set == std::vector<RelationLabel>{RelationLabel("NA"), RelationLabel("r1")});
  std::filesystem::remove_all(dir);
}
