// SPDX-License-Identifier: Apache-2.0
#include <string>

#include "doctest.h"

#include "flowmut/chart_json.hpp"
#include "flowmut/rng.hpp"
#include "support.hpp"

using namespace flowmut;
using testsupport::load_chart;
using testsupport::minimal_chart;
using testsupport::random_chart;

TEST_CASE("minimal chart serializes with one state and a null source") {
  Chart c = minimal_chart();
  std::string text = serialize_chart(c);
  Json j = Json::parse(text);
  CHECK(j["states"].size() == 1);
  CHECK(j["transitions"].size() == 1);
  CHECK(j["transitions"][0]["source"].is_null());

  auto back = parse_chart(text);
  REQUIRE(back.ok());
  CHECK(back.value() == c);
}

TEST_CASE("fridge chart round-trips structurally") {
  Chart fridge = load_chart("charts/fridge.chart.json");
  CHECK(fridge.states.size() == 4);
  CHECK(fridge.transitions.size() == 8);
  const Transition* open = fridge.find_transition("T_OPEN");
  REQUIRE(open != nullptr);
  CHECK(open->condition == "DOOR_SENSOR == 1");

  auto back = parse_chart(serialize_chart(fridge));
  REQUIRE(back.ok());
  CHECK(back.value() == fridge);
}

TEST_CASE("property: random charts round-trip and serialize canonically") {
  Rng rng(411);
  for (int i = 0; i < 150; ++i) {
    Chart c = random_chart(rng);
    CAPTURE(i);
    REQUIRE(validate_structure(c).empty());
    REQUIRE(validate_semantics(c).empty());
    std::string text = serialize_chart(c);
    auto back = parse_chart(text);
    REQUIRE_MESSAGE(back.ok(), text);
    REQUIRE(back.value() == c);
    // canonicality: serialization is a pure function of the parsed value
    CHECK(serialize_chart(back.value()) == text);
  }
}

TEST_CASE("a larger pacemaker-sized chart survives the round trip") {
  Rng rng(77);
  Chart c = random_chart(rng, 11, 17);
  REQUIRE(c.states.size() == 11);
  REQUIRE(c.transitions.size() == 17);
  auto back = parse_chart(serialize_chart(c));
  REQUIRE(back.ok());
  CHECK(back.value() == c);
}

TEST_CASE("malformed json is classified as malformed-json") {
  auto r = parse_chart("{ not json");
  REQUIRE(!r.ok());
  CHECK(r.error().category == ParseError::Category::MalformedJson);
}

TEST_CASE("schema violations carry a field path") {
  auto missing = parse_chart(R"({"name": "x"})");
  REQUIRE(!missing.ok());
  CHECK(missing.error().category == ParseError::Category::SchemaViolation);

  Chart c = minimal_chart();
  Json j = Json::parse(serialize_chart(c));
  j["states"][0]["entry"] = 42;
  auto bad_entry = parse_chart(j.dump());
  REQUIRE(!bad_entry.ok());
  CHECK(bad_entry.error().category == ParseError::Category::SchemaViolation);
  CHECK(bad_entry.error().path == "/states/0/entry");

  j = Json::parse(serialize_chart(c));
  j["transitions"][0]["priority"] = "high";
  auto bad_priority = parse_chart(j.dump());
  REQUIRE(!bad_priority.ok());
  CHECK(bad_priority.error().category == ParseError::Category::SchemaViolation);

  j = Json::parse(serialize_chart(c));
  j["states"][0]["position"] = {{"x", 1}, {"y", 2}};
  auto unknown = parse_chart(j.dump());
  REQUIRE(!unknown.ok());
  CHECK(unknown.error().category == ParseError::Category::SchemaViolation);
}

TEST_CASE("invariant violations surface the validator taxonomy") {
  Chart fridge = load_chart("charts/fridge.chart.json");

  SUBCASE("destination referencing a missing element") {
    Chart broken = fridge;
    broken.find_transition("T_OPEN")->dest = "S99";
    auto r = parse_chart(serialize_chart(broken));
    REQUIRE(!r.ok());
    CHECK(r.error().category == ParseError::Category::InvariantViolation);
    REQUIRE(r.error().violations.size() == 1);
    CHECK(r.error().violations[0].category == ErrorCategory::InvalidReference);
    CHECK(r.error().violations[0].element_id == "T_OPEN");
    CHECK(r.error().violations[0].message.find("S99") != std::string::npos);
  }

  SUBCASE("duplicate state id") {
    Json j = Json::parse(serialize_chart(fridge));
    j["states"][0]["id"] = "S_OPEN";
    auto r = parse_chart(j.dump());
    REQUIRE(!r.ok());
    CHECK(r.error().category == ParseError::Category::InvariantViolation);
    bool found = false;
    for (const auto& v : r.error().violations) {
      if (v.category == ErrorCategory::StructuralViolation &&
          v.message.find("duplicate element id") != std::string::npos) {
        found = true;
      }
    }
    CHECK(found);
  }

  SUBCASE("undeclared variable in a condition") {
    Chart broken = fridge;
    broken.find_transition("T_OPEN")->condition = "TEMP_X > 3";
    auto r = parse_chart(serialize_chart(broken));
    REQUIRE(!r.ok());
    CHECK(r.error().category == ParseError::Category::InvariantViolation);
    CHECK(r.error().violations[0].category == ErrorCategory::UndefinedVariable);
  }

  SUBCASE("every remaining invariant class also rejects at parse level") {
    auto first_category = [&](Chart broken) {
      auto r = parse_chart(serialize_chart(broken));
      REQUIRE(!r.ok());
      REQUIRE(r.error().category == ParseError::Category::InvariantViolation);
      REQUIRE(!r.error().violations.empty());
      return r.error().violations[0].category;
    };

    Chart dangling = fridge;
    dangling.find_transition("T_OPEN")->dest = "";
    CHECK(first_category(dangling) == ErrorCategory::DanglingTransition);

    Chart no_default = fridge;
    no_default.find_transition("T_INIT")->source = TransitionSource::element("S_OPEN");
    no_default.find_transition("T_INIT")->priority = 9;
    CHECK(first_category(no_default) == ErrorCategory::StructuralViolation);

    Chart collision = fridge;
    collision.find_transition("T_WARM")->priority = 1;
    CHECK(first_category(collision) == ErrorCategory::StructuralViolation);

    Chart cyclic = fridge;
    cyclic.junctions.push_back({"J1"});
    cyclic.junctions.push_back({"J2"});
    cyclic.transitions.push_back({"T_J1", TransitionSource::element("J1"), "J2",
                                  1, std::nullopt, std::nullopt, {}, {}});
    cyclic.transitions.push_back({"T_J2", TransitionSource::element("J2"), "J1",
                                  1, std::nullopt, std::nullopt, {}, {}});
    CHECK(first_category(cyclic) == ErrorCategory::StructuralViolation);

    Chart bad_event = fridge;
    bad_event.find_transition("T_OPEN")->event = "TEMP";  // number, not boolean
    CHECK(first_category(bad_event) == ErrorCategory::TypeError);

    Chart bad_syntax = fridge;
    bad_syntax.find_state("S_OPEN")->entry.push_back("x = ");
    CHECK(first_category(bad_syntax) == ErrorCategory::SyntaxError);

    Chart no_states = fridge;
    no_states.states.clear();
    CHECK(first_category(no_states) == ErrorCategory::StructuralViolation);
  }
}

TEST_CASE("lenient element parsing tolerates what LLMs emit") {
  SUBCASE("missing lists default to empty and unknown keys are dropped") {
    Json j = Json::parse(R"({"id": "S1", "name": "A", "position": [3, 4]})");
    auto s = state_from_json(j, "", false);
    REQUIRE(s.ok());
    CHECK(s.value().entry.empty());
  }
  SUBCASE("missing source is distinguished from an explicit null") {
    Json with_null = Json::parse(
        R"({"id": "T1", "source": null, "dest": "S1", "priority": 1})");
    auto t1 = transition_from_json(with_null, "", false);
    REQUIRE(t1.ok());
    CHECK(t1.value().source.is_default());

    Json without = Json::parse(R"({"id": "T1", "dest": "S1", "priority": 1})");
    auto t2 = transition_from_json(without, "", false);
    REQUIRE(t2.ok());
    CHECK(t2.value().source.is_missing());

    Json null_dest = Json::parse(
        R"({"id": "T1", "source": "S1", "dest": null, "priority": 1})");
    auto t3 = transition_from_json(null_dest, "", false);
    REQUIRE(t3.ok());
    CHECK(t3.value().dest.empty());
  }
  SUBCASE("integral double priorities are accepted") {
    Json j = Json::parse(R"({"id": "T1", "source": "S1", "dest": "S1", "priority": 2.0})");
    auto t = transition_from_json(j, "", false);
    REQUIRE(t.ok());
    CHECK(t.value().priority == 2);
  }
}
