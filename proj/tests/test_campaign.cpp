// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "flowmut/campaign.hpp"
#include "support.hpp"

using namespace flowmut;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() /
             ("flowmut_campaign_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CampaignConfig smoke_config(const fs::path& out) {
  CampaignConfig cfg;
  cfg.model_path = testsupport::asset("charts/fridge.chart.json");
  cfg.suite_path = testsupport::asset("suites/fridge.suite.json");
  cfg.output_dir = out;
  cfg.strategies = {MutationStrategy::Kind::Global};
  cfg.few_shot_counts = {0};
  cfg.temperatures = {0.7};
  cfg.mutants_per_cell = 5;
  cfg.mutants_per_request = 5;
  cfg.parallelism = 2;
  LlmEndpointConfig ep;
  ep.name = "mock";
  ep.mode = LlmMode::Synthetic;
  ep.synthetic_seed = 11;
  ep.synthetic_defect_rate = 0.0;
  cfg.endpoints = {ep};
  return cfg;
}

int count_records(const fs::path& store, const std::string& type) {
  int count = 0;
  for (const auto& entry : fs::recursive_directory_iterator(store)) {
    if (!entry.is_regular_file() || entry.path().filename() != "cell.log.ndjson") {
      continue;
    }
    std::ifstream in(entry.path());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto rec = Json::parse(line);
      if (rec["type"] == type) ++count;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("smoke campaign produces the expected store and records") {
  auto out = fresh_dir("smoke");
  CampaignRunner runner(smoke_config(out));
  CampaignSummary summary = runner.run();
  CHECK(summary.cells_run == 1);
  CHECK(summary.requests_issued == 1);
  CHECK(summary.mutant_records == 5);

  CHECK(fs::exists(out / "campaign_meta.json"));
  CHECK(fs::exists(out / "original_traces.json"));
  CHECK(fs::exists(out / "mock/global_fs0_t0.7/cell.log.ndjson"));
  CHECK(count_records(out, "mutant") == 5);
  CHECK(count_records(out, "request") == 1);

  // defect rate zero: every record is compiled and has its files
  int chart_files = 0;
  for (const auto& entry :
       fs::directory_iterator(out / "mock/global_fs0_t0.7/mutants")) {
    if (entry.path().string().ends_with(".chart.json")) ++chart_files;
  }
  CHECK(chart_files == 5);
  fs::remove_all(out);
}

TEST_CASE("rerunning a completed campaign issues zero new requests") {
  auto out = fresh_dir("rerun");
  CampaignRunner first(smoke_config(out));
  auto s1 = first.run();
  CHECK(s1.requests_issued == 1);

  CampaignRunner second(smoke_config(out));
  auto s2 = second.run();
  CHECK(s2.requests_issued == 0);
  CHECK(s2.cells_run == 0);
  CHECK(s2.cells_skipped == 1);
  fs::remove_all(out);
}

TEST_CASE("budget accounting: requests = cells x ceil(requested / batch)") {
  auto out = fresh_dir("budget");
  CampaignConfig cfg = smoke_config(out);
  cfg.strategies = {MutationStrategy::Kind::Global, MutationStrategy::Kind::Local};
  cfg.temperatures = {0.2, 0.7};
  cfg.mutants_per_cell = 7;
  cfg.mutants_per_request = 3;  // 3 requests per cell (3+3+1)
  CampaignRunner runner(cfg);
  auto summary = runner.run();
  CHECK(summary.cells_run == 4);
  CHECK(summary.requests_issued == 4 * 3);
  CHECK(count_records(out, "request") == 12);
  fs::remove_all(out);
}

TEST_CASE("baseline cell records perfect generability") {
  auto out = fresh_dir("baseline");
  CampaignConfig cfg = smoke_config(out);
  cfg.endpoints.clear();
  cfg.baseline = {20, false, 5};
  CampaignRunner runner(cfg);
  auto summary = runner.run();
  CHECK(summary.mutant_records == 20);

  auto files = write_report(out);
  REQUIRE(files.report.cells.size() == 1);
  const MetricsCell& cell = files.report.cells[0];
  CHECK(cell.key.model == "baseline");
  CHECK(*cell.generability == doctest::Approx(1.0));
  CHECK(*cell.compilability == doctest::Approx(1.0));
  CHECK(*cell.mutant_count == doctest::Approx(1.0));
  CHECK(cell.cost == 0.0);
  fs::remove_all(out);
}

TEST_CASE("report reads a store back without regeneration") {
  auto out = fresh_dir("report");
  CampaignConfig cfg = smoke_config(out);
  cfg.endpoints[0].synthetic_defect_rate = 0.3;
  cfg.mutants_per_cell = 20;
  cfg.mutants_per_request = 20;
  CampaignRunner(cfg).run();

  auto files = write_report(out);
  CHECK(fs::exists(files.json_path));
  CHECK(fs::exists(files.csv_path));
  REQUIRE(files.report.cells.size() == 1);
  const MetricsCell& cell = files.report.cells[0];
  CHECK(cell.requested == 20);
  // lifecycle monotonicity
  CHECK(cell.proposals >= cell.generable);
  CHECK(cell.generable >= cell.compiled);
  for (auto* rate : {&cell.mutant_count, &cell.generability, &cell.compilability,
                     &cell.duplication, &cell.equivalent}) {
    if (rate->has_value()) {
      CHECK(rate->value() >= 0.0);
      CHECK(rate->value() <= 1.0);
    }
  }
  // re-reporting does not change the store: verify by byte-comparing CSVs
  std::string csv1 = flowmut::detail::read_file(files.csv_path);
  auto files2 = write_report(out);
  std::string csv2 = flowmut::detail::read_file(files2.csv_path);
  CHECK(csv1 == csv2);
  fs::remove_all(out);
}

TEST_CASE("corrupted log lines are reported with their line number") {
  auto out = fresh_dir("corrupt");
  CampaignRunner(smoke_config(out)).run();
  auto log_path = out / "mock/global_fs0_t0.7/cell.log.ndjson";
  std::string log = flowmut::detail::read_file(log_path);
  log += "{ this is not json\n";
  flowmut::detail::write_file_atomic(log_path, log);

  bool threw = false;
  try {
    write_report(out);
  } catch (const IncompleteStore& e) {
    threw = true;
    CHECK(e.message.find(":7") != std::string::npos);  // 6 records + 1 corrupt
  }
  CHECK(threw);
  fs::remove_all(out);
}

TEST_CASE("missing trace files surface as IncompleteStore") {
  auto out = fresh_dir("missing_trace");
  CampaignRunner(smoke_config(out)).run();
  for (const auto& entry :
       fs::directory_iterator(out / "mock/global_fs0_t0.7/mutants")) {
    if (entry.path().string().ends_with(".traces.json")) {
      fs::remove(entry.path());
      break;
    }
  }
  CHECK_THROWS_AS(write_report(out), IncompleteStore);
  fs::remove_all(out);
}

TEST_CASE("config parsing rejects malformed campaigns") {
  auto check_error = [](const std::string& text) {
    auto cfg = parse_campaign_config(text, ".");
    CHECK(!cfg.ok());
  };
  check_error("not json");
  check_error("{}");
  check_error(R"({"model": "a", "suite": "b"})");  // missing output_dir
  check_error(R"({"model": "a", "suite": "b", "output_dir": "c"})");  // no endpoints/baseline
  check_error(R"({"model": "a", "suite": "b", "output_dir": "c",
                  "few_shot_counts": [5], "endpoints": [{"mode": "synthetic"}]})");
  check_error(R"({"model": "a", "suite": "b", "output_dir": "c",
                  "temperatures": [1.5], "endpoints": [{"mode": "synthetic"}]})");
  check_error(R"({"model": "a", "suite": "b", "output_dir": "c",
                  "endpoints": [{"mode": "replay"}]})");  // replay needs fixtures_dir
  check_error(R"({"model": "a", "suite": "b", "output_dir": "c",
                  "endpoints": [{"mode": "http"}]})");  // http needs base_url

  auto ok = parse_campaign_config(
      R"({"model": "a", "suite": "b", "output_dir": "c",
          "endpoints": [{"mode": "synthetic", "defect_rate": 0.1}]})",
      "/base");
  REQUIRE(ok.ok());
  CHECK(ok.value().model_path == fs::path("/base/a"));
  CHECK(ok.value().endpoints[0].synthetic_defect_rate == doctest::Approx(0.1));
}

TEST_CASE("over-producing endpoints are capped at the requested budget") {
  auto out = fresh_dir("cap");
  auto fixtures = fresh_dir("cap_fixtures");

  // craft a canned response with 8 proposals for a 5-mutant request
  Chart fridge = testsupport::load_chart("charts/fridge.chart.json");
  std::string body = "[";
  for (int i = 0; i < 8; ++i) {
    Json r = transition_to_json(*fridge.find_transition("T_OPEN"));
    r["condition"] = "TEMP > " + std::to_string(i);
    Json proposal{{"edits", Json::array({Json{{"kind", "transition"},
                                              {"id", "T_OPEN"},
                                              {"replacement", r}}})}};
    body += (i ? "," : "") + proposal.dump();
  }
  body += "]";

  // key the fixture by the exact prompt the campaign will build
  PromptSpec spec;
  spec.tmpl = PromptTemplate::P1;
  spec.strategy = MutationStrategy::global();
  spec.n_mutants = 5;
  spec.model_name = "mock";
  spec.temperature = 0.7;
  auto prompt = build_prompt(fridge, spec, {});
  REQUIRE(prompt.ok());
  flowmut::detail::write_file_atomic(
      flowmut::detail::fixture_path(fixtures.string(), prompt.value()), body);

  CampaignConfig cfg = smoke_config(out);
  cfg.endpoints[0].mode = LlmMode::Replay;
  cfg.endpoints[0].fixtures_dir = fixtures.string();
  auto summary = CampaignRunner(cfg).run();
  CHECK(summary.mutant_records == 5);  // 8 proposed, budget is 5

  auto files = write_report(out);
  REQUIRE(files.report.cells.size() == 1);
  CHECK(files.report.cells[0].proposals == 5);
  CHECK(files.report.cells[0].requested == 5);
  fs::remove_all(out);
  fs::remove_all(fixtures);
}

TEST_CASE("local strategy cells confine every accepted mutant to one element") {
  auto out = fresh_dir("local");
  CampaignConfig cfg = smoke_config(out);
  cfg.strategies = {MutationStrategy::Kind::Local};
  cfg.mutants_per_cell = 10;
  cfg.mutants_per_request = 10;
  CampaignRunner(cfg).run();

  Chart original = testsupport::load_chart("charts/fridge.chart.json");
  auto cell_dir = out / "mock/local_fs0_t0.7";
  std::ifstream in(cell_dir / "cell.log.ndjson");
  std::string line;
  std::string selected;
  int compiled = 0;
  while (std::getline(in, line)) {
    auto rec = Json::parse(line);
    if (rec["type"] == "request") {
      selected = rec.value("selected_element", std::string{});
      continue;
    }
    if (rec["status"] != "compiled") continue;
    ++compiled;
    auto chart_text = flowmut::detail::read_file(
        cell_dir / rec["chart_file"].get<std::string>());
    auto mutant = parse_chart(chart_text);
    REQUIRE(mutant.ok());
    // every differing element is the selected one
    for (const State& s : mutant.value().states) {
      if (!(s == *original.find_state(s.id))) CHECK(s.id == selected);
    }
    for (const Transition& t : mutant.value().transitions) {
      if (!(t == *original.find_transition(t.id))) CHECK(t.id == selected);
    }
  }
  CHECK(compiled == 10);
  CHECK(!selected.empty());
  fs::remove_all(out);
}
