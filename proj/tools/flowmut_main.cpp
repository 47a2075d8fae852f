// SPDX-License-Identifier: Apache-2.0
//
// flowmut command line: validate charts, simulate suites, generate mutants
// (rule-based baseline or LLM-backed), run full campaigns and report the
// metric suite. Exit codes: 0 success, 1 domain failure, 2 usage or IO.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "flowmut/analysis.hpp"
#include "flowmut/baseline.hpp"
#include "flowmut/campaign.hpp"
#include "flowmut/chart_json.hpp"
#include "flowmut/llm_client.hpp"
#include "flowmut/prompt.hpp"
#include "flowmut/proposals.hpp"
#include "flowmut/simulate.hpp"
#include "flowmut/suite_json.hpp"

namespace fs = std::filesystem;
using namespace flowmut;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsageOrIo = 2;

std::string read_input_file(const std::string& path) {
  if (!fs::exists(path)) {
    throw std::runtime_error("no such file: " + path);
  }
  return flowmut::detail::read_file(path);
}

Chart load_valid_chart(const std::string& path) {
  auto parsed = parse_chart(read_input_file(path));
  if (!parsed.ok()) {
    throw ConfigError{"chart " + path + " is invalid (" +
                      to_string(parsed.error().category) +
                      "): " + parsed.error().message};
  }
  return std::move(parsed.value());
}

TestSuite load_suite_for(const Chart& chart, const std::string& path) {
  auto parsed = parse_suite(read_input_file(path));
  if (!parsed.ok()) {
    throw ConfigError{"suite " + path + " is invalid: " + parsed.error().message};
  }
  auto problems = validate_suite(chart, parsed.value());
  if (!problems.empty()) {
    throw ConfigError{"suite does not fit the chart: " + problems.front()};
  }
  return std::move(parsed.value());
}

int cmd_validate(const std::string& chart_path) {
  std::string text = read_input_file(chart_path);
  auto doc = parse_chart_document(text);
  if (!doc.ok()) {
    Json j;
    j["stage"] = "parse";
    j["verdict"] = "non_generable";
    j["error"] = {{"category", to_string(doc.error().category)},
                  {"path", doc.error().path},
                  {"message", doc.error().message}};
    std::cout << j.dump(2) << "\n";
    return kDomainFailure;
  }
  ValidationReport report = validate_chart(doc.value());
  std::cout << validation_report_to_json(report).dump(2) << "\n";
  return report.compilable() ? kOk : kDomainFailure;
}

int cmd_simulate(const std::string& chart_path, const std::string& suite_path,
                 const std::string& trace_out) {
  Chart chart = load_valid_chart(chart_path);
  TestSuite suite = load_suite_for(chart, suite_path);
  for (const TestCase& test : suite.tests) {
    Trace trace = simulate(chart, test);
    std::string status = trace.runtime_error
                             ? "error at step " +
                                   std::to_string(trace.runtime_error->step) +
                                   " (" + trace.runtime_error->message + ")"
                             : "ok";
    std::printf("%-24s steps=%-5d final=%-16s %s\n", test.name.c_str(),
                trace.executed_steps(),
                trace.active_state.empty() ? "-" : trace.active_state.back().c_str(),
                status.c_str());
    if (!trace_out.empty()) {
      flowmut::detail::write_file_atomic(
          fs::path(trace_out) / (test.name + ".trace.json"),
          trace_to_json(trace).dump(2) + "\n");
    }
  }
  return kOk;
}

int cmd_coverage(const std::string& chart_path, const std::string& suite_path) {
  Chart chart = load_valid_chart(chart_path);
  TestSuite suite = load_suite_for(chart, suite_path);
  CoverageReport report = coverage(chart, suite.tests);
  Json j;
  j["decision_coverage"] = report.decision_coverage;
  j["execution_coverage"] = report.execution_coverage;
  j["uncovered"] = report.uncovered;
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_mutate_baseline(const std::string& chart_path, int count,
                        std::uint64_t seed, bool first_order,
                        const std::string& out_dir) {
  Chart chart = load_valid_chart(chart_path);
  fs::path out = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(out);
  std::string stem = fs::path(chart_path).filename().string();
  auto dot = stem.find('.');
  if (dot != std::string::npos) stem = stem.substr(0, dot);

  for (int i = 0; i < count; ++i) {
    std::uint64_t mutant_seed = seed + static_cast<std::uint64_t>(i);
    auto result = generate_baseline(chart, mutant_seed, first_order);
    std::string base = stem + "__baseline__" + std::to_string(mutant_seed);
    flowmut::detail::write_file_atomic(out / (base + ".chart.json"),
                                       serialize_chart(result.mutant));
    Json records = Json::array();
    for (const MutationRecord& rec : result.records) {
      records.push_back({{"operator", rec.operator_id},
                         {"element", rec.element_id},
                         {"field", rec.field},
                         {"before", Json::parse(rec.before)},
                         {"after", Json::parse(rec.after)}});
    }
    flowmut::detail::write_file_atomic(out / (base + ".mutrec.json"),
                                       records.dump(2) + "\n");
    std::printf("%s: %zu mutation(s), first %s on %s\n", base.c_str(),
                result.records.size(), result.records[0].operator_id.c_str(),
                result.records[0].element_id.c_str());
  }
  return kOk;
}

int cmd_mutate_llm(const std::string& chart_path, const std::string& config_path,
                   const std::string& endpoint_name, const std::string& strategy_name,
                   const std::string& element, int few_shot, double temperature,
                   int count, const std::string& out_dir) {
  Chart chart = load_valid_chart(chart_path);
  auto config_text = read_input_file(config_path);
  auto cfg = parse_campaign_config(config_text,
                                   fs::absolute(config_path).parent_path());
  if (!cfg.ok()) throw ConfigError{cfg.error().message};
  if (cfg.value().endpoints.empty()) {
    throw ConfigError{"config declares no endpoints"};
  }
  const LlmEndpointConfig* endpoint = &cfg.value().endpoints.front();
  if (!endpoint_name.empty()) {
    endpoint = nullptr;
    for (const auto& e : cfg.value().endpoints) {
      if (e.name == endpoint_name) endpoint = &e;
    }
    if (endpoint == nullptr) {
      throw ConfigError{"config has no endpoint named '" + endpoint_name + "'"};
    }
  }

  MutationStrategy strategy = MutationStrategy::global();
  if (strategy_name == "local") {
    std::string selected = element;
    if (selected.empty()) {
      std::vector<std::string> pool;
      for (const State& s : chart.states) pool.push_back(s.id);
      for (const Transition& t : chart.transitions) pool.push_back(t.id);
      Rng rng(flowmut::detail::derive_seed(cfg.value().local_selection_seed,
                                           "mutate-llm"));
      selected = pool[rng.index(pool.size())];
    } else if (chart.find_state(selected) == nullptr &&
               chart.find_transition(selected) == nullptr) {
      throw ConfigError{"chart has no state or transition '" + selected + "'"};
    }
    strategy = MutationStrategy::local(selected);
  } else if (strategy_name != "global") {
    throw ConfigError{"strategy must be 'global' or 'local'"};
  }

  std::vector<MutationRecord> examples;
  for (int i = 0; i < few_shot; ++i) {
    examples.push_back(
        generate_baseline(chart,
                          flowmut::detail::derive_seed(
                              cfg.value().few_shot_seed, "example" + std::to_string(i)),
                          true)
            .records[0]);
  }

  LlmEndpointConfig ep = *endpoint;
  if (temperature >= 0.0) ep.temperature = temperature;
  PromptSpec spec;
  spec.tmpl = template_for(strategy.kind, few_shot);
  spec.few_shot_count = few_shot;
  spec.strategy = strategy;
  spec.n_mutants = count;
  spec.model_name = ep.model_name;
  spec.temperature = ep.temperature;
  auto prompt = build_prompt(chart, spec, examples);
  if (!prompt.ok()) throw ConfigError{prompt.error().message};

  LlmClient client(ep);
  LlmRequestContext ctx{&chart, strategy, count};
  auto response = client.request(prompt.value(), ctx);
  if (!response.ok()) {
    std::cerr << "request failed (" << to_string(response.error().kind)
              << "): " << response.error().message << "\n";
    return kDomainFailure;
  }

  auto parsed = parse_proposals(response.value().text, count);
  fs::path out = out_dir.empty() ? fs::path("mutants-llm") : fs::path(out_dir);
  fs::create_directories(out);
  std::string stem = fs::path(chart_path).filename().string();
  auto dot = stem.find('.');
  if (dot != std::string::npos) stem = stem.substr(0, dot);

  int generable = 0;
  int compilable = 0;
  for (std::size_t i = 0; i < parsed.proposals.size(); ++i) {
    auto outcome = apply_proposal(chart, parsed.proposals[i], &strategy);
    std::string base = stem + "__llm__" + std::to_string(i);
    flowmut::detail::write_file_atomic(
        out / (base + ".validation.json"),
        validation_report_to_json(outcome.report).dump(2) + "\n");
    if (outcome.chart.has_value()) {
      flowmut::detail::write_file_atomic(out / (base + ".chart.json"),
                                         serialize_chart(*outcome.chart));
    }
    generable += outcome.generable() ? 1 : 0;
    compilable += outcome.compilable() ? 1 : 0;
  }
  std::printf(
      "requested=%d proposals=%zu parse_failures=%d generable=%d "
      "compilable=%d latency_s=%.3f prompt_tokens=%ld completion_tokens=%ld "
      "cost=%.6f\n",
      count, parsed.proposals.size(), parsed.parse_failures, generable,
      compilable, response.value().latency_s, response.value().usage.prompt_tokens,
      response.value().usage.completion_tokens,
      client.cost_of(response.value().usage));
  return kOk;
}

int cmd_campaign(const std::string& config_path) {
  auto text = read_input_file(config_path);
  auto cfg = parse_campaign_config(text, fs::absolute(config_path).parent_path());
  if (!cfg.ok()) throw ConfigError{cfg.error().message};
  CampaignRunner runner(cfg.value());
  CampaignSummary summary = runner.run();
  std::printf("cells run=%d skipped=%d requests=%d mutant_records=%d\n",
              summary.cells_run, summary.cells_skipped, summary.requests_issued,
              summary.mutant_records);
  return kOk;
}

int cmd_report(const std::string& store_path) {
  if (!fs::exists(store_path)) {
    throw std::runtime_error("no such store: " + store_path);
  }
  auto files = write_report(store_path);
  std::printf("%-10s %-8s %-6s %3s %5s %8s %8s %8s %8s %8s %8s %8s %10s\n",
              "model", "strategy", "prompt", "fs", "temp", "count", "gener",
              "compil", "dup", "equiv", "quality", "time_s", "cost");
  auto line = [](const MetricsCell& m) {
    auto cell = [](const std::optional<double>& v) {
      char buf[16];
      if (!v) return std::string("-");
      std::snprintf(buf, sizeof(buf), "%.3f", *v);
      return std::string(buf);
    };
    std::printf("%-10s %-8s %-6s %3d %5.2f %8s %8s %8s %8s %8s %8s %8s %10.6f\n",
                m.key.model.c_str(), m.key.strategy.c_str(), m.key.prompt.c_str(),
                m.key.few_shot, m.key.temperature, cell(m.mutant_count).c_str(),
                cell(m.generability).c_str(), cell(m.compilability).c_str(),
                cell(m.duplication).c_str(), cell(m.equivalent).c_str(),
                cell(m.quality).c_str(), cell(m.time_s).c_str(), m.cost);
  };
  for (const MetricsCell& m : files.report.cells) line(m);
  line(files.report.totals);
  std::printf("wrote %s and %s\n", files.json_path.string().c_str(),
              files.csv_path.string().c_str());
  return kOk;
}

int cmd_sample_size(double confidence, double margin, double proportion) {
  auto n = cochran_sample_size(confidence, margin, proportion);
  if (!n.ok()) {
    std::cerr << n.error().message << "\n";
    return kDomainFailure;
  }
  std::cout << n.value() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mutation analysis toolkit for Stateflow-style statecharts"};
  app.require_subcommand(1);

  std::string chart_path, suite_path, trace_out, out_dir, config_path;
  std::string store_path, endpoint_name, strategy_name = "global", element;
  int count = 25;
  int few_shot = 0;
  std::uint64_t seed = 1;
  bool first_order = false;
  double temperature = -1.0;
  double confidence = 0.95, margin = 0.05, proportion = 0.2;

  auto* validate = app.add_subcommand("validate", "validate a chart file");
  validate->add_option("chart", chart_path, "chart file")->required();

  auto* simulate_cmd =
      app.add_subcommand("simulate", "run a test suite against a chart");
  simulate_cmd->add_option("chart", chart_path, "chart file")->required();
  simulate_cmd->add_option("suite", suite_path, "suite file")->required();
  simulate_cmd->add_option("--trace-out", trace_out, "directory for trace files");

  auto* coverage_cmd =
      app.add_subcommand("coverage", "decision and execution coverage of a suite");
  coverage_cmd->add_option("chart", chart_path, "chart file")->required();
  coverage_cmd->add_option("suite", suite_path, "suite file")->required();

  auto* baseline_cmd =
      app.add_subcommand("mutate-baseline", "generate rule-based mutants");
  baseline_cmd->add_option("chart", chart_path, "chart file")->required();
  baseline_cmd->add_option("--count", count, "number of mutants")->required();
  baseline_cmd->add_option("--seed", seed, "first seed (mutant i uses seed+i)");
  baseline_cmd->add_flag("--first-order", first_order, "single mutation per mutant");
  baseline_cmd->add_option("--out", out_dir, "output directory");

  auto* llm_cmd = app.add_subcommand("mutate-llm", "generate mutants via an LLM endpoint");
  llm_cmd->add_option("chart", chart_path, "chart file")->required();
  llm_cmd->add_option("--config", config_path, "campaign config with endpoints")
      ->required();
  llm_cmd->add_option("--endpoint", endpoint_name, "endpoint name (default: first)");
  llm_cmd->add_option("--strategy", strategy_name, "global or local");
  llm_cmd->add_option("--element", element, "element id for the local strategy");
  llm_cmd->add_option("--few-shot", few_shot, "few-shot example count (0, 3, 6, 9)");
  llm_cmd->add_option("--temperature", temperature, "sampling temperature");
  llm_cmd->add_option("--count", count, "mutants to request");
  llm_cmd->add_option("--out", out_dir, "output directory");

  auto* campaign_cmd = app.add_subcommand("campaign", "run a full campaign config");
  campaign_cmd->add_option("config", config_path, "campaign config file")->required();

  auto* report_cmd = app.add_subcommand("report", "compute metrics over a store");
  report_cmd->add_option("store", store_path, "campaign output directory")->required();

  auto* sample_cmd =
      app.add_subcommand("sample-size", "Cochran sample size for manual inspection");
  sample_cmd->add_option("--confidence", confidence, "confidence level")->required();
  sample_cmd->add_option("--margin", margin, "margin of error")->required();
  sample_cmd->add_option("--proportion", proportion, "estimated proportion")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(chart_path);
    if (simulate_cmd->parsed()) return cmd_simulate(chart_path, suite_path, trace_out);
    if (coverage_cmd->parsed()) return cmd_coverage(chart_path, suite_path);
    if (baseline_cmd->parsed()) {
      return cmd_mutate_baseline(chart_path, count, seed, first_order, out_dir);
    }
    if (llm_cmd->parsed()) {
      return cmd_mutate_llm(chart_path, config_path, endpoint_name, strategy_name,
                            element, few_shot, temperature, count, out_dir);
    }
    if (campaign_cmd->parsed()) return cmd_campaign(config_path);
    if (report_cmd->parsed()) return cmd_report(store_path);
    if (sample_cmd->parsed()) return cmd_sample_size(confidence, margin, proportion);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.message << "\n";
    return kDomainFailure;
  } catch (const IncompleteStore& e) {
    std::cerr << "error: " << e.message << "\n";
    return kDomainFailure;
  } catch (const NoApplicableMutation& e) {
    std::cerr << "error: " << e.message << "\n";
    return kDomainFailure;
  } catch (const SimulatorError& e) {
    std::cerr << "error: " << e.message << "\n";
    return kDomainFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageOrIo;
  }
  return kUsageOrIo;
}
