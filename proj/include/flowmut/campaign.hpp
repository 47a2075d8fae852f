// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "flowmut/analysis.hpp"
#include "flowmut/baseline.hpp"
#include "flowmut/chart_json.hpp"
#include "flowmut/detail/fsio.hpp"
#include "flowmut/detail/sha256.hpp"
#include "flowmut/llm_client.hpp"
#include "flowmut/prompt.hpp"
#include "flowmut/proposals.hpp"
#include "flowmut/simulate.hpp"
#include "flowmut/suite_json.hpp"

namespace flowmut {

struct ConfigError {
  std::string message;
};

struct IncompleteStore {
  std::string message;
};

struct BaselineConfig {
  int count = 0;
  bool first_order_only = false;
  std::uint64_t seed = 1;
};

/// The campaign cross-product: endpoints x strategies x few-shot counts x
/// temperatures, each cell asking for mutants_per_cell mutants in batches of
/// mutants_per_request.
struct CampaignConfig {
  std::filesystem::path model_path;
  std::filesystem::path suite_path;
  std::filesystem::path output_dir;
  std::vector<MutationStrategy::Kind> strategies;
  std::vector<int> few_shot_counts;  // 0 = zero-shot (P1/P2)
  std::vector<double> temperatures;
  int mutants_per_cell = 25;
  int mutants_per_request = 25;
  std::vector<LlmEndpointConfig> endpoints;
  BaselineConfig baseline;
  int parallelism = 4;
  std::uint64_t few_shot_seed = 1001;
  std::uint64_t local_selection_seed = 2002;
};

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t base, const std::string& tag) {
  std::string digest = sha256_hex(tag);
  std::uint64_t mixed = base;
  for (int i = 0; i < 16; ++i) {
    mixed = mixed * 16 +
            static_cast<std::uint64_t>(digest[i] <= '9' ? digest[i] - '0'
                                                        : digest[i] - 'a' + 10);
  }
  return Rng(mixed).next_u64();
}

/// Bounded-worker map keeping output order aligned with input order.
template <class In, class Fn>
auto parallel_map(const std::vector<In>& inputs, int workers, Fn&& fn) {
  using Out = decltype(fn(inputs[0]));
  std::vector<Out> outputs(inputs.size());
  if (inputs.empty()) return outputs;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(inputs.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= inputs.size()) return;
        outputs[i] = fn(inputs[i]);
      }
    });
  }
  for (auto& t : pool) t.join();
  return outputs;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

inline Result<CampaignConfig, ConfigError> parse_campaign_config(
    const std::string& text, const std::filesystem::path& base_dir) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return ConfigError{"campaign config is not a JSON object"};
  }
  CampaignConfig cfg;
  auto path_of = [&](const std::string& rel) {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : base_dir / p;
  };
  if (!j.contains("model") || !j["model"].is_string()) {
    return ConfigError{"config needs a 'model' chart path"};
  }
  cfg.model_path = path_of(j["model"].get<std::string>());
  if (!j.contains("suite") || !j["suite"].is_string()) {
    return ConfigError{"config needs a 'suite' path"};
  }
  cfg.suite_path = path_of(j["suite"].get<std::string>());
  if (!j.contains("output_dir") || !j["output_dir"].is_string()) {
    return ConfigError{"config needs an 'output_dir'"};
  }
  cfg.output_dir = path_of(j["output_dir"].get<std::string>());

  cfg.strategies.clear();
  for (const auto& s : j.value("strategies", Json::array({"global", "local"}))) {
    if (s == "global") {
      cfg.strategies.push_back(MutationStrategy::Kind::Global);
    } else if (s == "local") {
      cfg.strategies.push_back(MutationStrategy::Kind::Local);
    } else {
      return ConfigError{"unknown strategy in config: " + s.dump()};
    }
  }
  cfg.few_shot_counts.clear();
  for (const auto& k : j.value("few_shot_counts", Json::array({0}))) {
    if (!k.is_number_integer()) return ConfigError{"few_shot_counts must be integers"};
    int count = k.get<int>();
    if (count != 0 && count != 3 && count != 6 && count != 9) {
      return ConfigError{"few_shot_counts entries must be 0, 3, 6 or 9"};
    }
    cfg.few_shot_counts.push_back(count);
  }
  cfg.temperatures.clear();
  for (const auto& t : j.value("temperatures", Json::array({0.7}))) {
    if (!t.is_number()) return ConfigError{"temperatures must be numbers"};
    double temp = t.get<double>();
    if (temp < 0.0 || temp > 1.0) {
      return ConfigError{"temperatures must lie in [0,1]"};
    }
    cfg.temperatures.push_back(temp);
  }
  cfg.mutants_per_cell = j.value("mutants_per_cell", 25);
  cfg.mutants_per_request = j.value("mutants_per_request", cfg.mutants_per_cell);
  if (cfg.mutants_per_cell < 1 || cfg.mutants_per_request < 1) {
    return ConfigError{"mutant counts must be at least 1"};
  }
  cfg.parallelism = j.value("parallelism", 4);
  if (cfg.parallelism < 1) return ConfigError{"parallelism must be positive"};
  cfg.few_shot_seed = j.value("few_shot_seed", std::uint64_t{1001});
  cfg.local_selection_seed = j.value("local_selection_seed", std::uint64_t{2002});

  if (j.contains("baseline")) {
    const auto& b = j["baseline"];
    if (!b.is_object()) return ConfigError{"'baseline' must be an object"};
    cfg.baseline.count = b.value("count", 0);
    cfg.baseline.first_order_only = b.value("first_order_only", false);
    cfg.baseline.seed = b.value("seed", std::uint64_t{1});
    if (cfg.baseline.count < 0) return ConfigError{"baseline count must be >= 0"};
  }

  for (const auto& e : j.value("endpoints", Json::array())) {
    if (!e.is_object()) return ConfigError{"endpoint entries must be objects"};
    LlmEndpointConfig ep;
    ep.name = e.value("name", std::string{"llm"});
    std::string mode = e.value("mode", std::string{"synthetic"});
    if (mode == "http") {
      ep.mode = LlmMode::Http;
      if (!e.contains("base_url")) {
        return ConfigError{"http endpoint '" + ep.name + "' needs a base_url"};
      }
    } else if (mode == "replay") {
      ep.mode = LlmMode::Replay;
      if (!e.contains("fixtures_dir")) {
        return ConfigError{"replay endpoint '" + ep.name + "' needs a fixtures_dir"};
      }
    } else if (mode == "synthetic") {
      ep.mode = LlmMode::Synthetic;
    } else {
      return ConfigError{"unknown endpoint mode '" + mode + "'"};
    }
    ep.base_url = e.value("base_url", std::string{});
    ep.api_key_env = e.value("api_key_env", std::string{});
    ep.model_name = e.value("model_name", ep.name);
    ep.timeout_s = e.value("timeout_s", 60.0);
    ep.max_retries = e.value("max_retries", 3);
    ep.retry_backoff_s = e.value("retry_backoff_s", 0.25);
    ep.price_per_prompt_token = e.value("price_per_prompt_token", 0.0);
    ep.price_per_completion_token = e.value("price_per_completion_token", 0.0);
    if (e.contains("fixtures_dir")) {
      ep.fixtures_dir = path_of(e["fixtures_dir"].get<std::string>()).string();
    }
    if (e.contains("record_dir")) {
      ep.record_dir = path_of(e["record_dir"].get<std::string>()).string();
    }
    ep.synthetic_seed = e.value("synthetic_seed", std::uint64_t{1});
    ep.synthetic_defect_rate = e.value("defect_rate", 0.0);
    if (ep.synthetic_defect_rate < 0.0 || ep.synthetic_defect_rate > 1.0) {
      return ConfigError{"defect_rate must lie in [0,1]"};
    }
    cfg.endpoints.push_back(std::move(ep));
  }
  if (cfg.endpoints.empty() && cfg.baseline.count == 0) {
    return ConfigError{"config drives neither an endpoint nor the baseline"};
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Campaign runner
// ---------------------------------------------------------------------------

struct CampaignSummary {
  int cells_run = 0;
  int cells_skipped = 0;
  int requests_issued = 0;
  int mutant_records = 0;
};

class CampaignRunner {
 public:
  CampaignRunner(CampaignConfig cfg) : cfg_(std::move(cfg)) {}

  /// Runs every cell of the cross-product plus the baseline cell. Completed
  /// cells (marker file present) are skipped, so reruns are idempotent and
  /// issue no new requests.
  CampaignSummary run() {
    load_inputs();
    std::filesystem::create_directories(cfg_.output_dir);
    write_meta();
    simulate_original();

    CampaignSummary summary;
    for (const LlmEndpointConfig& endpoint : cfg_.endpoints) {
      for (MutationStrategy::Kind strategy : cfg_.strategies) {
        for (int few_shot : cfg_.few_shot_counts) {
          for (double temperature : cfg_.temperatures) {
            run_cell(endpoint, strategy, few_shot, temperature, summary);
          }
        }
      }
    }
    if (cfg_.baseline.count > 0) run_baseline(summary);
    return summary;
  }

  const Chart& chart() const { return chart_; }
  const TestSuite& suite() const { return suite_; }

 private:
  void load_inputs() {
    auto chart_result = parse_chart(detail::read_file(cfg_.model_path));
    if (!chart_result.ok()) {
      throw ConfigError{"model chart " + cfg_.model_path.string() +
                        " is invalid: " + chart_result.error().message};
    }
    chart_ = std::move(chart_result.value());
    auto suite_result = parse_suite(detail::read_file(cfg_.suite_path));
    if (!suite_result.ok()) {
      throw ConfigError{"suite " + cfg_.suite_path.string() +
                        " is invalid: " + suite_result.error().message};
    }
    suite_ = std::move(suite_result.value());
    auto problems = validate_suite(chart_, suite_);
    if (!problems.empty()) {
      throw ConfigError{"suite does not fit the chart: " + problems.front()};
    }
    if (suite_.tests.empty()) {
      throw ConfigError{"suite has no tests"};
    }

    // few-shot example pool, one fixed draw per campaign
    int max_shots = 0;
    for (int k : cfg_.few_shot_counts) max_shots = std::max(max_shots, k);
    for (int i = 0; i < max_shots; ++i) {
      auto result = generate_baseline(
          chart_, detail::derive_seed(cfg_.few_shot_seed, "example" + std::to_string(i)),
          true);
      example_pool_.push_back(result.records[0]);
    }
  }

  void write_meta() {
    Json meta;
    meta["model"] = cfg_.model_path.string();
    meta["chart_name"] = chart_.name;
    meta["suite"] = cfg_.suite_path.string();
    meta["tolerance"] = suite_.tolerance;
    meta["tests"] = Json::array();
    for (const TestCase& t : suite_.tests) meta["tests"].push_back(t.name);
    meta["mutants_per_cell"] = cfg_.mutants_per_cell;
    meta["mutants_per_request"] = cfg_.mutants_per_request;
    detail::write_file_atomic(cfg_.output_dir / "campaign_meta.json",
                              meta.dump(2) + "\n");
  }

  void simulate_original() {
    detail::CompiledChart compiled(chart_);
    Json traces;
    original_traces_.clear();
    for (const TestCase& test : suite_.tests) {
      Trace t = detail::StepRunner(compiled, nullptr).run(test);
      traces[test.name] = trace_to_json(t);
      original_traces_.push_back(std::move(t));
    }
    detail::write_file_atomic(cfg_.output_dir / "original_traces.json",
                              traces.dump(2) + "\n");
  }

  static std::string cell_slug(const std::string& endpoint,
                               const std::string& strategy, int few_shot,
                               double temperature) {
    return endpoint + "/" + strategy + "_fs" + std::to_string(few_shot) + "_t" +
           flowmut::detail::format_double(temperature);
  }

  Json cell_json(const CellKey& key) const {
    Json j;
    j["model"] = key.model;
    j["strategy"] = key.strategy;
    j["prompt"] = key.prompt;
    j["few_shot"] = key.few_shot;
    j["temperature"] = key.temperature;
    return j;
  }

  struct MutantWork {
    std::string id;
    MutantProposal proposal;
    MutationStrategy strategy;
  };

  struct MutantResult {
    std::string id;
    ApplyOutcome outcome;
    std::vector<bool> killed;
    std::vector<Trace> traces;
    bool equivalent_candidate = false;
  };

  MutantResult process_mutant(const MutantWork& work) {
    MutantResult result;
    result.id = work.id;
    result.outcome = apply_proposal(chart_, work.proposal, &work.strategy);
    if (!result.outcome.compilable() || !result.outcome.chart.has_value()) {
      return result;
    }
    detail::CompiledChart compiled(*result.outcome.chart);
    bool any_killed = false;
    for (std::size_t i = 0; i < suite_.tests.size(); ++i) {
      Trace t = detail::StepRunner(compiled, nullptr).run(suite_.tests[i]);
      bool killed = traces_differ(original_traces_[i], t, suite_.tolerance);
      any_killed = any_killed || killed;
      result.killed.push_back(killed);
      result.traces.push_back(std::move(t));
    }
    result.equivalent_candidate = !any_killed;
    return result;
  }

  void write_mutant_files(const std::filesystem::path& cell_dir,
                          const MutantResult& result) {
    auto mutants_dir = cell_dir / "mutants";
    detail::write_file_atomic(
        mutants_dir / (result.id + ".validation.json"),
        validation_report_to_json(result.outcome.report).dump(2) + "\n");
    if (result.outcome.chart.has_value()) {
      detail::write_file_atomic(mutants_dir / (result.id + ".chart.json"),
                                serialize_chart(*result.outcome.chart));
    }
    if (!result.traces.empty()) {
      Json traces;
      for (std::size_t i = 0; i < suite_.tests.size(); ++i) {
        traces[suite_.tests[i].name] = trace_to_json(result.traces[i]);
      }
      detail::write_file_atomic(mutants_dir / (result.id + ".traces.json"),
                                traces.dump(2) + "\n");
    }
  }

  Json mutant_record(const CellKey& key, const MutantResult& result) {
    Json rec;
    rec["type"] = "mutant";
    rec["id"] = result.id;
    rec["cell"] = cell_json(key);
    const ValidationReport& report = result.outcome.report;
    rec["status"] = !report.generable()      ? "non_generable"
                    : !report.compilable()   ? "non_compilable"
                                             : "compiled";
    Json errors = Json::array();
    for (const ValidationError& e : report.errors) {
      errors.push_back(to_string(e.category));
    }
    rec["errors"] = errors;
    if (result.outcome.chart.has_value()) {
      rec["chart_file"] = "mutants/" + result.id + ".chart.json";
    }
    if (!result.traces.empty()) {
      rec["trace_file"] = "mutants/" + result.id + ".traces.json";
      rec["verdicts"] = result.killed;
      Json killed_by = Json::array();
      for (std::size_t i = 0; i < suite_.tests.size(); ++i) {
        if (result.killed[i]) killed_by.push_back(suite_.tests[i].name);
      }
      rec["killed_by"] = killed_by;
      rec["equivalent_candidate"] = result.equivalent_candidate;
    }
    return rec;
  }

  void run_cell(const LlmEndpointConfig& endpoint, MutationStrategy::Kind kind,
                int few_shot, double temperature, CampaignSummary& summary) {
    std::string slug =
        cell_slug(endpoint.name, to_string(kind), few_shot, temperature);
    std::filesystem::path cell_dir = cfg_.output_dir / slug;
    if (std::filesystem::exists(cell_dir / ".complete")) {
      ++summary.cells_skipped;
      return;
    }
    std::filesystem::create_directories(cell_dir);

    CellKey key{endpoint.name, to_string(kind), to_string(template_for(kind, few_shot)),
                few_shot, temperature};
    LlmEndpointConfig ep = endpoint;
    ep.temperature = temperature;
    LlmClient client(ep);

    std::vector<Json> log_lines;
    int produced = 0;
    int request_index = 0;
    while (produced < cfg_.mutants_per_cell) {
      int batch = std::min(cfg_.mutants_per_request,
                           cfg_.mutants_per_cell - produced);
      MutationStrategy strategy = MutationStrategy::global();
      if (kind == MutationStrategy::Kind::Local) {
        std::vector<std::string> pool;
        for (const State& s : chart_.states) pool.push_back(s.id);
        for (const Transition& t : chart_.transitions) pool.push_back(t.id);
        Rng rng(detail::derive_seed(
            cfg_.local_selection_seed,
            slug + "#" + std::to_string(request_index)));
        strategy = MutationStrategy::local(pool[rng.index(pool.size())]);
      }

      PromptSpec spec;
      spec.tmpl = template_for(kind, few_shot);
      spec.few_shot_count = few_shot;
      spec.strategy = strategy;
      spec.n_mutants = batch;
      spec.model_name = ep.model_name;
      spec.temperature = temperature;
      std::vector<MutationRecord> examples(
          example_pool_.begin(), example_pool_.begin() + few_shot);
      auto prompt = build_prompt(chart_, spec, examples);
      if (!prompt.ok()) throw ConfigError{prompt.error().message};

      LlmRequestContext ctx{&chart_, strategy, batch};
      auto response = client.request(prompt.value(), ctx);
      ++summary.requests_issued;

      Json request_record;
      request_record["type"] = "request";
      request_record["cell"] = cell_json(key);
      request_record["request_index"] = request_index;
      request_record["requested"] = batch;
      if (strategy.is_local()) request_record["selected_element"] = strategy.element_id;

      if (!response.ok()) {
        request_record["error"] = response.error().message;
        request_record["error_kind"] = to_string(response.error().kind);
        request_record["proposals"] = 0;
        request_record["parse_failures"] = 0;
        log_lines.push_back(std::move(request_record));
        produced += batch;  // the budget for this batch is spent
        ++request_index;
        continue;
      }

      const LlmResponse& r = response.value();
      auto parsed = parse_proposals(r.text, batch);
      if (static_cast<int>(parsed.proposals.size()) > batch) {
        // over-producing endpoints never inflate the lifecycle: the budget
        // caps what gets accounted and materialized
        request_record["surplus_discarded"] =
            parsed.proposals.size() - static_cast<std::size_t>(batch);
        parsed.proposals.resize(static_cast<std::size_t>(batch));
      }
      request_record["proposals"] = parsed.proposals.size();
      request_record["parse_failures"] = parsed.parse_failures;
      request_record["latency_s"] = r.latency_s;
      request_record["prompt_tokens"] = r.usage.prompt_tokens;
      request_record["completion_tokens"] = r.usage.completion_tokens;
      request_record["cost"] = client.cost_of(r.usage);
      request_record["retries"] = r.retries;
      log_lines.push_back(std::move(request_record));

      std::vector<MutantWork> work;
      for (std::size_t i = 0; i < parsed.proposals.size(); ++i) {
        MutantWork w;
        w.id = "r" + std::to_string(request_index) + "_i" + std::to_string(i);
        w.proposal = parsed.proposals[i];
        w.strategy = strategy;
        work.push_back(std::move(w));
      }
      auto results = detail::parallel_map(
          work, cfg_.parallelism,
          [this](const MutantWork& w) { return process_mutant(w); });
      for (const MutantResult& result : results) {
        write_mutant_files(cell_dir, result);
        log_lines.push_back(mutant_record(key, result));
        ++summary.mutant_records;
      }
      produced += batch;
      ++request_index;
    }

    std::string log_text;
    for (const Json& line : log_lines) log_text += line.dump() + "\n";
    detail::write_file_atomic(cell_dir / "cell.log.ndjson", log_text);
    detail::write_file_atomic(cell_dir / ".complete", "ok\n");
    ++summary.cells_run;
  }

  void run_baseline(CampaignSummary& summary) {
    std::filesystem::path cell_dir = cfg_.output_dir / "baseline";
    if (std::filesystem::exists(cell_dir / ".complete")) {
      ++summary.cells_skipped;
      return;
    }
    std::filesystem::create_directories(cell_dir);
    CellKey key{"baseline", "baseline", "", 0, 0.0};

    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < cfg_.baseline.count; ++i) {
      seeds.push_back(cfg_.baseline.seed + static_cast<std::uint64_t>(i));
    }

    std::vector<Json> log_lines;
    auto t0 = std::chrono::steady_clock::now();
    auto results = detail::parallel_map(
        seeds, cfg_.parallelism, [this](std::uint64_t seed) {
          auto generated =
              generate_baseline(chart_, seed, cfg_.baseline.first_order_only);
          MutantWork work;
          work.id = "baseline_s" + std::to_string(seed);
          // baseline output is already a chart; reuse the mutant pipeline by
          // simulating directly
          MutantResult result;
          result.id = work.id;
          result.outcome.report = validate_chart(generated.mutant);
          if (result.outcome.report.compilable()) {
            result.outcome.chart = generated.mutant;
            detail::CompiledChart compiled(generated.mutant);
            bool any = false;
            for (std::size_t i = 0; i < suite_.tests.size(); ++i) {
              Trace t = detail::StepRunner(compiled, nullptr).run(suite_.tests[i]);
              bool killed = traces_differ(original_traces_[i], t, suite_.tolerance);
              any = any || killed;
              result.killed.push_back(killed);
              result.traces.push_back(std::move(t));
            }
            result.equivalent_candidate = !any;
          }
          return std::make_pair(std::move(result), std::move(generated.records));
        });
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    Json request_record;
    request_record["type"] = "request";
    request_record["cell"] = cell_json(key);
    request_record["request_index"] = 0;
    request_record["requested"] = cfg_.baseline.count;
    request_record["proposals"] = cfg_.baseline.count;
    request_record["parse_failures"] = 0;
    request_record["latency_s"] = elapsed;
    request_record["prompt_tokens"] = 0;
    request_record["completion_tokens"] = 0;
    request_record["cost"] = 0.0;
    request_record["retries"] = 0;
    log_lines.push_back(std::move(request_record));
    ++summary.requests_issued;

    for (auto& [result, records] : results) {
      write_mutant_files(cell_dir, result);
      Json mutrec = Json::array();
      for (const MutationRecord& rec : records) {
        mutrec.push_back({{"operator", rec.operator_id},
                          {"element", rec.element_id},
                          {"field", rec.field},
                          {"before", Json::parse(rec.before)},
                          {"after", Json::parse(rec.after)}});
      }
      detail::write_file_atomic(cell_dir / "mutants" / (result.id + ".mutrec.json"),
                                mutrec.dump(2) + "\n");
      log_lines.push_back(mutant_record(key, result));
      ++summary.mutant_records;
    }

    std::string log_text;
    for (const Json& line : log_lines) log_text += line.dump() + "\n";
    detail::write_file_atomic(cell_dir / "cell.log.ndjson", log_text);
    detail::write_file_atomic(cell_dir / ".complete", "ok\n");
    ++summary.cells_run;
  }

  CampaignConfig cfg_;
  Chart chart_;
  TestSuite suite_;
  std::vector<Trace> original_traces_;
  std::vector<MutationRecord> example_pool_;
};

// ---------------------------------------------------------------------------
// Store reader and report
// ---------------------------------------------------------------------------

/// Rebuilds per-cell data from the on-disk store; regeneration is never
/// needed to re-analyze a campaign.
inline std::vector<CellData> load_store(const std::filesystem::path& store_dir,
                                        double* tolerance_out = nullptr,
                                        std::vector<std::string>* tests_out = nullptr) {
  auto meta_path = store_dir / "campaign_meta.json";
  if (!std::filesystem::exists(meta_path)) {
    throw IncompleteStore{"store has no campaign_meta.json: " + store_dir.string()};
  }
  Json meta = Json::parse(detail::read_file(meta_path), nullptr, false);
  if (meta.is_discarded()) throw IncompleteStore{"campaign_meta.json is corrupt"};
  double tolerance = meta.value("tolerance", 1e-9);
  std::vector<std::string> tests;
  for (const auto& t : meta.value("tests", Json::array())) {
    tests.push_back(t.get<std::string>());
  }
  if (tolerance_out != nullptr) *tolerance_out = tolerance;
  if (tests_out != nullptr) *tests_out = tests;

  std::map<CellKey, CellData> cells;
  std::vector<std::filesystem::path> logs;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(store_dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "cell.log.ndjson") {
      logs.push_back(entry.path());
    }
  }
  std::sort(logs.begin(), logs.end());

  for (const auto& log_path : logs) {
    std::ifstream in(log_path);
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
      ++line_number;
      if (line.empty()) continue;
      Json rec = Json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.is_object() || !rec.contains("type")) {
        throw IncompleteStore{"corrupt record at " + log_path.string() + ":" +
                              std::to_string(line_number)};
      }
      const Json& cj = rec["cell"];
      CellKey key{cj.value("model", std::string{}),
                  cj.value("strategy", std::string{}),
                  cj.value("prompt", std::string{}), cj.value("few_shot", 0),
                  cj.value("temperature", 0.0)};
      CellData& cell = cells[key];
      cell.key = key;
      if (cell.matrix.tests.empty()) cell.matrix.tests = tests;

      if (rec["type"] == "request") {
        cell.requests += 1;
        cell.requested += rec.value("requested", 0);
        cell.proposals += rec.value("proposals", 0);
        cell.parse_failures += rec.value("parse_failures", 0);
        cell.latency_total_s += rec.value("latency_s", 0.0);
        cell.prompt_tokens += rec.value("prompt_tokens", 0L);
        cell.completion_tokens += rec.value("completion_tokens", 0L);
        cell.cost += rec.value("cost", 0.0);
      } else if (rec["type"] == "mutant") {
        std::string status = rec.value("status", std::string{});
        if (status == "compiled") {
          cell.generable += 1;
          cell.compiled += 1;
          if (!rec.contains("trace_file") || !rec.contains("verdicts")) {
            throw IncompleteStore{"compiled mutant without traces at " +
                                  log_path.string() + ":" +
                                  std::to_string(line_number)};
          }
          auto trace_path = log_path.parent_path() /
                            rec["trace_file"].get<std::string>();
          if (!std::filesystem::exists(trace_path)) {
            throw IncompleteStore{"missing trace file " + trace_path.string()};
          }
          Json traces = Json::parse(detail::read_file(trace_path), nullptr, false);
          if (traces.is_discarded()) {
            throw IncompleteStore{"corrupt trace file " + trace_path.string()};
          }
          MutantOutcome outcome;
          outcome.id = key.model + "/" + key.strategy + "/" +
                       std::to_string(key.few_shot) + "/" +
                       flowmut::detail::format_double(key.temperature) + "/" +
                       rec.value("id", std::string{});
          for (const auto& v : rec["verdicts"]) outcome.killed.push_back(v.get<bool>());
          for (const std::string& test : tests) {
            if (!traces.contains(test)) {
              throw IncompleteStore{"trace file " + trace_path.string() +
                                    " lacks test '" + test + "'"};
            }
            auto trace = trace_from_json(traces[test]);
            if (!trace.ok()) {
              throw IncompleteStore{"corrupt trace record in " + trace_path.string()};
            }
            outcome.traces.push_back(TraceSignature::from_trace(trace.value()));
          }
          cell.matrix.mutants.push_back(std::move(outcome));
        } else if (status == "non_compilable") {
          cell.generable += 1;
        } else if (status != "non_generable") {
          throw IncompleteStore{"unknown mutant status '" + status + "' at " +
                                log_path.string() + ":" +
                                std::to_string(line_number)};
        }
      }
    }
  }

  std::vector<CellData> out;
  out.reserve(cells.size());
  for (auto& [key, cell] : cells) out.push_back(std::move(cell));
  return out;
}

struct ReportFiles {
  std::filesystem::path json_path;
  std::filesystem::path csv_path;
  MetricsReport report;
};

/// Reads the store, aggregates the metric suite and writes metrics.json and
/// metrics.csv next to it (reading back a store never changes its records).
inline ReportFiles write_report(const std::filesystem::path& store_dir) {
  double tolerance = 1e-9;
  auto cells = load_store(store_dir, &tolerance);
  MetricsReport report = aggregate(std::move(cells), tolerance);
  ReportFiles files;
  files.json_path = store_dir / "metrics.json";
  files.csv_path = store_dir / "metrics.csv";
  detail::write_file_atomic(files.json_path,
                            metrics_report_to_json(report).dump(2) + "\n");
  detail::write_file_atomic(files.csv_path, metrics_report_to_csv(report));
  files.report = std::move(report);
  return files;
}

}  // namespace flowmut
