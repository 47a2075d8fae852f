// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "flowmut/baseline.hpp"
#include "flowmut/chart.hpp"
#include "flowmut/chart_json.hpp"
#include "flowmut/detail/fsio.hpp"
#include "flowmut/detail/sha256.hpp"
#include "flowmut/prompt.hpp"
#include "flowmut/result.hpp"
#include "flowmut/rng.hpp"

namespace flowmut {

/// Where responses come from: a live OpenAI/Ollama-compatible server,
/// recorded fixture files keyed by prompt hash, or the synthetic generator
/// (offline baseline-operator-backed mock with optional defect injection).
enum class LlmMode : std::uint8_t { Http, Replay, Synthetic };

inline const char* to_string(LlmMode m) {
  switch (m) {
    case LlmMode::Http: return "http";
    case LlmMode::Replay: return "replay";
    case LlmMode::Synthetic: return "synthetic";
  }
  return "?";
}

struct LlmEndpointConfig {
  std::string name = "llm";
  LlmMode mode = LlmMode::Synthetic;
  std::string base_url;     // http: e.g. "http://127.0.0.1:11434/v1"
  std::string api_key_env;  // http: env var holding the key; empty = no auth
  std::string model_name = "mock-model";
  double temperature = 0.7;
  double timeout_s = 60.0;
  int max_retries = 3;
  double retry_backoff_s = 0.25;  // doubles per attempt
  double price_per_prompt_token = 0.0;
  double price_per_completion_token = 0.0;
  std::string fixtures_dir;  // replay: where <sha256>.resp.txt files live
  std::string record_dir;    // when set, every response is recorded here
  std::uint64_t synthetic_seed = 1;
  double synthetic_defect_rate = 0.0;
};

struct LlmUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct LlmResponse {
  std::string text;
  LlmUsage usage;
  double latency_s = 0.0;
  int retries = 0;
};

struct LlmError {
  enum class Kind : std::uint8_t {
    Transport,
    Timeout,
    AuthFailure,
    RateLimited,
    MissingFixture,
    Config,
  };
  Kind kind;
  std::string message;
};

inline const char* to_string(LlmError::Kind k) {
  switch (k) {
    case LlmError::Kind::Transport: return "transport";
    case LlmError::Kind::Timeout: return "timeout";
    case LlmError::Kind::AuthFailure: return "auth_failure";
    case LlmError::Kind::RateLimited: return "rate_limited";
    case LlmError::Kind::MissingFixture: return "missing_fixture";
    case LlmError::Kind::Config: return "config";
  }
  return "?";
}

/// Tokenizer-free usage approximation (about four bytes per token), applied
/// when a server omits usage accounting and by the offline backends.
inline long estimate_tokens(std::size_t bytes) {
  return static_cast<long>((bytes + 3) / 4);
}

namespace detail {

/// Path of the recorded response for a prompt.
inline std::filesystem::path fixture_path(const std::string& dir,
                                          const std::string& prompt) {
  return std::filesystem::path(dir) / (sha256_hex(prompt) + ".resp.txt");
}

// ---------------------------------------------------------------------------
// Synthetic response generation
// ---------------------------------------------------------------------------

/// Elements whose content differs after a mutation, rendered as edits.
inline Json edits_for_diff(const Chart& original, const Chart& mutated) {
  Json edits = Json::array();
  for (const State& s : mutated.states) {
    const State* before = original.find_state(s.id);
    if (before == nullptr || !(*before == s)) {
      edits.push_back({{"kind", "state"}, {"id", s.id},
                       {"replacement", state_to_json(s)}});
    }
  }
  for (const Transition& t : mutated.transitions) {
    const Transition* before = original.find_transition(t.id);
    if (before == nullptr || !(*before == t)) {
      edits.push_back({{"kind", "transition"}, {"id", t.id},
                       {"replacement", transition_to_json(t)}});
    }
  }
  return edits;
}

/// One valid proposal. Global mode draws any first-order baseline mutation;
/// Local mode applies an operator to the selected element (skipping the
/// priority swap, which cannot be expressed as a single-element edit), with
/// a behavior-preserving fallback when no catalog operator applies.
inline Json synthetic_valid_proposal(const Chart& chart,
                                     const MutationStrategy& strategy, Rng& rng) {
  Chart copy = chart;
  if (!strategy.is_local()) {
    apply_random_mutation(copy, rng);
    return Json{{"edits", edits_for_diff(chart, copy)}};
  }

  const std::string& id = strategy.element_id;
  bool is_state = chart.find_state(id) != nullptr;
  const auto& catalog = is_state ? state_operators() : transition_operators();
  std::vector<const MutationOperator*> usable;
  for (const auto& op : catalog) {
    if (op.id == "T9") continue;
    if (op.applicable(chart, id)) usable.push_back(&op);
  }
  if (!usable.empty()) {
    usable[rng.index(usable.size())]->apply(copy, id, rng);
  } else if (is_state) {
    // append a self-assignment to the entry actions
    for (const Variable& v : chart.variables) {
      if (v.kind != VarKind::Input) {
        copy.find_state(id)->entry.push_back(v.name + " = " + v.name);
        break;
      }
    }
  } else {
    // lone transition with nothing else to touch: move it last in priority
    Transition* t = copy.find_transition(id);
    int max_priority = 0;
    for (const Transition& other : copy.transitions) {
      max_priority = std::max(max_priority, other.priority);
    }
    t->priority = max_priority + 1;
  }
  return Json{{"edits", edits_for_diff(chart, copy)}};
}

/// One deliberately broken proposal exercising an RQ5 failure class.
inline Json synthetic_defective_proposal(const Chart& chart,
                                         const MutationStrategy& strategy,
                                         Rng& rng) {
  const bool local = strategy.is_local();
  std::string target_id;
  bool is_state;
  if (local) {
    target_id = strategy.element_id;
    is_state = chart.find_state(target_id) != nullptr;
  } else {
    is_state = rng.coin();
    if (is_state) {
      target_id = chart.states[rng.index(chart.states.size())].id;
    } else {
      target_id = chart.transitions[rng.index(chart.transitions.size())].id;
    }
  }

  Json replacement = element_to_json(chart, target_id);
  enum Defect { InvalidRef, Dangling, UndefinedVar, BadSyntax };
  std::vector<Defect> pool;
  if (!local) pool.push_back(InvalidRef);
  if (!is_state) pool.push_back(Dangling);
  pool.push_back(UndefinedVar);
  pool.push_back(BadSyntax);
  Defect defect = pool[rng.index(pool.size())];

  std::string edit_id = target_id;
  switch (defect) {
    case InvalidRef:
      edit_id = "X_" + std::to_string(rng.index(1000));
      replacement["id"] = edit_id;
      break;
    case Dangling:
      replacement["dest"] = nullptr;
      break;
    case UndefinedVar:
      if (is_state) {
        replacement["entry"].push_back("GHOST_VAR = 1");
      } else {
        replacement["condition"] = "GHOST_VAR > 0";
      }
      break;
    case BadSyntax:
      if (is_state) {
        replacement["entry"].push_back("x = ");
      } else {
        replacement["condition"] = "a && (";
      }
      break;
  }
  return Json{{"edits", Json::array({Json{{"kind", is_state ? "state" : "transition"},
                                          {"id", edit_id},
                                          {"replacement", replacement}}})}};
}

inline std::string synthetic_response(const Chart& chart,
                                      const MutationStrategy& strategy,
                                      int n_mutants, double defect_rate,
                                      Rng rng) {
  Json proposals = Json::array();
  for (int i = 0; i < n_mutants; ++i) {
    if (defect_rate > 0.0 && rng.uniform01() < defect_rate) {
      // a slice of the defect budget models the count shortfall: the model
      // simply returns fewer mutants than requested
      if (rng.index(5) == 0) continue;
      // and another slice returns schema-junk that fails proposal parsing
      if (rng.index(4) == 0) {
        proposals.push_back(Json{{"mutant", "sorry, no edits here"}});
        continue;
      }
      proposals.push_back(synthetic_defective_proposal(chart, strategy, rng));
    } else {
      proposals.push_back(synthetic_valid_proposal(chart, strategy, rng));
    }
  }
  return "Here are the requested mutants.\n\n```json\n" + proposals.dump(2) +
         "\n```\n";
}

}  // namespace detail

/// Context a request runs in. The offline backends need the chart and
/// strategy to synthesize responses; the HTTP backend ignores them.
struct LlmRequestContext {
  const Chart* chart = nullptr;
  MutationStrategy strategy = MutationStrategy::global();
  int n_mutants = 25;
};

/// Single chat-completion round trip with retry, latency and token
/// accounting. Thread-compatible: use one client per in-flight request.
class LlmClient {
 public:
  explicit LlmClient(LlmEndpointConfig cfg) : cfg_(std::move(cfg)) {}

  const LlmEndpointConfig& config() const { return cfg_; }

  Result<LlmResponse, LlmError> request(const std::string& prompt,
                                        const LlmRequestContext& ctx) {
    Result<LlmResponse, LlmError> result = [&]() -> Result<LlmResponse, LlmError> {
      switch (cfg_.mode) {
        case LlmMode::Replay: return replay(prompt);
        case LlmMode::Synthetic: return synthetic(prompt, ctx);
        case LlmMode::Http: return http(prompt);
      }
      return LlmError{LlmError::Kind::Config, "unknown endpoint mode"};
    }();
    if (result.ok() && !cfg_.record_dir.empty()) {
      detail::write_file_atomic(detail::fixture_path(cfg_.record_dir, prompt),
                                result.value().text);
    }
    return result;
  }

  double cost_of(const LlmUsage& usage) const {
    return static_cast<double>(usage.prompt_tokens) * cfg_.price_per_prompt_token +
           static_cast<double>(usage.completion_tokens) *
               cfg_.price_per_completion_token;
  }

 private:
  Result<LlmResponse, LlmError> replay(const std::string& prompt) {
    auto path = detail::fixture_path(cfg_.fixtures_dir, prompt);
    if (!std::filesystem::exists(path)) {
      return LlmError{LlmError::Kind::MissingFixture,
                      "no recorded response at " + path.string()};
    }
    LlmResponse r;
    r.text = detail::read_file(path);
    r.usage.prompt_tokens = estimate_tokens(prompt.size());
    r.usage.completion_tokens = estimate_tokens(r.text.size());
    r.latency_s = 0.0;  // replay is instantaneous and deterministic
    return r;
  }

  Result<LlmResponse, LlmError> synthetic(const std::string& prompt,
                                          const LlmRequestContext& ctx) {
    if (ctx.chart == nullptr) {
      return LlmError{LlmError::Kind::Config,
                      "synthetic endpoint needs a chart in the request context"};
    }
    auto t0 = std::chrono::steady_clock::now();
    // Seed from the prompt digest: the same prompt always yields the same
    // response, independent of request order.
    std::uint64_t seed = cfg_.synthetic_seed;
    std::string digest = detail::sha256_hex(prompt);
    for (int i = 0; i < 16; ++i) {
      seed = seed * 16 + static_cast<std::uint64_t>(
                             digest[i] <= '9' ? digest[i] - '0'
                                              : digest[i] - 'a' + 10);
    }
    LlmResponse r;
    r.text = detail::synthetic_response(*ctx.chart, ctx.strategy, ctx.n_mutants,
                                        cfg_.synthetic_defect_rate, Rng(seed));
    r.usage.prompt_tokens = estimate_tokens(prompt.size());
    r.usage.completion_tokens = estimate_tokens(r.text.size());
    r.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    return r;
  }

  Result<LlmResponse, LlmError> http(const std::string& prompt) {
    std::string api_key;
    if (!cfg_.api_key_env.empty()) {
      const char* key = std::getenv(cfg_.api_key_env.c_str());
      if (key == nullptr || *key == '\0') {
        return LlmError{LlmError::Kind::AuthFailure,
                        "environment variable " + cfg_.api_key_env +
                            " is not set; no request was sent"};
      }
      api_key = key;
    }

    std::string origin = cfg_.base_url;
    std::string path_prefix;
    auto scheme_end = origin.find("://");
    auto path_start = origin.find('/', scheme_end == std::string::npos
                                          ? 0
                                          : scheme_end + 3);
    if (path_start != std::string::npos) {
      path_prefix = origin.substr(path_start);
      origin = origin.substr(0, path_start);
      while (!path_prefix.empty() && path_prefix.back() == '/') {
        path_prefix.pop_back();
      }
    }

    Json body{{"model", cfg_.model_name},
              {"temperature", cfg_.temperature},
              {"messages", Json::array({Json{{"role", "user"}, {"content", prompt}}})}};
    std::string payload = body.dump();

    auto t0 = std::chrono::steady_clock::now();
    LlmError last{LlmError::Kind::Transport, "no attempt made"};
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        double backoff = cfg_.retry_backoff_s * std::pow(2.0, attempt - 1);
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      }
      httplib::Client client(origin);
      client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
      client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
      client.set_write_timeout(std::chrono::duration<double>(cfg_.timeout_s));
      httplib::Headers headers;
      if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

      auto res = client.Post(path_prefix + "/chat/completions", headers, payload,
                             "application/json");
      if (!res) {
        auto err = res.error();
        bool timeout = err == httplib::Error::ConnectionTimeout ||
                       err == httplib::Error::Read || err == httplib::Error::Write;
        last = LlmError{timeout ? LlmError::Kind::Timeout : LlmError::Kind::Transport,
                        "transport error: " + httplib::to_string(err)};
        continue;  // retry
      }
      if (res->status == 401 || res->status == 403) {
        return LlmError{LlmError::Kind::AuthFailure,
                        "endpoint rejected the API key (HTTP " +
                            std::to_string(res->status) + ")"};
      }
      if (res->status == 429 || res->status >= 500) {
        last = LlmError{res->status == 429 ? LlmError::Kind::RateLimited
                                           : LlmError::Kind::Transport,
                        "HTTP " + std::to_string(res->status)};
        continue;  // retry
      }
      if (res->status != 200) {
        return LlmError{LlmError::Kind::Transport,
                        "HTTP " + std::to_string(res->status) + ": " + res->body};
      }

      Json reply = Json::parse(res->body, nullptr, false);
      if (reply.is_discarded() || !reply.contains("choices") ||
          !reply["choices"].is_array() || reply["choices"].empty()) {
        return LlmError{LlmError::Kind::Transport,
                        "malformed chat-completion response"};
      }
      LlmResponse out;
      const auto& choice = reply["choices"][0];
      if (choice.contains("message") && choice["message"].contains("content") &&
          choice["message"]["content"].is_string()) {
        out.text = choice["message"]["content"].get<std::string>();
      } else {
        return LlmError{LlmError::Kind::Transport,
                        "chat-completion response has no message content"};
      }
      if (reply.contains("usage") && reply["usage"].is_object()) {
        out.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
        out.usage.completion_tokens = reply["usage"].value("completion_tokens", 0L);
      }
      if (out.usage.prompt_tokens == 0) {
        out.usage.prompt_tokens = estimate_tokens(prompt.size());
      }
      if (out.usage.completion_tokens == 0) {
        out.usage.completion_tokens = estimate_tokens(out.text.size());
      }
      out.latency_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      out.retries = attempt;
      return out;
    }
    return last;
  }

  LlmEndpointConfig cfg_;
};

}  // namespace flowmut
