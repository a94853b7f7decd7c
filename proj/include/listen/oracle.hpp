#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "listen/core.hpp"
#include "listen/rng.hpp"

namespace listen {

class OracleFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Prompt assembly
// ---------------------------------------------------------------------------

inline constexpr const char* kSectionMetricDefinitions = "## Metric Definitions";
inline constexpr const char* kSectionUserPriorities = "## User Priorities";
inline constexpr const char* kSectionSolutions = "## Solutions";
inline constexpr const char* kSectionFormatInstructions = "## Format Instructions";

/// The five prompt sections, concatenated in this order. An empty
/// user_priorities string drops that section entirely (base-prompt ablation).
struct PromptParts {
    std::string persona;
    std::string metric_definitions;
    std::string user_priorities;
    std::string solutions;
    std::string format_instructions;
};

std::string build_prompt(const PromptParts& parts);

/// Strips the user-priorities section from a rendered prompt. Used to check
/// that an ablated transcript differs from its twin only in that section.
std::string strip_priorities_section(const std::string& prompt);

std::string render_metric_definitions(const std::vector<AttributeSchema>& schema);

/// Renders an item with unnormalized values, units and all attribute kinds.
std::string render_item(const Item& item, const std::vector<AttributeSchema>& schema);

std::string render_labeled_candidates(const std::vector<Item>& candidates,
                                      const std::vector<AttributeSchema>& schema);

std::string weight_json_format_instructions(const std::vector<std::string>& layout);
std::string champion_format_instructions();

/// A, B, ..., Z, AA, AB, ...
std::string candidate_label(std::size_t index);
std::optional<std::size_t> label_to_index(const std::string& label);

// ---------------------------------------------------------------------------
// Requests, responses, transcripts
// ---------------------------------------------------------------------------

enum class ResponseMode { WeightJson, ChampionToken };

struct OracleRequest {
    std::string prompt;
    ResponseMode mode = ResponseMode::WeightJson;
    std::vector<std::string> layout;
    // Champion mode: ids and normalized feature rows of the labeled
    // candidates, in label order. Scripted oracles score these directly.
    std::vector<std::string> candidate_ids;
    std::vector<std::vector<double>> candidate_features;
    double temperature = 0.0;
};

struct OracleResponse {
    std::string raw;
};

struct TranscriptEntry {
    std::string prompt;
    std::string raw_response;
    int attempt = 1;
    bool ok = true;
    std::string timestamp;
};

/// Per-run audit log; every oracle call, including failed attempts, is
/// appended before a result is returned to the caller.
struct Transcript {
    std::vector<TranscriptEntry> entries;

    void append(TranscriptEntry entry) { entries.push_back(std::move(entry)); }
    std::string to_jsonl() const;
    static Transcript from_jsonl(const std::string& text);
};

class Oracle {
public:
    virtual ~Oracle() = default;
    virtual OracleResponse respond(const OracleRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

/// First balanced JSON object embedded in the text, if any.
std::optional<std::string> extract_first_json_object(const std::string& text);

/// Parses a weight-JSON response against the layout. Keys outside the layout
/// are dropped with a warning; missing layout keys default to 0 with a
/// warning. In strict mode the text must be a bare JSON object covering the
/// layout exactly.
WeightVector parse_weight_json(const std::string& raw, const std::vector<std::string>& layout,
                               bool strict = false,
                               std::vector<std::string>* warnings = nullptr);

/// Index of the label following the (last) FINAL token; `FINAL A (B, C)`
/// selects A. Throws OracleFormatError when no valid label is found.
std::size_t parse_champion_label(const std::string& raw, std::size_t candidate_count);

// ---------------------------------------------------------------------------
// Retry orchestration
// ---------------------------------------------------------------------------

struct OracleSession {
    Oracle* oracle = nullptr;
    Transcript* transcript = nullptr;
    int retry_budget = 3;  // total attempts = retry_budget + 1
    bool strict_json = false;
    std::vector<std::string> warnings;
};

WeightVector elicit_weights(OracleSession& session, const OracleRequest& request);
std::size_t choose_champion_index(OracleSession& session, const OracleRequest& request);

// ---------------------------------------------------------------------------
// Oracle implementations
// ---------------------------------------------------------------------------

/// Deterministic stand-in for an LLM backed by a known linear utility.
/// Weight mode emits the true weights as JSON. Champion mode returns the
/// utility argmax; with noise > 0 candidates are compared pairwise and the
/// preferred one wins with probability Logistic((u_i - u_j) / noise)
/// (noise = 1 reproduces the plain logistic choice model).
class ScriptedLinearOracle : public Oracle {
public:
    ScriptedLinearOracle(WeightVector true_weights, double noise, std::uint64_t seed)
        : true_weights_(std::move(true_weights)), noise_(noise), rng_(seed) {}

    OracleResponse respond(const OracleRequest& request) override;

    /// True iff the first argument wins the pairwise comparison.
    bool pairwise_prefers(double utility_i, double utility_j);

    static double logistic(double x);

private:
    WeightVector true_weights_;
    double noise_;
    Rng rng_;
};

/// Replays a fixed sequence of weight vectors; the last entry repeats once
/// the sequence is exhausted.
class ScriptedFixedWeightsOracle : public Oracle {
public:
    explicit ScriptedFixedWeightsOracle(std::vector<WeightVector> sequence)
        : sequence_(std::move(sequence)) {}

    OracleResponse respond(const OracleRequest& request) override;

private:
    std::vector<WeightVector> sequence_;
    std::size_t next_ = 0;
};

/// Replays raw responses from a recorded transcript, in order.
class ReplayOracle : public Oracle {
public:
    explicit ReplayOracle(Transcript transcript) : transcript_(std::move(transcript)) {}

    OracleResponse respond(const OracleRequest& request) override;

private:
    Transcript transcript_;
    std::size_t next_ = 0;
};

/// Chat-completion style HTTP client. Endpoint, model and credential come
/// from the environment; the transport is injectable for testing.
struct LlmHttpConfig {
    std::string endpoint;  // e.g. http://host:port/v1/chat/completions
    std::string model;
    std::string api_key;
    double temperature = 0.0;  // decoding parameters are not pinned upstream
    int timeout_seconds = 60;

    /// Reads LISTEN_LLM_ENDPOINT, LISTEN_LLM_MODEL, LISTEN_LLM_API_KEY.
    static LlmHttpConfig from_env();
};

struct HttpResult {
    int status = 0;
    std::string body;
};

using HttpTransport = std::function<HttpResult(const std::string& url, const std::string& body,
                                               const std::vector<std::pair<std::string, std::string>>& headers)>;

class HttpLlmOracle : public Oracle {
public:
    explicit HttpLlmOracle(LlmHttpConfig config, HttpTransport transport = nullptr);

    OracleResponse respond(const OracleRequest& request) override;

private:
    LlmHttpConfig config_;
    HttpTransport transport_;
};

std::string iso8601_now();

}  // namespace listen
