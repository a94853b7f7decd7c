#include "listen/oracle.hpp"

#include <cctype>
#include <cmath>
#include <ctime>
#include <sstream>

#include <json.hpp>

#include "http_post.hpp"

namespace listen {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Prompt assembly
// ---------------------------------------------------------------------------

std::string build_prompt(const PromptParts& parts) {
    std::string prompt = parts.persona;
    prompt += "\n\n";
    prompt += kSectionMetricDefinitions;
    prompt += "\n";
    prompt += parts.metric_definitions;
    if (!parts.user_priorities.empty()) {
        prompt += "\n\n";
        prompt += kSectionUserPriorities;
        prompt += "\n";
        prompt += parts.user_priorities;
    }
    prompt += "\n\n";
    prompt += kSectionSolutions;
    prompt += "\n";
    prompt += parts.solutions;
    prompt += "\n\n";
    prompt += kSectionFormatInstructions;
    prompt += "\n";
    prompt += parts.format_instructions;
    prompt += "\n";
    return prompt;
}

std::string strip_priorities_section(const std::string& prompt) {
    const std::string header = std::string("\n\n") + kSectionUserPriorities + "\n";
    const auto start = prompt.find(header);
    if (start == std::string::npos) return prompt;
    const auto next = prompt.find("\n\n## ", start + header.size());
    if (next == std::string::npos) return prompt.substr(0, start);
    return prompt.substr(0, start) + prompt.substr(next);
}

std::string render_metric_definitions(const std::vector<AttributeSchema>& schema) {
    std::string out;
    for (const auto& attr : schema) {
        out += "- " + attr.name;
        if (!attr.units.empty()) out += " (" + attr.units + ")";
        out += ": " + attr.description;
        if (attr.direction == Direction::Minimize) {
            out += " (lower is better)";
        } else if (attr.direction == Direction::Maximize &&
                   attr.kind == AttributeKind::Numerical) {
            out += " (higher is better)";
        }
        out += "\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

namespace {

std::string format_number(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.10g", value);
    return buffer;
}

}  // namespace

std::string render_item(const Item& item, const std::vector<AttributeSchema>& schema) {
    std::string out = "id: " + item.id + "\n";
    for (const auto& attr : schema) {
        out += "  " + attr.name + ": ";
        switch (attr.kind) {
            case AttributeKind::Numerical: {
                auto it = item.numerical.find(attr.name);
                out += it != item.numerical.end() ? format_number(it->second) : "?";
                if (!attr.units.empty()) out += " " + attr.units;
                break;
            }
            case AttributeKind::Categorical: {
                auto it = item.categorical.find(attr.name);
                out += it != item.categorical.end() ? it->second : "?";
                break;
            }
            case AttributeKind::Textual: {
                auto it = item.textual.find(attr.name);
                out += it != item.textual.end() ? it->second : "?";
                break;
            }
        }
        out += "\n";
    }
    out.pop_back();
    return out;
}

std::string render_labeled_candidates(const std::vector<Item>& candidates,
                                      const std::vector<AttributeSchema>& schema) {
    std::string out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        out += "Option " + candidate_label(i) + ":\n";
        out += render_item(candidates[i], schema);
        out += "\n\n";
    }
    if (!out.empty()) out.erase(out.size() - 2);
    return out;
}

std::string weight_json_format_instructions(const std::vector<std::string>& layout) {
    std::string out =
        "Respond with a single JSON object mapping every feature name below to a "
        "real-valued weight. Positive weights favor larger values, negative weights "
        "favor smaller values. Feature names:\n";
    for (const auto& label : layout) {
        out += "  \"" + label + "\"\n";
    }
    out += "Output only the JSON object.";
    return out;
}

std::string champion_format_instructions() {
    return "Pick the single best option. Answer with the exact format: FINAL A (B, C ...) "
           "where the first letter is your chosen option and the parenthesized letters "
           "are runners-up in order of preference.";
}

std::string candidate_label(std::size_t index) {
    std::string label;
    std::size_t n = index;
    while (true) {
        label.insert(label.begin(), static_cast<char>('A' + n % 26));
        if (n < 26) break;
        n = n / 26 - 1;
    }
    return label;
}

std::optional<std::size_t> label_to_index(const std::string& label) {
    if (label.empty()) return std::nullopt;
    std::size_t value = 0;
    for (char c : label) {
        if (c < 'A' || c > 'Z') return std::nullopt;
        value = value * 26 + static_cast<std::size_t>(c - 'A' + 1);
    }
    return value - 1;
}

// ---------------------------------------------------------------------------
// Transcript
// ---------------------------------------------------------------------------

std::string Transcript::to_jsonl() const {
    std::string out;
    for (const auto& entry : entries) {
        json record = {
            {"prompt", entry.prompt},
            {"raw_response", entry.raw_response},
            {"attempt", entry.attempt},
            {"ok", entry.ok},
            {"timestamp", entry.timestamp},
        };
        out += record.dump();
        out += "\n";
    }
    return out;
}

Transcript Transcript::from_jsonl(const std::string& text) {
    Transcript transcript;
    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        if (line.empty()) continue;
        json record = json::parse(line);
        TranscriptEntry entry;
        entry.prompt = record.value("prompt", "");
        entry.raw_response = record.value("raw_response", "");
        entry.attempt = record.value("attempt", 1);
        entry.ok = record.value("ok", true);
        entry.timestamp = record.value("timestamp", "");
        transcript.entries.push_back(std::move(entry));
    }
    return transcript;
}

std::string iso8601_now() {
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buffer;
}

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

std::optional<std::string> extract_first_json_object(const std::string& text) {
    const auto start = text.find('{');
    if (start == std::string::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return text.substr(start, i - start + 1);
        }
    }
    return std::nullopt;
}

WeightVector parse_weight_json(const std::string& raw, const std::vector<std::string>& layout,
                               bool strict, std::vector<std::string>* warnings) {
    json object;
    if (strict) {
        object = json::parse(raw, nullptr, false);
        if (object.is_discarded() || !object.is_object()) {
            throw OracleFormatError("strict mode: response is not a bare JSON object");
        }
    } else {
        const auto block = extract_first_json_object(raw);
        if (!block) {
            throw OracleFormatError("no JSON object found in response");
        }
        object = json::parse(*block, nullptr, false);
        if (object.is_discarded() || !object.is_object()) {
            throw OracleFormatError("embedded JSON block failed to parse");
        }
    }

    WeightVector weights;
    for (const auto& [key, value] : object.items()) {
        const bool in_layout =
            std::find(layout.begin(), layout.end(), key) != layout.end();
        if (!in_layout) {
            if (strict) {
                throw OracleFormatError("strict mode: unexpected key '" + key + "'");
            }
            if (warnings) warnings->push_back("dropped key not in layout: '" + key + "'");
            continue;
        }
        if (!value.is_number()) {
            throw OracleFormatError("weight for '" + key + "' is not a number");
        }
        weights[key] = value.get<double>();
    }
    for (const auto& label : layout) {
        if (weights.count(label)) continue;
        if (strict) {
            throw OracleFormatError("strict mode: missing layout key '" + label + "'");
        }
        if (warnings) warnings->push_back("missing layout key defaulted to 0: '" + label + "'");
        weights[label] = 0.0;
    }
    return weights;
}

std::size_t parse_champion_label(const std::string& raw, std::size_t candidate_count) {
    const std::string token = "FINAL";
    auto pos = raw.rfind(token);
    if (pos == std::string::npos) {
        throw OracleFormatError("no FINAL token in response");
    }
    std::size_t i = pos + token.size();
    while (i < raw.size() && (raw[i] == ' ' || raw[i] == ':' || raw[i] == '\t')) ++i;
    std::string label;
    while (i < raw.size() && raw[i] >= 'A' && raw[i] <= 'Z') {
        label.push_back(raw[i]);
        ++i;
    }
    const auto index = label_to_index(label);
    if (!index) {
        throw OracleFormatError("no candidate label after FINAL token");
    }
    if (*index >= candidate_count) {
        throw OracleFormatError("label '" + label + "' outside candidate range");
    }
    return *index;
}

// ---------------------------------------------------------------------------
// Retry orchestration
// ---------------------------------------------------------------------------

namespace {

/// Runs the attempt loop shared by both elicitation modes. `parse` throws
/// OracleFormatError on malformed responses.
template <typename Result, typename Parse>
Result attempt_with_retries(OracleSession& session, const OracleRequest& request, Parse parse) {
    const int attempts = session.retry_budget + 1;
    std::string last_error;
    bool transport_failed = false;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        TranscriptEntry entry;
        entry.prompt = request.prompt;
        entry.attempt = attempt;
        entry.timestamp = iso8601_now();
        std::optional<OracleResponse> response;
        try {
            response = session.oracle->respond(request);
        } catch (const TransportError& e) {
            entry.ok = false;
            entry.raw_response = std::string("<transport error: ") + e.what() + ">";
            if (session.transcript) session.transcript->append(std::move(entry));
            last_error = e.what();
            transport_failed = true;
            continue;
        }
        entry.raw_response = response->raw;
        try {
            Result result = parse(response->raw);
            entry.ok = true;
            if (session.transcript) session.transcript->append(std::move(entry));
            return result;
        } catch (const OracleFormatError& e) {
            entry.ok = false;
            if (session.transcript) session.transcript->append(std::move(entry));
            last_error = e.what();
            transport_failed = false;
        }
    }
    if (transport_failed) {
        throw TransportError("oracle transport failed after " + std::to_string(attempts) +
                             " attempts: " + last_error);
    }
    throw OracleFormatError("oracle response unusable after " + std::to_string(attempts) +
                            " attempts: " + last_error);
}

}  // namespace

WeightVector elicit_weights(OracleSession& session, const OracleRequest& request) {
    return attempt_with_retries<WeightVector>(session, request, [&](const std::string& raw) {
        return parse_weight_json(raw, request.layout, session.strict_json, &session.warnings);
    });
}

std::size_t choose_champion_index(OracleSession& session, const OracleRequest& request) {
    if (request.candidate_ids.empty()) {
        throw std::invalid_argument("choose_champion_index: no candidates");
    }
    return attempt_with_retries<std::size_t>(session, request, [&](const std::string& raw) {
        return parse_champion_label(raw, request.candidate_ids.size());
    });
}

// ---------------------------------------------------------------------------
// Scripted oracles
// ---------------------------------------------------------------------------

double ScriptedLinearOracle::logistic(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

bool ScriptedLinearOracle::pairwise_prefers(double utility_i, double utility_j) {
    if (noise_ <= 0.0) {
        return utility_i > utility_j;
    }
    return rng_.uniform() < logistic((utility_i - utility_j) / noise_);
}

OracleResponse ScriptedLinearOracle::respond(const OracleRequest& request) {
    if (request.mode == ResponseMode::WeightJson) {
        json object = json::object();
        for (const auto& [key, value] : true_weights_) {
            object[key] = value;
        }
        return {object.dump()};
    }

    if (request.candidate_features.size() != request.candidate_ids.size() ||
        request.candidate_ids.empty()) {
        throw std::invalid_argument("scripted_linear: champion request lacks candidate features");
    }
    std::vector<double> utilities;
    utilities.reserve(request.candidate_features.size());
    for (const auto& row : request.candidate_features) {
        utilities.push_back(score(true_weights_, request.layout, row));
    }

    std::size_t champion = 0;
    if (noise_ <= 0.0) {
        champion = argmax_index(utilities);
    } else {
        for (std::size_t k = 1; k < utilities.size(); ++k) {
            if (pairwise_prefers(utilities[k], utilities[champion])) {
                champion = k;
            }
        }
    }
    return {"FINAL " + candidate_label(champion)};
}

OracleResponse ScriptedFixedWeightsOracle::respond(const OracleRequest& request) {
    if (request.mode != ResponseMode::WeightJson) {
        throw std::logic_error("scripted_fixed_weights oracle answers weight requests only");
    }
    if (sequence_.empty()) {
        throw std::logic_error("scripted_fixed_weights oracle has an empty sequence");
    }
    const auto& weights = sequence_[std::min(next_, sequence_.size() - 1)];
    ++next_;
    json object = json::object();
    for (const auto& [key, value] : weights) {
        object[key] = value;
    }
    return {object.dump()};
}

OracleResponse ReplayOracle::respond(const OracleRequest&) {
    if (next_ >= transcript_.entries.size()) {
        throw TransportError("replay transcript exhausted");
    }
    return {transcript_.entries[next_++].raw_response};
}

// ---------------------------------------------------------------------------
// HTTP client
// ---------------------------------------------------------------------------

LlmHttpConfig LlmHttpConfig::from_env() {
    LlmHttpConfig config;
    if (const char* endpoint = std::getenv("LISTEN_LLM_ENDPOINT")) config.endpoint = endpoint;
    if (const char* model = std::getenv("LISTEN_LLM_MODEL")) config.model = model;
    if (const char* key = std::getenv("LISTEN_LLM_API_KEY")) config.api_key = key;
    return config;
}

namespace {

HttpResult default_transport(int timeout_seconds, const std::string& url, const std::string& body,
                             const std::vector<std::pair<std::string, std::string>>& headers) {
    const auto result = http_post::post_json(url, body, headers, timeout_seconds);
    if (result.status == 0) {
        throw TransportError(result.body);
    }
    return {result.status, result.body};
}

}  // namespace

HttpLlmOracle::HttpLlmOracle(LlmHttpConfig config, HttpTransport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.endpoint.empty()) {
        throw std::invalid_argument("HttpLlmOracle: endpoint not configured "
                                    "(set LISTEN_LLM_ENDPOINT)");
    }
    if (!transport_) {
        const int timeout = config_.timeout_seconds;
        transport_ = [timeout](const std::string& url, const std::string& body,
                               const std::vector<std::pair<std::string, std::string>>& headers) {
            return default_transport(timeout, url, body, headers);
        };
    }
}

OracleResponse HttpLlmOracle::respond(const OracleRequest& request) {
    json body = {
        {"model", config_.model},
        {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature > 0.0 ? request.temperature : config_.temperature},
    };
    std::vector<std::pair<std::string, std::string>> headers;
    if (!config_.api_key.empty()) {
        headers.emplace_back("Authorization", "Bearer " + config_.api_key);
    }

    const HttpResult result = transport_(config_.endpoint, body.dump(), headers);
    if (result.status != 200) {
        throw TransportError("LLM endpoint returned status " + std::to_string(result.status));
    }
    json response = json::parse(result.body, nullptr, false);
    if (response.is_discarded()) {
        throw TransportError("LLM endpoint returned non-JSON body");
    }
    try {
        return {response.at("choices").at(0).at("message").at("content").get<std::string>()};
    } catch (const json::exception&) {
        throw TransportError("LLM response missing choices[0].message.content");
    }
}

}  // namespace listen
