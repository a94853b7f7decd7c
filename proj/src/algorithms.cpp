#include "listen/algorithms.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "listen/rng.hpp"

namespace listen {

using nlohmann::json;

std::string to_string(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::ListenU: return "listen_u";
        case AlgorithmKind::ListenT: return "listen_t";
        case AlgorithmKind::BaselineRandom: return "baseline_random";
        case AlgorithmKind::BaselineZscore: return "baseline_zscore";
    }
    throw std::logic_error("unknown AlgorithmKind");
}

AlgorithmKind algorithm_kind_from_string(const std::string& s) {
    if (s == "listen_u") return AlgorithmKind::ListenU;
    if (s == "listen_t") return AlgorithmKind::ListenT;
    if (s == "baseline_random") return AlgorithmKind::BaselineRandom;
    if (s == "baseline_zscore") return AlgorithmKind::BaselineZscore;
    throw std::invalid_argument("unknown algorithm: '" + s + "'");
}

void validate_run_config(const RunConfig& config) {
    if (config.iterations < 1) {
        throw std::invalid_argument("iterations must be positive");
    }
    if (config.algorithm == AlgorithmKind::ListenT) {
        if (config.iterations < 3) {
            throw std::invalid_argument("listen_t requires at least 3 iterations");
        }
        if (config.batch_size < 2) {
            throw std::invalid_argument("listen_t requires batch_size >= 2");
        }
    }
}

namespace {

RunRecord make_record(const Dataset& dataset, const RunConfig& config) {
    RunRecord record;
    record.dataset_name = dataset.name;
    record.algorithm = to_string(config.algorithm);
    record.seed = config.seed;
    record.ablation_base_prompt = config.ablation_base_prompt;
    return record;
}

std::string priorities_for(const Dataset& dataset, const RunConfig& config) {
    return config.ablation_base_prompt ? std::string{} : dataset.utterance;
}

std::string weights_as_json(const WeightVector& weights) {
    json object = json::object();
    for (const auto& [key, value] : weights) object[key] = value;
    return object.dump();
}

}  // namespace

// ---------------------------------------------------------------------------
// LISTEN-U
// ---------------------------------------------------------------------------

RunRecord run_listen_u(const Dataset& dataset, const RunConfig& config, Oracle& oracle) {
    validate_run_config(config);
    auto record = make_record(dataset, config);

    const auto features = build_feature_matrix(dataset, true);
    const auto normalized = normalize_minmax(features);

    OracleSession session{&oracle, &record.transcript, config.retry_budget, config.strict_json};
    const std::string metric_definitions = render_metric_definitions(dataset.schema);

    WeightVector current_weights;
    const Item* best = nullptr;
    for (int t = 1; t <= config.iterations; ++t) {
        PromptParts parts;
        parts.persona = dataset.persona;
        parts.metric_definitions = metric_definitions;
        parts.user_priorities = priorities_for(dataset, config);
        parts.format_instructions = weight_json_format_instructions(normalized.layout);
        if (t == 1) {
            parts.solutions = "No solution selected yet.";
        } else {
            // Refinement shows the previous weights and the current best
            // solution with unnormalized values and full context.
            parts.solutions = "Previous weight vector:\n" + weights_as_json(current_weights) +
                              "\n\nCurrent best solution:\n" +
                              render_item(*best, dataset.schema);
        }

        OracleRequest request;
        request.prompt = build_prompt(parts);
        request.mode = ResponseMode::WeightJson;
        request.layout = normalized.layout;

        const std::size_t transcript_begin = record.transcript.entries.size();
        current_weights = elicit_weights(session, request);
        best = &argmax_item(current_weights, normalized, dataset.items);

        IterationEntry entry;
        entry.iteration = t;
        entry.selected_id = best->id;
        entry.weights = current_weights;
        entry.transcript_begin = transcript_begin;
        entry.transcript_end = record.transcript.entries.size();
        record.entries.push_back(std::move(entry));
    }
    record.final_id = best->id;
    return record;
}

// ---------------------------------------------------------------------------
// LISTEN-T
// ---------------------------------------------------------------------------

RunRecord run_listen_t(const Dataset& dataset, const RunConfig& config, Oracle& oracle) {
    validate_run_config(config);
    auto record = make_record(dataset, config);

    const auto normalized = normalize_minmax(build_feature_matrix(dataset, true));
    const std::size_t n = dataset.items.size();
    const std::size_t batch = std::min<std::size_t>(config.batch_size, n);

    OracleSession session{&oracle, &record.transcript, config.retry_budget, config.strict_json};
    const std::string metric_definitions = render_metric_definitions(dataset.schema);
    Rng rng(config.seed);

    auto run_round = [&](const std::vector<std::size_t>& candidate_indices, int iteration) {
        std::vector<Item> candidates;
        OracleRequest request;
        request.mode = ResponseMode::ChampionToken;
        request.layout = normalized.layout;
        for (const auto index : candidate_indices) {
            candidates.push_back(dataset.items[index]);
            request.candidate_ids.push_back(dataset.items[index].id);
            request.candidate_features.push_back(normalized.rows[index]);
        }

        PromptParts parts;
        parts.persona = dataset.persona;
        parts.metric_definitions = metric_definitions;
        parts.user_priorities = priorities_for(dataset, config);
        parts.solutions = render_labeled_candidates(candidates, dataset.schema);
        parts.format_instructions = champion_format_instructions();
        request.prompt = build_prompt(parts);

        const std::size_t transcript_begin = record.transcript.entries.size();
        const std::size_t winner = choose_champion_index(session, request);

        IterationEntry entry;
        entry.iteration = iteration;
        entry.selected_id = dataset.items[candidate_indices[winner]].id;
        entry.transcript_begin = transcript_begin;
        entry.transcript_end = record.transcript.entries.size();
        record.entries.push_back(entry);
        return candidate_indices[winner];
    };

    // Preliminary rounds: batches drawn without replacement within a batch,
    // independently across rounds.
    std::vector<std::size_t> champions;
    const int rounds = config.iterations - 1;
    for (int j = 1; j <= rounds; ++j) {
        const auto batch_indices = rng.sample_without_replacement(n, batch);
        champions.push_back(run_round(batch_indices, j));
    }

    // Final playoff over the deduplicated champion set. A singleton set
    // still costs one oracle call, keeping the T-call budget exact.
    std::vector<std::size_t> playoff;
    for (const auto index : champions) {
        if (std::find(playoff.begin(), playoff.end(), index) == playoff.end()) {
            playoff.push_back(index);
        }
    }
    const std::size_t winner = run_round(playoff, config.iterations);
    record.final_id = dataset.items[winner].id;
    return record;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

RunRecord run_baseline_random(const Dataset& dataset, const RunConfig& config) {
    validate_run_config(config);
    if (dataset.items.empty()) {
        throw std::invalid_argument("baseline_random: dataset has no items");
    }
    auto record = make_record(dataset, config);
    Rng rng(config.seed);
    for (int t = 1; t <= config.iterations; ++t) {
        IterationEntry entry;
        entry.iteration = t;
        entry.selected_id = dataset.items[rng.index(dataset.items.size())].id;
        record.entries.push_back(std::move(entry));
    }
    record.final_id = record.entries.back().selected_id;
    return record;
}

std::vector<double> zscore_average_scores(const Dataset& dataset) {
    std::vector<const AttributeSchema*> numerical;
    for (const auto& attr : dataset.schema) {
        if (attr.kind == AttributeKind::Numerical) numerical.push_back(&attr);
    }
    if (numerical.empty()) {
        throw SchemaError("z-score baseline needs at least one numerical attribute");
    }

    const std::size_t n = dataset.items.size();
    std::vector<double> totals(n, 0.0);
    for (const auto* attr : numerical) {
        std::vector<double> column(n);
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = dataset.items[i].numerical.at(attr->name);
        }
        double mean = 0.0;
        for (const double v : column) mean += v;
        mean /= static_cast<double>(n);
        double variance = 0.0;
        for (const double v : column) variance += (v - mean) * (v - mean);
        variance /= static_cast<double>(n);
        const double stddev = std::sqrt(variance);
        if (stddev == 0.0) continue;  // constant column contributes 0

        const double sign = attr->direction == Direction::Minimize ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            totals[i] += sign * (column[i] - mean) / stddev;
        }
    }
    for (auto& total : totals) {
        total /= static_cast<double>(numerical.size());
    }
    return totals;
}

RunRecord run_baseline_zscore(const Dataset& dataset, const RunConfig& config) {
    validate_run_config(config);
    if (dataset.items.empty()) {
        throw std::invalid_argument("baseline_zscore: dataset has no items");
    }
    auto record = make_record(dataset, config);
    const auto scores = zscore_average_scores(dataset);
    const std::string selected = dataset.items[argmax_index(scores)].id;
    for (int t = 1; t <= config.iterations; ++t) {
        IterationEntry entry;
        entry.iteration = t;
        entry.selected_id = selected;
        record.entries.push_back(std::move(entry));
    }
    record.final_id = selected;
    return record;
}

RunRecord run_algorithm(const Dataset& dataset, const RunConfig& config, Oracle* oracle) {
    switch (config.algorithm) {
        case AlgorithmKind::ListenU:
            if (!oracle) throw std::invalid_argument("listen_u requires an oracle");
            return run_listen_u(dataset, config, *oracle);
        case AlgorithmKind::ListenT:
            if (!oracle) throw std::invalid_argument("listen_t requires an oracle");
            return run_listen_t(dataset, config, *oracle);
        case AlgorithmKind::BaselineRandom:
            return run_baseline_random(dataset, config);
        case AlgorithmKind::BaselineZscore:
            return run_baseline_zscore(dataset, config);
    }
    throw std::logic_error("unknown AlgorithmKind");
}

}  // namespace listen
