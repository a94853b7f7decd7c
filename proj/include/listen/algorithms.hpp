#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "listen/core.hpp"
#include "listen/oracle.hpp"

namespace listen {

enum class AlgorithmKind { ListenU, ListenT, BaselineRandom, BaselineZscore };

std::string to_string(AlgorithmKind kind);
AlgorithmKind algorithm_kind_from_string(const std::string& s);

struct RunConfig {
    AlgorithmKind algorithm = AlgorithmKind::ListenU;
    int iterations = 25;
    int batch_size = 5;  // tournament rounds only
    std::uint64_t seed = 0;
    bool ablation_base_prompt = false;
    int retry_budget = 3;
    bool strict_json = false;
};

void validate_run_config(const RunConfig& config);

struct IterationEntry {
    int iteration = 0;
    std::string selected_id;
    std::optional<WeightVector> weights;  // listen_u only
    // Index range into the run transcript covering this iteration's calls.
    std::size_t transcript_begin = 0;
    std::size_t transcript_end = 0;
};

/// Per-iteration trace of one algorithm run, plus the full oracle transcript.
struct RunRecord {
    std::string dataset_name;
    std::string algorithm;
    std::uint64_t seed = 0;
    bool ablation_base_prompt = false;
    std::vector<IterationEntry> entries;
    std::string final_id;
    Transcript transcript;
};

RunRecord run_listen_u(const Dataset& dataset, const RunConfig& config, Oracle& oracle);
RunRecord run_listen_t(const Dataset& dataset, const RunConfig& config, Oracle& oracle);
RunRecord run_baseline_random(const Dataset& dataset, const RunConfig& config);
RunRecord run_baseline_zscore(const Dataset& dataset, const RunConfig& config);

/// Dispatch helper; `oracle` may be null for the baselines.
RunRecord run_algorithm(const Dataset& dataset, const RunConfig& config, Oracle* oracle);

/// Per-item mean of direction-adjusted z-scores over the numerical
/// attributes (one-hot columns excluded; zero-variance columns contribute 0).
std::vector<double> zscore_average_scores(const Dataset& dataset);

}  // namespace listen
