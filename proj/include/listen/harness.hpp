#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "listen/algorithms.hpp"
#include "listen/core.hpp"
#include "listen/datasets.hpp"
#include "listen/evaluation.hpp"

namespace listen {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OracleChoice { ScriptedLinear, ScriptedFixedTrue, LlmHttp };

std::string to_string(OracleChoice choice);
OracleChoice oracle_choice_from_string(const std::string& s);

/// A grid of (dataset, algorithm, replication) cells with seeded
/// replications. Replication r always runs with seed base_seed + r.
struct ExperimentPlan {
    std::vector<Dataset> datasets;
    std::vector<AlgorithmKind> algorithms;
    OracleChoice oracle = OracleChoice::ScriptedLinear;
    double oracle_noise = 0.0;
    int replications = 50;
    int iterations = 25;
    int batch_size = 5;  // tournament batch; the upstream experiments never pin it
    bool ablation = false;
    std::uint64_t base_seed = 0;
    std::filesystem::path out_dir;
    bool confirm_llm_spend = false;
    bool compute_aus = true;
    int concordance_samples = 1000;
};

/// Estimated number of oracle calls a plan will make (LLM budget guardrail).
long long estimated_oracle_calls(const ExperimentPlan& plan);

struct CellResult {
    std::string dataset;
    std::string algorithm_label;  // algorithm name, "@base" suffix when ablated
    int replication = 0;
    std::uint64_t seed = 0;
    bool ablation = false;
    bool failed = false;
    std::string error;
    std::vector<std::string> selected_ids;  // one per iteration
    std::vector<double> nar;
    std::vector<double> aus;  // empty when no fit exists
    bool loaded_from_disk = false;
};

struct DatasetSummary {
    std::string name;
    std::size_t total_items = 0;
    std::size_t ranked_items = 0;
    ConcordanceResult concordance;
    std::optional<FittedUtility> fit;
    std::string fit_error;
};

struct ResultBundle {
    ExperimentPlan plan;
    std::vector<DatasetSummary> datasets;
    std::vector<CellResult> cells;
    int failed_cells = 0;
};

/// Runs every cell of the plan, skipping cells whose trace files already
/// exist in the output directory. Trace and transcript files are written
/// atomically as each cell completes.
ResultBundle run_experiment(const ExperimentPlan& plan);

/// Writes aggregate CSV, the concordance table and plan metadata.
void emit_reports(const ResultBundle& bundle);

std::filesystem::path cell_trace_path(const std::filesystem::path& out_dir,
                                      const std::string& dataset,
                                      const std::string& algorithm_label, int replication);
std::filesystem::path cell_transcript_path(const std::filesystem::path& out_dir,
                                           const std::string& dataset,
                                           const std::string& algorithm_label,
                                           int replication);

/// Closed-form mean normalized rank of a uniform random selection.
double expected_random_nar(std::size_t total_items, std::size_t ranked_items);

/// Writes content to path via a temp file and rename, so readers never see
/// partial files.
void atomic_write(const std::filesystem::path& path, const std::string& content);

}  // namespace listen
