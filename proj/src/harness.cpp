#include "listen/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace listen {

using nlohmann::json;

std::string to_string(OracleChoice choice) {
    switch (choice) {
        case OracleChoice::ScriptedLinear: return "scripted_linear";
        case OracleChoice::ScriptedFixedTrue: return "scripted_fixed_true";
        case OracleChoice::LlmHttp: return "llm_http";
    }
    throw std::logic_error("unknown OracleChoice");
}

OracleChoice oracle_choice_from_string(const std::string& s) {
    if (s == "scripted_linear") return OracleChoice::ScriptedLinear;
    if (s == "scripted_fixed_true") return OracleChoice::ScriptedFixedTrue;
    if (s == "llm_http") return OracleChoice::LlmHttp;
    throw ConfigError("unknown oracle kind: '" + s + "'");
}

long long estimated_oracle_calls(const ExperimentPlan& plan) {
    long long oracle_algorithms = 0;
    for (const auto algorithm : plan.algorithms) {
        if (algorithm == AlgorithmKind::ListenU || algorithm == AlgorithmKind::ListenT) {
            ++oracle_algorithms;
        }
    }
    long long calls = static_cast<long long>(plan.datasets.size()) * oracle_algorithms *
                      plan.replications * plan.iterations;
    if (plan.ablation) calls *= 2;
    return calls;
}

// ---------------------------------------------------------------------------
// File plumbing
// ---------------------------------------------------------------------------

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream stream(tmp, std::ios::binary | std::ios::trunc);
        if (!stream) {
            throw ConfigError("cannot write to '" + tmp.string() + "'");
        }
        stream << content;
        if (!stream.good()) {
            throw ConfigError("write failed for '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, path);
}

namespace {

std::string cell_stem(const std::string& dataset, const std::string& algorithm_label,
                      int replication) {
    return dataset + "__" + algorithm_label + "__rep" + std::to_string(replication);
}

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return buffer;
}

}  // namespace

std::filesystem::path cell_trace_path(const std::filesystem::path& out_dir,
                                      const std::string& dataset,
                                      const std::string& algorithm_label, int replication) {
    return out_dir / "traces" / (cell_stem(dataset, algorithm_label, replication) + ".jsonl");
}

std::filesystem::path cell_transcript_path(const std::filesystem::path& out_dir,
                                           const std::string& dataset,
                                           const std::string& algorithm_label,
                                           int replication) {
    return out_dir / "transcripts" /
           (cell_stem(dataset, algorithm_label, replication) + ".jsonl");
}

// ---------------------------------------------------------------------------
// Experiment execution
// ---------------------------------------------------------------------------

namespace {

struct DatasetContext {
    const Dataset* dataset = nullptr;
    std::unordered_map<std::string, double> utility_by_id;  // empty if no fit
    bool has_fit = false;
};

std::unique_ptr<Oracle> make_oracle(const ExperimentPlan& plan, const Dataset& dataset,
                                    std::uint64_t cell_seed) {
    switch (plan.oracle) {
        case OracleChoice::ScriptedLinear: {
            if (!dataset.generator || dataset.generator->weights.empty()) {
                throw ConfigError("scripted_linear oracle needs a dataset with persisted "
                                  "generator weights (dataset '" + dataset.name + "')");
            }
            return std::make_unique<ScriptedLinearOracle>(
                dataset.generator->weights, plan.oracle_noise,
                cell_seed ^ 0xa5a5a5a5a5a5a5a5ULL);
        }
        case OracleChoice::ScriptedFixedTrue: {
            if (!dataset.generator || dataset.generator->weights.empty()) {
                throw ConfigError("scripted_fixed_true oracle needs persisted generator "
                                  "weights (dataset '" + dataset.name + "')");
            }
            return std::make_unique<ScriptedFixedWeightsOracle>(
                std::vector<WeightVector>{dataset.generator->weights});
        }
        case OracleChoice::LlmHttp:
            return std::make_unique<HttpLlmOracle>(LlmHttpConfig::from_env());
    }
    throw std::logic_error("unknown OracleChoice");
}

std::string trace_to_jsonl(const CellResult& cell, const RunRecord& record) {
    std::string out;
    for (std::size_t t = 0; t < cell.selected_ids.size(); ++t) {
        json line = {
            {"dataset", cell.dataset},
            {"algorithm", cell.algorithm_label},
            {"replication", cell.replication},
            {"seed", cell.seed},
            {"ablation", cell.ablation},
            {"iteration", t + 1},
            {"selected_id", cell.selected_ids[t]},
            {"nar", cell.nar[t]},
        };
        if (!cell.aus.empty()) {
            line["aus"] = cell.aus[t];
        }
        if (record.entries[t].weights) {
            json weights = json::object();
            for (const auto& [key, value] : *record.entries[t].weights) {
                weights[key] = value;
            }
            line["weights"] = std::move(weights);
        }
        out += line.dump();
        out += "\n";
    }
    return out;
}

CellResult load_cell_trace(const std::filesystem::path& path, CellResult cell) {
    std::ifstream stream(path);
    std::string line;
    while (std::getline(stream, line)) {
        if (line.empty()) continue;
        json record = json::parse(line);
        cell.selected_ids.push_back(record.at("selected_id").get<std::string>());
        cell.nar.push_back(record.at("nar").get<double>());
        if (record.contains("aus")) {
            cell.aus.push_back(record.at("aus").get<double>());
        }
    }
    if (cell.selected_ids.empty()) {
        throw ConfigError("trace file '" + path.string() + "' is empty");
    }
    cell.loaded_from_disk = true;
    return cell;
}

CellResult run_cell(const ExperimentPlan& plan, const DatasetContext& context,
                    AlgorithmKind algorithm, bool ablation, int replication) {
    const Dataset& dataset = *context.dataset;
    CellResult cell;
    cell.dataset = dataset.name;
    cell.algorithm_label = to_string(algorithm) + (ablation ? "@base" : "");
    cell.replication = replication;
    cell.seed = plan.base_seed + static_cast<std::uint64_t>(replication);
    cell.ablation = ablation;

    const auto trace_path =
        cell_trace_path(plan.out_dir, cell.dataset, cell.algorithm_label, replication);
    if (std::filesystem::exists(trace_path)) {
        return load_cell_trace(trace_path, std::move(cell));
    }

    RunConfig config;
    config.algorithm = algorithm;
    config.iterations = plan.iterations;
    config.batch_size = plan.batch_size;
    config.seed = cell.seed;
    config.ablation_base_prompt = ablation;

    RunRecord record;
    try {
        std::unique_ptr<Oracle> oracle;
        const bool needs_oracle =
            algorithm == AlgorithmKind::ListenU || algorithm == AlgorithmKind::ListenT;
        if (needs_oracle) {
            oracle = make_oracle(plan, dataset, cell.seed);
        }
        record = run_algorithm(dataset, config, oracle.get());
    } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
        return cell;
    }

    for (const auto& entry : record.entries) {
        cell.selected_ids.push_back(entry.selected_id);
        cell.nar.push_back(
            normalized_average_rank(entry.selected_id, dataset).normalized_rank);
        if (context.has_fit) {
            cell.aus.push_back(context.utility_by_id.at(entry.selected_id));
        }
    }

    atomic_write(trace_path, trace_to_jsonl(cell, record));
    if (!record.transcript.entries.empty()) {
        atomic_write(cell_transcript_path(plan.out_dir, cell.dataset, cell.algorithm_label,
                                          replication),
                     record.transcript.to_jsonl());
    }
    return cell;
}

}  // namespace

ResultBundle run_experiment(const ExperimentPlan& plan) {
    if (plan.datasets.empty()) {
        throw ConfigError("experiment plan lists no datasets");
    }
    if (plan.algorithms.empty()) {
        throw ConfigError("experiment plan lists no algorithms");
    }
    if (plan.replications < 1 || plan.iterations < 1) {
        throw ConfigError("replications and iterations must be positive");
    }
    if (plan.out_dir.empty()) {
        throw ConfigError("experiment plan has no output directory");
    }
    if (plan.oracle == OracleChoice::LlmHttp && !plan.confirm_llm_spend) {
        throw ConfigError("plan would make " + std::to_string(estimated_oracle_calls(plan)) +
                          " live LLM calls; pass --confirm-llm-spend to proceed");
    }

    ResultBundle bundle;
    bundle.plan = plan;

    std::vector<DatasetContext> contexts;
    for (const auto& dataset : plan.datasets) {
        validate_dataset(dataset);

        DatasetSummary summary;
        summary.name = dataset.name;
        summary.total_items = dataset.items.size();
        summary.ranked_items = dataset.ground_truth.ranking.size();
        Rng concordance_rng(plan.base_seed ^ 0xc0ffee);
        summary.concordance = concordance(dataset, plan.concordance_samples, concordance_rng);

        DatasetContext context;
        context.dataset = &dataset;
        if (plan.compute_aus && !dataset.ground_truth.empty()) {
            try {
                Rng fit_rng(plan.base_seed ^ 0xf17f17);
                summary.fit = fit_utility(dataset, FitOptions{}, fit_rng);
            } catch (const FitNonConvergenceError& e) {
                summary.fit_error = e.what();
            }
        }
        if (summary.fit) {
            auto matrix = build_feature_matrix(dataset, true);
            if (summary.fit->normalized_features) {
                matrix = normalize_minmax(matrix);
            }
            for (std::size_t i = 0; i < dataset.items.size(); ++i) {
                context.utility_by_id[dataset.items[i].id] =
                    score(summary.fit->weights, matrix.layout, matrix.rows[i]);
            }
            context.has_fit = true;
        }
        bundle.datasets.push_back(std::move(summary));
        contexts.push_back(std::move(context));
    }

    for (std::size_t d = 0; d < plan.datasets.size(); ++d) {
        for (const auto algorithm : plan.algorithms) {
            std::vector<bool> variants{false};
            const bool oracle_backed =
                algorithm == AlgorithmKind::ListenU || algorithm == AlgorithmKind::ListenT;
            if (plan.ablation && oracle_backed) {
                variants.push_back(true);
            }
            for (const bool ablated : variants) {
                for (int r = 0; r < plan.replications; ++r) {
                    auto cell = run_cell(plan, contexts[d], algorithm, ablated, r);
                    if (cell.failed) ++bundle.failed_cells;
                    bundle.cells.push_back(std::move(cell));
                }
            }
        }
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

struct Aggregate {
    std::vector<double> values;

    double mean() const {
        double total = 0.0;
        for (const double v : values) total += v;
        return total / static_cast<double>(values.size());
    }

    double two_se() const {
        const std::size_t n = values.size();
        if (n < 2) return 0.0;
        const double m = mean();
        double ss = 0.0;
        for (const double v : values) ss += (v - m) * (v - m);
        return 2.0 * std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
};

}  // namespace

void emit_reports(const ResultBundle& bundle) {
    const auto& plan = bundle.plan;

    // Per (dataset, algorithm, iteration, metric) aggregates over replications.
    // Keyed maps keep row order deterministic.
    std::map<std::string, std::map<std::string, std::map<int, std::map<std::string, Aggregate>>>>
        table;
    for (const auto& cell : bundle.cells) {
        if (cell.failed) continue;
        for (std::size_t t = 0; t < cell.nar.size(); ++t) {
            table[cell.dataset][cell.algorithm_label][static_cast<int>(t) + 1]["nar"]
                .values.push_back(cell.nar[t]);
            if (!cell.aus.empty()) {
                table[cell.dataset][cell.algorithm_label][static_cast<int>(t) + 1]["aus"]
                    .values.push_back(cell.aus[t]);
            }
        }
    }

    std::string csv = "dataset,algorithm,iteration,metric,mean,two_se,n\n";
    for (const auto& [dataset, by_algorithm] : table) {
        for (const auto& [algorithm, by_iteration] : by_algorithm) {
            for (const auto& [iteration, by_metric] : by_iteration) {
                for (const auto& [metric, aggregate] : by_metric) {
                    csv += dataset + "," + algorithm + "," + std::to_string(iteration) + "," +
                           metric + "," + format_double(aggregate.mean()) + "," +
                           format_double(aggregate.two_se()) + "," +
                           std::to_string(aggregate.values.size()) + "\n";
                }
            }
        }
    }
    atomic_write(plan.out_dir / "aggregate.csv", csv);

    std::string concordance_csv =
        "dataset,concordance,two_se,total_items,ranked_items,ranked_prop\n";
    for (const auto& summary : bundle.datasets) {
        concordance_csv += summary.name + "," + format_double(summary.concordance.p) + "," +
                           format_double(summary.concordance.two_se) + "," +
                           std::to_string(summary.total_items) + "," +
                           std::to_string(summary.ranked_items) + "," +
                           format_double(static_cast<double>(summary.ranked_items) /
                                         static_cast<double>(summary.total_items)) +
                           "\n";
    }
    atomic_write(plan.out_dir / "concordance.csv", concordance_csv);

    json algorithms = json::array();
    for (const auto algorithm : plan.algorithms) {
        algorithms.push_back(to_string(algorithm));
    }
    json dataset_meta = json::array();
    for (const auto& summary : bundle.datasets) {
        json entry = {
            {"name", summary.name},
            {"total_items", summary.total_items},
            {"ranked_items", summary.ranked_items},
            {"concordance", summary.concordance.p},
            {"concordance_two_se", summary.concordance.two_se},
            {"concordance_normalized_features", summary.concordance.normalized_features},
            {"fit_available", summary.fit.has_value()},
        };
        if (!summary.fit_error.empty()) entry["fit_error"] = summary.fit_error;
        dataset_meta.push_back(std::move(entry));
    }
    json metadata = {
        {"algorithms", std::move(algorithms)},
        {"oracle", to_string(plan.oracle)},
        {"oracle_noise", plan.oracle_noise},
        {"replications", plan.replications},
        {"iterations", plan.iterations},
        {"batch_size", plan.batch_size},
        {"batch_size_is_artifact_default", plan.batch_size == 5},
        {"ablation", plan.ablation},
        {"base_seed", plan.base_seed},
        {"failed_cells", bundle.failed_cells},
        {"datasets", std::move(dataset_meta)},
    };
    atomic_write(plan.out_dir / "metadata.json", metadata.dump(2) + "\n");
}

double expected_random_nar(std::size_t total_items, std::size_t ranked_items) {
    const double n = static_cast<double>(total_items);
    const double m = static_cast<double>(ranked_items);
    const double ranked_sum = m * (m + 1.0) / 2.0;
    const double unranked_sum = (n - m) * (m + 1.0 + n) / 2.0;
    return (ranked_sum + unranked_sum) / n / n;
}

}  // namespace listen
