#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "listen/datasets.hpp"
#include "listen/evaluation.hpp"
#include "listen/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json fit_to_json(const listen::FittedUtility& fit) {
    json weights = json::object();
    for (const auto& [key, value] : fit.weights) weights[key] = value;
    return json{
        {"dataset", fit.dataset_name},
        {"weights", std::move(weights)},
        {"intercept", fit.intercept},
        {"normalized_features", fit.normalized_features},
        {"diagnostics",
         {{"iterations", fit.diagnostics.iterations},
          {"gradient_norm", fit.diagnostics.gradient_norm},
          {"converged", fit.diagnostics.converged},
          {"unranked_pool_empty", fit.diagnostics.unranked_pool_empty}}},
    };
}

listen::FittedUtility fit_from_json(const json& document) {
    listen::FittedUtility fit;
    fit.dataset_name = document.at("dataset").get<std::string>();
    for (const auto& [key, value] : document.at("weights").items()) {
        fit.weights[key] = value.get<double>();
    }
    fit.intercept = document.value("intercept", 0.0);
    fit.normalized_features = document.value("normalized_features", true);
    return fit;
}

std::vector<listen::Dataset> load_datasets(const std::vector<std::string>& paths) {
    std::vector<listen::Dataset> datasets;
    for (const auto& path : paths) {
        datasets.push_back(listen::load_dataset(path));
    }
    return datasets;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LISTEN: LLM-guided selection from large multi-attribute candidate sets"};
    app.require_subcommand(1);

    // ---- generate ----------------------------------------------------------
    auto* generate = app.add_subcommand("generate", "Generate a synthetic dataset");
    std::string gen_spec_path;
    std::string gen_out;
    std::string gen_name = "synthetic";
    std::string gen_generator = "linear";
    std::string gen_constraint_attr;
    double gen_constraint_threshold = 0.0;
    int gen_items = 50;
    int gen_attrs = 3;
    int gen_categorical = 0;
    int gen_ranked = 10;
    int gen_tie_group = 0;
    double gen_noise = 0.0;
    std::uint64_t gen_seed = 0;
    generate->add_option("--spec", gen_spec_path, "Synthetic spec as a JSON file");
    generate->add_option("--out", gen_out, "Output dataset path")->required();
    generate->add_option("--name", gen_name, "Dataset name");
    generate->add_option("--items", gen_items, "Number of items");
    generate->add_option("--num-attrs", gen_attrs, "Number of numerical attributes");
    generate->add_option("--cat-attrs", gen_categorical, "Number of categorical attributes");
    generate->add_option("--ranked", gen_ranked, "Ground-truth ranked subset size");
    generate->add_option("--tie-group", gen_tie_group, "Top tie-group size (0 = none)");
    generate->add_option("--generator", gen_generator,
                         "Generator kind: linear | lexicographic | threshold");
    generate->add_option("--constraint-attr", gen_constraint_attr,
                         "Threshold generator: constrained attribute");
    generate->add_option("--constraint-threshold", gen_constraint_threshold,
                         "Threshold generator: feasibility bound (value <= bound)");
    generate->add_option("--noise", gen_noise, "Adjacent-rank swap probability");
    generate->add_option("--seed", gen_seed, "Generation seed");

    // ---- run ---------------------------------------------------------------
    auto* run = app.add_subcommand("run", "Run an algorithm grid with replications");
    std::vector<std::string> run_datasets;
    std::vector<std::string> run_algorithms;
    std::string run_oracle = "scripted_linear";
    std::string run_out;
    int run_iterations = 25;
    int run_replications = 50;
    int run_batch = 5;
    std::uint64_t run_seed = 0;
    double run_noise = 0.0;
    bool run_ablation = false;
    bool run_confirm = false;
    bool run_no_aus = false;
    run->add_option("--dataset", run_datasets, "Dataset file(s)")->required();
    run->add_option("--algorithm", run_algorithms,
                    "listen_u | listen_t | baseline_random | baseline_zscore")
        ->required();
    run->add_option("--oracle", run_oracle,
                    "scripted_linear | scripted_fixed_true | llm_http");
    run->add_option("--iterations", run_iterations, "Oracle-call budget T per run");
    run->add_option("--replications", run_replications, "Seeded replications per cell");
    run->add_option("--batch-size", run_batch, "Tournament batch size B");
    run->add_option("--seed", run_seed, "Base seed (replication r uses base + r)");
    run->add_option("--noise", run_noise, "Scripted oracle choice-noise temperature");
    run->add_flag("--ablation-base-prompt", run_ablation,
                  "Also run every oracle-backed cell with the user-priorities section removed");
    run->add_flag("--confirm-llm-spend", run_confirm, "Acknowledge the live-LLM call budget");
    run->add_flag("--no-aus", run_no_aus, "Skip utility fitting and the AUS metric");
    run->add_option("--out", run_out, "Output directory")->required();

    // ---- evaluate ----------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "Score a selected item against ground truth");
    std::string eval_dataset;
    std::string eval_selected;
    std::string eval_fit_path;
    evaluate->add_option("--dataset", eval_dataset, "Dataset file")->required();
    evaluate->add_option("--selected", eval_selected, "Selected item id")->required();
    evaluate->add_option("--fit", eval_fit_path, "Fitted-utility JSON (adds utility score)");

    // ---- concordance -------------------------------------------------------
    auto* concordance_cmd = app.add_subcommand("concordance", "Concordance metric for a dataset");
    std::string conc_dataset;
    int conc_samples = 1000;
    std::uint64_t conc_seed = 0;
    bool conc_raw = false;
    concordance_cmd->add_option("--dataset", conc_dataset, "Dataset file")->required();
    concordance_cmd->add_option("--samples", conc_samples, "Random utilities to draw");
    concordance_cmd->add_option("--seed", conc_seed, "Sampling seed");
    concordance_cmd->add_flag("--raw-features", conc_raw,
                              "Score on raw instead of min-max normalized features");

    // ---- fit-utility -------------------------------------------------------
    auto* fit_cmd = app.add_subcommand("fit-utility",
                                       "Fit a linear utility to the ground-truth ranking");
    std::string fit_dataset;
    std::string fit_out;
    int fit_pairs = 10000;
    double fit_q = 0.95;
    std::uint64_t fit_seed = 0;
    fit_cmd->add_option("--dataset", fit_dataset, "Dataset file")->required();
    fit_cmd->add_option("--pairs", fit_pairs, "Simulated pairwise comparisons");
    fit_cmd->add_option("--q", fit_q, "Probability the better-ranked item is labeled chosen");
    fit_cmd->add_option("--seed", fit_seed, "Sampling seed");
    fit_cmd->add_option("--out", fit_out, "Write the fit as JSON here (default: stdout)");

    // ---- report ------------------------------------------------------------
    auto* report = app.add_subcommand("report",
                                      "Rebuild aggregate reports from completed traces");
    std::vector<std::string> report_datasets;
    std::string report_out;
    report->add_option("--dataset", report_datasets, "Dataset file(s) used by the run")
        ->required();
    report->add_option("--out", report_out, "Run output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            listen::SyntheticSpec spec;
            if (!gen_spec_path.empty()) {
                std::ifstream stream(gen_spec_path);
                if (!stream) {
                    throw listen::ConfigError("cannot open spec file: " + gen_spec_path);
                }
                spec = listen::synthetic_spec_from_json(json::parse(stream));
            } else {
                spec.name = gen_name;
                spec.num_items = gen_items;
                spec.ranked_count = gen_ranked;
                spec.generator = listen::generator_kind_from_string(gen_generator);
                spec.constraint_attribute = gen_constraint_attr;
                spec.constraint_threshold = gen_constraint_threshold;
                spec.noise = gen_noise;
                spec.seed = gen_seed;
                if (gen_tie_group > 0) spec.tie_group_size = gen_tie_group;
                for (int j = 0; j < gen_attrs; ++j) {
                    spec.numerical.push_back({"attr_" + std::to_string(j), 0.0, 1.0,
                                              listen::Direction::Maximize});
                }
                for (int j = 0; j < gen_categorical; ++j) {
                    spec.categorical.push_back({"cat_" + std::to_string(j), 3});
                }
            }
            const auto dataset = listen::generate_synthetic(spec);
            listen::save_dataset(dataset, gen_out);
            std::cout << "wrote " << gen_out << " (" << dataset.items.size() << " items, "
                      << dataset.ground_truth.ranking.size() << " ranked)\n";
        } else if (*run) {
            listen::ExperimentPlan plan;
            plan.datasets = load_datasets(run_datasets);
            for (const auto& name : run_algorithms) {
                plan.algorithms.push_back(listen::algorithm_kind_from_string(name));
            }
            plan.oracle = listen::oracle_choice_from_string(run_oracle);
            plan.oracle_noise = run_noise;
            plan.iterations = run_iterations;
            plan.replications = run_replications;
            plan.batch_size = run_batch;
            plan.base_seed = run_seed;
            plan.ablation = run_ablation;
            plan.out_dir = run_out;
            plan.confirm_llm_spend = run_confirm;
            plan.compute_aus = !run_no_aus;

            if (plan.oracle == listen::OracleChoice::LlmHttp) {
                std::cout << "estimated live LLM calls: "
                          << listen::estimated_oracle_calls(plan) << "\n";
                if (!plan.confirm_llm_spend) {
                    std::cerr << "refusing to spend without --confirm-llm-spend\n";
                    return 2;
                }
            }
            const auto bundle = listen::run_experiment(plan);
            listen::emit_reports(bundle);
            std::cout << "completed " << bundle.cells.size() << " cells ("
                      << bundle.failed_cells << " failed); reports in " << run_out << "\n";
        } else if (*evaluate) {
            const auto dataset = listen::load_dataset(eval_dataset);
            const auto outcome = listen::normalized_average_rank(eval_selected, dataset);
            json result = {
                {"item_id", outcome.item_id},
                {"ranked", outcome.ranked},
                {"raw_rank", outcome.raw_rank},
                {"normalized_rank", outcome.normalized_rank},
            };
            if (!eval_fit_path.empty()) {
                std::ifstream stream(eval_fit_path);
                if (!stream) {
                    throw listen::ConfigError("cannot open fit file: " + eval_fit_path);
                }
                const auto fit = fit_from_json(json::parse(stream));
                result["utility"] = listen::fitted_utility_of(fit, dataset, eval_selected);
            }
            std::cout << result.dump(2) << "\n";
        } else if (*concordance_cmd) {
            const auto dataset = listen::load_dataset(conc_dataset);
            listen::Rng rng(conc_seed);
            const auto result =
                listen::concordance(dataset, conc_samples, rng, !conc_raw);
            json output = {
                {"dataset", dataset.name},
                {"concordance", result.p},
                {"two_se", result.two_se},
                {"num_samples", result.num_samples},
                {"normalized_features", result.normalized_features},
                {"total_items", dataset.items.size()},
                {"ranked_items", dataset.ground_truth.ranking.size()},
            };
            std::cout << output.dump(2) << "\n";
        } else if (*fit_cmd) {
            const auto dataset = listen::load_dataset(fit_dataset);
            listen::FitOptions options;
            options.num_pairs = fit_pairs;
            options.q = fit_q;
            listen::Rng rng(fit_seed);
            const auto fit = listen::fit_utility(dataset, options, rng);
            const auto document = fit_to_json(fit);
            if (fit_out.empty()) {
                std::cout << document.dump(2) << "\n";
            } else {
                listen::atomic_write(fit_out, document.dump(2) + "\n");
                std::cout << "wrote " << fit_out << "\n";
            }
        } else if (*report) {
            listen::ExperimentPlan plan;
            plan.datasets = load_datasets(report_datasets);
            plan.out_dir = report_out;

            listen::ResultBundle bundle;
            // Rebuild cells from the trace files already on disk.
            const fs::path traces = fs::path(report_out) / "traces";
            if (!fs::exists(traces)) {
                throw listen::ConfigError("no traces directory under " + report_out);
            }
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(traces)) {
                if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
            }
            std::sort(files.begin(), files.end());
            std::set<std::string> algorithm_labels;
            for (const auto& file : files) {
                listen::CellResult cell;
                std::ifstream stream(file);
                std::string line;
                while (std::getline(stream, line)) {
                    if (line.empty()) continue;
                    const json record = json::parse(line);
                    cell.dataset = record.at("dataset").get<std::string>();
                    cell.algorithm_label = record.at("algorithm").get<std::string>();
                    cell.replication = record.at("replication").get<int>();
                    cell.seed = record.at("seed").get<std::uint64_t>();
                    cell.ablation = record.value("ablation", false);
                    cell.selected_ids.push_back(record.at("selected_id").get<std::string>());
                    cell.nar.push_back(record.at("nar").get<double>());
                    if (record.contains("aus")) {
                        cell.aus.push_back(record.at("aus").get<double>());
                    }
                }
                if (cell.selected_ids.empty()) continue;
                algorithm_labels.insert(cell.algorithm_label);
                cell.loaded_from_disk = true;
                bundle.cells.push_back(std::move(cell));
            }
            for (const auto& label : algorithm_labels) {
                const auto base = label.substr(0, label.find('@'));
                try {
                    const auto kind = listen::algorithm_kind_from_string(base);
                    if (std::find(plan.algorithms.begin(), plan.algorithms.end(), kind) ==
                        plan.algorithms.end()) {
                        plan.algorithms.push_back(kind);
                    }
                } catch (const std::invalid_argument&) {
                    // foreign trace file; aggregate it anyway
                }
            }
            for (const auto& dataset : plan.datasets) {
                listen::DatasetSummary summary;
                summary.name = dataset.name;
                summary.total_items = dataset.items.size();
                summary.ranked_items = dataset.ground_truth.ranking.size();
                listen::Rng rng(plan.base_seed ^ 0xc0ffee);
                summary.concordance = listen::concordance(dataset, 1000, rng);
                bundle.datasets.push_back(std::move(summary));
            }
            bundle.plan = plan;
            listen::emit_reports(bundle);
            std::cout << "reports rebuilt from " << bundle.cells.size() << " traces in "
                      << report_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
