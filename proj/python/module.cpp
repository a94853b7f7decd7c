#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "listen/algorithms.hpp"
#include "listen/datasets.hpp"
#include "listen/evaluation.hpp"
#include "listen/harness.hpp"
#include "listen/oracle.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

listen::Dataset dataset_from_string(const std::string& text) {
    auto dataset = listen::parse_dataset(json::parse(text));
    listen::validate_dataset(dataset);
    return dataset;
}

json weights_to_json(const listen::WeightVector& weights) {
    json object = json::object();
    for (const auto& [key, value] : weights) object[key] = value;
    return object;
}

std::string run_once(const std::string& dataset_json, const std::string& algorithm,
                     int iterations, int batch_size, std::uint64_t seed, double noise,
                     bool ablation_base_prompt) {
    const auto dataset = dataset_from_string(dataset_json);
    listen::RunConfig config;
    config.algorithm = listen::algorithm_kind_from_string(algorithm);
    config.iterations = iterations;
    config.batch_size = batch_size;
    config.seed = seed;
    config.ablation_base_prompt = ablation_base_prompt;

    std::unique_ptr<listen::Oracle> oracle;
    if (config.algorithm == listen::AlgorithmKind::ListenU ||
        config.algorithm == listen::AlgorithmKind::ListenT) {
        if (!dataset.generator || dataset.generator->weights.empty()) {
            throw listen::ConfigError(
                "dataset has no generator weights; a scripted oracle needs them");
        }
        oracle = std::make_unique<listen::ScriptedLinearOracle>(
            dataset.generator->weights, noise, seed ^ 0xa5a5a5a5a5a5a5a5ULL);
    }
    const auto record = listen::run_algorithm(dataset, config, oracle.get());

    json entries = json::array();
    for (const auto& entry : record.entries) {
        json row = {
            {"iteration", entry.iteration},
            {"selected_id", entry.selected_id},
            {"nar", listen::normalized_average_rank(entry.selected_id, dataset).normalized_rank},
        };
        if (entry.weights) row["weights"] = weights_to_json(*entry.weights);
        entries.push_back(std::move(row));
    }
    const json result = {
        {"dataset", record.dataset_name},
        {"algorithm", record.algorithm},
        {"seed", record.seed},
        {"final_id", record.final_id},
        {"entries", std::move(entries)},
    };
    return result.dump();
}

}  // namespace

PYBIND11_MODULE(_listen, m) {
    m.doc() = "LLM-guided multi-attribute selection (JSON-string interface)";

    m.def("load_dataset", [](const std::string& path) {
        return listen::dataset_to_json(listen::load_dataset(path)).dump();
    });
    m.def("save_dataset", [](const std::string& dataset_json, const std::string& path) {
        listen::save_dataset(dataset_from_string(dataset_json), path);
    });
    m.def("generate_dataset", [](const std::string& spec_json) {
        const auto spec = listen::synthetic_spec_from_json(json::parse(spec_json));
        return listen::dataset_to_json(listen::generate_synthetic(spec)).dump();
    });
    m.def("evaluate", [](const std::string& dataset_json, const std::string& selected_id) {
        const auto dataset = dataset_from_string(dataset_json);
        const auto outcome = listen::normalized_average_rank(selected_id, dataset);
        const json result = {
            {"item_id", outcome.item_id},
            {"ranked", outcome.ranked},
            {"raw_rank", outcome.raw_rank},
            {"normalized_rank", outcome.normalized_rank},
        };
        return result.dump();
    });
    m.def("concordance",
          [](const std::string& dataset_json, int samples, std::uint64_t seed,
             bool normalized_features) {
              const auto dataset = dataset_from_string(dataset_json);
              listen::Rng rng(seed);
              const auto result =
                  listen::concordance(dataset, samples, rng, normalized_features);
              const json output = {
                  {"concordance", result.p},
                  {"two_se", result.two_se},
                  {"num_samples", result.num_samples},
                  {"successes", result.successes},
                  {"normalized_features", result.normalized_features},
              };
              return output.dump();
          },
          py::arg("dataset_json"), py::arg("samples") = 1000, py::arg("seed") = 0,
          py::arg("normalized_features") = true);
    m.def("fit_utility",
          [](const std::string& dataset_json, int pairs, double q, std::uint64_t seed) {
              const auto dataset = dataset_from_string(dataset_json);
              listen::FitOptions options;
              options.num_pairs = pairs;
              options.q = q;
              listen::Rng rng(seed);
              const auto fit = listen::fit_utility(dataset, options, rng);
              const json output = {
                  {"dataset", fit.dataset_name},
                  {"weights", weights_to_json(fit.weights)},
                  {"intercept", fit.intercept},
                  {"normalized_features", fit.normalized_features},
                  {"converged", fit.diagnostics.converged},
                  {"iterations", fit.diagnostics.iterations},
              };
              return output.dump();
          },
          py::arg("dataset_json"), py::arg("pairs") = 10000, py::arg("q") = 0.95,
          py::arg("seed") = 0);
    m.def("run", &run_once, py::arg("dataset_json"), py::arg("algorithm"),
          py::arg("iterations") = 25, py::arg("batch_size") = 5, py::arg("seed") = 0,
          py::arg("noise") = 0.0, py::arg("ablation_base_prompt") = false);
    m.def("expected_random_nar", [](std::size_t total, std::size_t ranked) {
        return listen::expected_random_nar(total, ranked);
    });

    py::register_exception<listen::SchemaError>(m, "SchemaError");
    py::register_exception<listen::ConfigError>(m, "ConfigError");
    py::register_exception<listen::OracleFormatError>(m, "OracleFormatError");
}
