#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"
#include "listen/algorithms.hpp"

using namespace listen;

namespace {

RunConfig config_for(AlgorithmKind algorithm, int iterations, std::uint64_t seed,
                     int batch_size = 5) {
    RunConfig config;
    config.algorithm = algorithm;
    config.iterations = iterations;
    config.batch_size = batch_size;
    config.seed = seed;
    return config;
}

ScriptedLinearOracle true_oracle(const Dataset& dataset, double noise = 0.0,
                                 std::uint64_t seed = 1) {
    REQUIRE(dataset.generator.has_value());
    return ScriptedLinearOracle(dataset.generator->weights, noise, seed);
}

std::string true_argmax_id(const Dataset& dataset) {
    const auto normalized = normalize_minmax(build_feature_matrix(dataset, true));
    return argmax_item(dataset.generator->weights, normalized, dataset.items).id;
}

}  // namespace

TEST_CASE("run config validation") {
    CHECK_THROWS(validate_run_config(config_for(AlgorithmKind::ListenU, 0, 0)));
    CHECK_NOTHROW(validate_run_config(config_for(AlgorithmKind::ListenU, 1, 0)));
    CHECK_THROWS(validate_run_config(config_for(AlgorithmKind::ListenT, 2, 0)));
    CHECK_NOTHROW(validate_run_config(config_for(AlgorithmKind::ListenT, 3, 0)));
    CHECK_THROWS(validate_run_config(config_for(AlgorithmKind::ListenT, 5, 0, 1)));
    CHECK_THROWS(validate_run_config(config_for(AlgorithmKind::BaselineRandom, -1, 0)));
}

TEST_CASE("algorithm names round trip") {
    for (auto kind : {AlgorithmKind::ListenU, AlgorithmKind::ListenT,
                      AlgorithmKind::BaselineRandom, AlgorithmKind::BaselineZscore}) {
        CHECK(algorithm_kind_from_string(to_string(kind)) == kind);
    }
    CHECK_THROWS(algorithm_kind_from_string("listen_x"));
}

TEST_CASE("weight-elicitation runs make exactly one oracle call per iteration") {
    const auto dataset = helpers::linear_synthetic(30, 3, 6, 17);
    auto oracle = true_oracle(dataset);
    const auto record = run_listen_u(dataset, config_for(AlgorithmKind::ListenU, 7, 2), oracle);
    CHECK(record.entries.size() == 7);
    CHECK(record.transcript.entries.size() == 7);
    for (const auto& entry : record.entries) {
        CHECK(entry.weights.has_value());
        CHECK_FALSE(entry.selected_id.empty());
    }
}

TEST_CASE("tournament runs make exactly T oracle calls") {
    const auto dataset = helpers::linear_synthetic(20, 3, 5, 23);
    for (int iterations : {3, 4, 7, 10}) {
        auto oracle = true_oracle(dataset);
        const auto record = run_listen_t(
            dataset, config_for(AlgorithmKind::ListenT, iterations, 5), oracle);
        CHECK(record.transcript.entries.size() == static_cast<std::size_t>(iterations));
        CHECK(record.entries.size() == static_cast<std::size_t>(iterations));
    }
}

TEST_CASE("tournament budget holds when the batch exceeds the item count") {
    const auto dataset = helpers::linear_synthetic(4, 2, 2, 31);
    auto oracle = true_oracle(dataset);
    const auto record =
        run_listen_t(dataset, config_for(AlgorithmKind::ListenT, 5, 1, 50), oracle);
    CHECK(record.transcript.entries.size() == 5);
}

TEST_CASE("runs are deterministic under a fixed seed") {
    const auto dataset = helpers::linear_synthetic(30, 4, 6, 40);
    for (auto kind : {AlgorithmKind::ListenU, AlgorithmKind::ListenT,
                      AlgorithmKind::BaselineRandom, AlgorithmKind::BaselineZscore}) {
        auto oracle_a = true_oracle(dataset, 0.5, 9);
        auto oracle_b = true_oracle(dataset, 0.5, 9);
        const auto a = run_algorithm(dataset, config_for(kind, 6, 99), &oracle_a);
        const auto b = run_algorithm(dataset, config_for(kind, 6, 99), &oracle_b);
        REQUIRE(a.entries.size() == b.entries.size());
        for (std::size_t i = 0; i < a.entries.size(); ++i) {
            CHECK(a.entries[i].selected_id == b.entries[i].selected_id);
        }
        CHECK(a.final_id == b.final_id);
    }
}

TEST_CASE("a truthful oracle pins weight elicitation to the global argmax") {
    const auto dataset = helpers::linear_synthetic(40, 4, 8, 55);
    auto oracle = true_oracle(dataset);
    const auto record = run_listen_u(dataset, config_for(AlgorithmKind::ListenU, 5, 3), oracle);
    const auto expected = true_argmax_id(dataset);
    for (const auto& entry : record.entries) {
        CHECK(entry.selected_id == expected);
    }
    CHECK(record.final_id == expected);
}

TEST_CASE("a constant scripted weight vector is a fixed point") {
    const auto dataset = helpers::linear_synthetic(25, 3, 5, 70);
    const auto layout = normalize_minmax(build_feature_matrix(dataset, true)).layout;
    WeightVector fixed;
    for (const auto& name : layout) fixed[name] = 0.0;
    fixed[layout[0]] = 1.0;
    ScriptedFixedWeightsOracle oracle({fixed});
    const auto record = run_listen_u(dataset, config_for(AlgorithmKind::ListenU, 4, 1), oracle);
    const auto normalized = normalize_minmax(build_feature_matrix(dataset, true));
    const auto expected = argmax_item(fixed, normalized, dataset.items).id;
    for (const auto& entry : record.entries) {
        CHECK(entry.selected_id == expected);
    }
}

TEST_CASE("all-zero weights fall back to the first item") {
    const auto dataset = helpers::linear_synthetic(15, 2, 3, 6);
    const auto layout = normalize_minmax(build_feature_matrix(dataset, true)).layout;
    WeightVector zeros;
    for (const auto& name : layout) zeros[name] = 0.0;
    ScriptedFixedWeightsOracle oracle({zeros});
    const auto record = run_listen_u(dataset, config_for(AlgorithmKind::ListenU, 2, 1), oracle);
    CHECK(record.final_id == dataset.items[0].id);
}

TEST_CASE("tournament winner beats every champion under the true utility") {
    const auto dataset = helpers::linear_synthetic(50, 4, 10, 91);
    auto oracle = true_oracle(dataset);
    const auto record =
        run_listen_t(dataset, config_for(AlgorithmKind::ListenT, 6, 12), oracle);
    const auto normalized = normalize_minmax(build_feature_matrix(dataset, true));
    const auto scores = score_all(dataset.generator->weights, normalized);
    const auto winner_score = scores[dataset.item_index(record.final_id)];
    for (const auto& entry : record.entries) {
        CHECK(winner_score >= scores[dataset.item_index(entry.selected_id)] - 1e-12);
    }
}

TEST_CASE("random baseline draws uniformly") {
    const auto dataset = helpers::linear_synthetic(10, 2, 3, 13);
    std::map<std::string, int> counts;
    const int runs = 600;
    const int iterations = 5;
    for (int r = 0; r < runs; ++r) {
        const auto record =
            run_baseline_random(dataset, config_for(AlgorithmKind::BaselineRandom, iterations, r));
        for (const auto& entry : record.entries) ++counts[entry.selected_id];
    }
    const int total = runs * iterations;
    const double expected = total / 10.0;
    double chi_square = 0.0;
    for (const auto& item : dataset.items) {
        const double observed = counts[item.id];
        chi_square += (observed - expected) * (observed - expected) / expected;
    }
    // 9 degrees of freedom; 99.9th percentile is 27.88.
    CHECK(chi_square < 27.88);
}

TEST_CASE("z-score averages match a hand-computed example") {
    listen::Dataset dataset;
    dataset.name = "zs";
    dataset.persona = "p";
    dataset.utterance = "u";
    dataset.schema = {
        {"up", AttributeKind::Numerical, Direction::Maximize, "", ""},
        {"down", AttributeKind::Numerical, Direction::Minimize, "", ""},
        {"flat", AttributeKind::Numerical, Direction::Maximize, "", ""},
        {"cat", AttributeKind::Categorical, Direction::Neutral, "", ""},
    };
    for (int i = 0; i < 3; ++i) {
        Item item;
        item.id = "i" + std::to_string(i);
        item.numerical = {{"up", 1.0 + i}, {"down", 1.0 + i}, {"flat", 4.0}};
        item.categorical = {{"cat", i == 0 ? "x" : "y"}};
        dataset.items.push_back(item);
    }
    dataset.ground_truth.ranking = {"i2"};

    const auto scores = zscore_average_scores(dataset);
    // Population z-scores of {1,2,3} are {-1.2247, 0, 1.2247}; "down" negates
    // them, "flat" is constant and contributes 0, the categorical is skipped.
    const double z = std::sqrt(1.5);
    CHECK(scores[0] == doctest::Approx((-z + z + 0.0) / 3.0).epsilon(1e-9));
    CHECK(scores[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(scores[2] == doctest::Approx((z - z + 0.0) / 3.0).epsilon(1e-9));
}

TEST_CASE("z-score baseline selects one item and repeats it every iteration") {
    const auto dataset = helpers::linear_synthetic(30, 4, 6, 44);
    const auto record =
        run_baseline_zscore(dataset, config_for(AlgorithmKind::BaselineZscore, 8, 0));
    REQUIRE(record.entries.size() == 8);
    const auto scores = zscore_average_scores(dataset);
    const auto expected = dataset.items[argmax_index(scores)].id;
    for (const auto& entry : record.entries) {
        CHECK(entry.selected_id == expected);
    }
}

TEST_CASE("baselines run without an oracle; oracle-backed algorithms demand one") {
    const auto dataset = helpers::linear_synthetic(12, 2, 3, 3);
    CHECK_NOTHROW(run_algorithm(dataset, config_for(AlgorithmKind::BaselineRandom, 2, 0),
                                nullptr));
    CHECK_THROWS(run_algorithm(dataset, config_for(AlgorithmKind::ListenU, 2, 0), nullptr));
}

TEST_CASE("ablated runs never mention the user priorities") {
    const auto dataset = helpers::linear_synthetic(20, 3, 4, 61);
    auto config = config_for(AlgorithmKind::ListenU, 3, 5);
    config.ablation_base_prompt = true;
    auto oracle = true_oracle(dataset);
    const auto record = run_listen_u(dataset, config, oracle);
    for (const auto& entry : record.transcript.entries) {
        CHECK(entry.prompt.find(kSectionUserPriorities) == std::string::npos);
        CHECK(entry.prompt.find(dataset.utterance) == std::string::npos);
    }
}

TEST_CASE("single-iteration runs work for every non-tournament algorithm") {
    const auto dataset = helpers::linear_synthetic(10, 2, 3, 8);
    for (auto kind : {AlgorithmKind::ListenU, AlgorithmKind::BaselineRandom,
                      AlgorithmKind::BaselineZscore}) {
        auto oracle = true_oracle(dataset);
        const auto record = run_algorithm(dataset, config_for(kind, 1, 0), &oracle);
        CHECK(record.entries.size() == 1);
        CHECK_FALSE(record.final_id.empty());
    }
}
