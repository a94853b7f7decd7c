#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "listen/core.hpp"
#include "listen/rng.hpp"

namespace listen {

/// Throws SchemaError (listing offending item ids and fields) when any
/// core invariant is violated.
void validate_dataset(const Dataset& dataset);

Dataset parse_dataset(const nlohmann::json& document);
nlohmann::json dataset_to_json(const Dataset& dataset);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

struct NumericalAttributeSpec {
    std::string name;
    double min_value = 0.0;
    double max_value = 1.0;
    Direction direction = Direction::Maximize;
};

struct CategoricalAttributeSpec {
    std::string name;
    int cardinality = 2;
};

enum class GeneratorKind { Linear, Lexicographic, Threshold };

std::string to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& s);

/// Recipe for a synthetic dataset. The embedded generator defines the true
/// preference order; ground truth is its top-m (adjacent-rank swaps are
/// applied when noise > 0). The generator parameters are persisted in the
/// emitted dataset so scripted oracles can reuse them.
struct SyntheticSpec {
    std::string name = "synthetic";
    int num_items = 50;
    std::vector<NumericalAttributeSpec> numerical;
    std::vector<CategoricalAttributeSpec> categorical;
    GeneratorKind generator = GeneratorKind::Linear;
    // Linear/threshold: weights over the normalized feature expansion
    // (one-hot included). Drawn from U[-1,1] when absent.
    std::optional<WeightVector> true_weights;
    // Threshold generator: items with constraint_attribute above the
    // threshold are ordered strictly below all feasible items.
    std::string constraint_attribute;
    double constraint_threshold = 0.0;
    double noise = 0.0;  // probability of swapping each adjacent ranked pair
    int ranked_count = 10;
    std::optional<int> tie_group_size;
    std::uint64_t seed = 0;
};

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& document);

Dataset generate_synthetic(const SyntheticSpec& spec);

/// True-preference order (item indices, best first) induced by a dataset's
/// persisted generator. Used by tests and ground-truth consistency checks.
std::vector<std::size_t> generator_preference_order(const Dataset& dataset);

/// Convenience spec: `num_attributes` maximize-direction attributes on
/// [0, 1] with random positive-or-negative true weights.
SyntheticSpec random_linear_spec(int num_items, int num_attributes, int ranked_count,
                                 std::uint64_t seed);

}  // namespace listen
