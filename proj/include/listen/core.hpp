#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace listen {

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AttributeKind { Numerical, Categorical, Textual };
enum class Direction { Maximize, Minimize, Neutral };

std::string to_string(AttributeKind kind);
std::string to_string(Direction direction);
AttributeKind attribute_kind_from_string(const std::string& s);
Direction direction_from_string(const std::string& s);

/// One attribute column: its kind, optimization direction and the
/// human-readable description rendered into the metric-definitions prompt.
struct AttributeSchema {
    std::string name;
    AttributeKind kind = AttributeKind::Numerical;
    Direction direction = Direction::Maximize;
    std::string units;
    std::string description;
};

/// One candidate with mixed-type attributes keyed by schema name.
struct Item {
    std::string id;
    std::map<std::string, double> numerical;
    std::map<std::string, std::string> categorical;
    std::map<std::string, std::string> textual;
};

/// Expert ranking over a subset of items; an optional leading tie group
/// marks the top `tie_group_size` positions as mutually tied.
struct GroundTruth {
    std::vector<std::string> ranking;
    std::optional<std::size_t> tie_group_size;

    bool empty() const { return ranking.empty(); }
};

/// Parameters of the synthetic preference generator, persisted with a
/// dataset so scripted oracles can replay the true preference order.
struct GeneratorInfo {
    std::string kind;  // "linear", "lexicographic", "threshold"
    std::map<std::string, double> weights;
    std::string constraint_attribute;
    double constraint_threshold = 0.0;
    bool constraint_is_upper_bound = true;  // feasible iff value <= threshold
    std::vector<std::string> tier_order;
};

struct Dataset {
    std::string name;
    std::string persona;
    std::string utterance;
    std::vector<AttributeSchema> schema;
    std::vector<Item> items;
    GroundTruth ground_truth;
    std::optional<GeneratorInfo> generator;

    const AttributeSchema* find_attribute(const std::string& name) const;
    const Item* find_item(const std::string& id) const;
    std::size_t item_index(const std::string& id) const;  // throws if absent
};

/// Column-aligned numerical representation of every item: raw numerical
/// columns in schema order, then one-hot columns per categorical attribute
/// in first-seen category order.
struct FeatureMatrix {
    std::vector<std::string> layout;
    std::vector<std::vector<double>> rows;

    std::size_t num_items() const { return rows.size(); }
    std::size_t num_features() const { return layout.size(); }
};

using WeightVector = std::map<std::string, double>;

FeatureMatrix build_feature_matrix(const Dataset& dataset, bool include_categorical);

/// Maps each column to [0, 1] by (x - min) / (max - min); constant columns
/// map to 0 everywhere.
FeatureMatrix normalize_minmax(const FeatureMatrix& matrix);

/// Orders the weight map by layout; throws SchemaError on any mismatch.
std::vector<double> align_weights(const WeightVector& weights,
                                  const std::vector<std::string>& layout);

double score(const WeightVector& weights, const std::vector<std::string>& layout,
             const std::vector<double>& values);

/// Index of the maximal value; ties break toward the lowest index.
std::size_t argmax_index(const std::vector<double>& values);

std::vector<double> score_all(const WeightVector& weights, const FeatureMatrix& matrix);

const Item& argmax_item(const WeightVector& weights, const FeatureMatrix& normalized,
                        const std::vector<Item>& items);

}  // namespace listen
