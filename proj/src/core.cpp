#include "listen/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace listen {

std::string to_string(AttributeKind kind) {
    switch (kind) {
        case AttributeKind::Numerical: return "numerical";
        case AttributeKind::Categorical: return "categorical";
        case AttributeKind::Textual: return "textual";
    }
    throw std::logic_error("unknown AttributeKind");
}

std::string to_string(Direction direction) {
    switch (direction) {
        case Direction::Maximize: return "maximize";
        case Direction::Minimize: return "minimize";
        case Direction::Neutral: return "neutral";
    }
    throw std::logic_error("unknown Direction");
}

AttributeKind attribute_kind_from_string(const std::string& s) {
    if (s == "numerical") return AttributeKind::Numerical;
    if (s == "categorical") return AttributeKind::Categorical;
    if (s == "textual") return AttributeKind::Textual;
    throw SchemaError("unknown attribute kind: '" + s + "'");
}

Direction direction_from_string(const std::string& s) {
    if (s == "maximize") return Direction::Maximize;
    if (s == "minimize") return Direction::Minimize;
    if (s == "neutral") return Direction::Neutral;
    throw SchemaError("unknown direction: '" + s + "'");
}

const AttributeSchema* Dataset::find_attribute(const std::string& attr_name) const {
    for (const auto& attr : schema) {
        if (attr.name == attr_name) return &attr;
    }
    return nullptr;
}

const Item* Dataset::find_item(const std::string& id) const {
    for (const auto& item : items) {
        if (item.id == id) return &item;
    }
    return nullptr;
}

std::size_t Dataset::item_index(const std::string& id) const {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].id == id) return i;
    }
    throw SchemaError("item id not in dataset: '" + id + "'");
}

FeatureMatrix build_feature_matrix(const Dataset& dataset, bool include_categorical) {
    if (dataset.items.empty()) {
        throw SchemaError("build_feature_matrix: dataset has no items");
    }

    FeatureMatrix matrix;
    std::vector<const AttributeSchema*> numerical_attrs;
    for (const auto& attr : dataset.schema) {
        if (attr.kind == AttributeKind::Numerical) {
            numerical_attrs.push_back(&attr);
            matrix.layout.push_back(attr.name);
        }
    }

    // Category order within each one-hot block is first-seen over items.
    std::vector<const AttributeSchema*> categorical_attrs;
    std::vector<std::vector<std::string>> categories;
    if (include_categorical) {
        for (const auto& attr : dataset.schema) {
            if (attr.kind != AttributeKind::Categorical) continue;
            categorical_attrs.push_back(&attr);
            std::vector<std::string> seen;
            for (const auto& item : dataset.items) {
                auto it = item.categorical.find(attr.name);
                if (it == item.categorical.end()) {
                    throw SchemaError("item '" + item.id + "' missing categorical attribute '" +
                                      attr.name + "'");
                }
                if (std::find(seen.begin(), seen.end(), it->second) == seen.end()) {
                    seen.push_back(it->second);
                }
            }
            for (const auto& category : seen) {
                matrix.layout.push_back(attr.name + "=" + category);
            }
            categories.push_back(std::move(seen));
        }
    }

    matrix.rows.reserve(dataset.items.size());
    for (const auto& item : dataset.items) {
        std::vector<double> row;
        row.reserve(matrix.layout.size());
        for (const auto* attr : numerical_attrs) {
            auto it = item.numerical.find(attr->name);
            if (it == item.numerical.end()) {
                throw SchemaError("item '" + item.id + "' missing numerical attribute '" +
                                  attr->name + "'");
            }
            if (!std::isfinite(it->second)) {
                throw SchemaError("item '" + item.id + "' has non-finite value for '" +
                                  attr->name + "'");
            }
            row.push_back(it->second);
        }
        for (std::size_t a = 0; a < categorical_attrs.size(); ++a) {
            const auto& value = item.categorical.at(categorical_attrs[a]->name);
            for (const auto& category : categories[a]) {
                row.push_back(value == category ? 1.0 : 0.0);
            }
        }
        matrix.rows.push_back(std::move(row));
    }
    return matrix;
}

FeatureMatrix normalize_minmax(const FeatureMatrix& matrix) {
    if (matrix.rows.empty()) {
        throw SchemaError("normalize_minmax: empty matrix");
    }
    const std::size_t d = matrix.layout.size();
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& row : matrix.rows) {
        if (row.size() != d) {
            throw SchemaError("normalize_minmax: ragged matrix");
        }
        for (std::size_t j = 0; j < d; ++j) {
            lo[j] = std::min(lo[j], row[j]);
            hi[j] = std::max(hi[j], row[j]);
        }
    }

    FeatureMatrix out;
    out.layout = matrix.layout;
    out.rows.reserve(matrix.rows.size());
    for (const auto& row : matrix.rows) {
        std::vector<double> mapped(d);
        for (std::size_t j = 0; j < d; ++j) {
            const double range = hi[j] - lo[j];
            mapped[j] = range > 0.0 ? (row[j] - lo[j]) / range : 0.0;
        }
        out.rows.push_back(std::move(mapped));
    }
    return out;
}

std::vector<double> align_weights(const WeightVector& weights,
                                  const std::vector<std::string>& layout) {
    if (weights.size() != layout.size()) {
        throw SchemaError("weight vector has " + std::to_string(weights.size()) +
                          " keys, layout has " + std::to_string(layout.size()));
    }
    std::vector<double> aligned;
    aligned.reserve(layout.size());
    for (const auto& label : layout) {
        auto it = weights.find(label);
        if (it == weights.end()) {
            throw SchemaError("weight vector missing layout key '" + label + "'");
        }
        if (!std::isfinite(it->second)) {
            throw SchemaError("weight for '" + label + "' is not finite");
        }
        aligned.push_back(it->second);
    }
    return aligned;
}

double score(const WeightVector& weights, const std::vector<std::string>& layout,
             const std::vector<double>& values) {
    if (values.size() != layout.size()) {
        throw SchemaError("feature vector length does not match layout");
    }
    const auto aligned = align_weights(weights, layout);
    double total = 0.0;
    for (std::size_t j = 0; j < aligned.size(); ++j) {
        total += aligned[j] * values[j];
    }
    return total;
}

std::size_t argmax_index(const std::vector<double>& values) {
    if (values.empty()) {
        throw std::invalid_argument("argmax_index: empty input");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

std::vector<double> score_all(const WeightVector& weights, const FeatureMatrix& matrix) {
    const auto aligned = align_weights(weights, matrix.layout);
    std::vector<double> scores;
    scores.reserve(matrix.rows.size());
    for (const auto& row : matrix.rows) {
        double total = 0.0;
        for (std::size_t j = 0; j < aligned.size(); ++j) {
            total += aligned[j] * row[j];
        }
        scores.push_back(total);
    }
    return scores;
}

const Item& argmax_item(const WeightVector& weights, const FeatureMatrix& normalized,
                        const std::vector<Item>& items) {
    if (items.empty() || normalized.rows.empty()) {
        throw std::invalid_argument("argmax_item: empty input");
    }
    if (items.size() != normalized.rows.size()) {
        throw SchemaError("argmax_item: item list and feature matrix are misaligned");
    }
    return items[argmax_index(score_all(weights, normalized))];
}

}  // namespace listen
