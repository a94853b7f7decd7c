#include "listen/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace listen {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

void validate_dataset(const Dataset& dataset) {
    std::vector<std::string> problems;

    std::vector<std::string> names;
    for (const auto& attr : dataset.schema) {
        if (std::find(names.begin(), names.end(), attr.name) != names.end()) {
            problems.push_back("duplicate attribute name '" + attr.name + "'");
        }
        names.push_back(attr.name);
        // Numerical attributes need a direction; the z-score baseline has no
        // other way to orient them.
        if (attr.direction == Direction::Neutral && attr.kind == AttributeKind::Numerical) {
            problems.push_back("numerical attribute '" + attr.name +
                               "' must declare maximize or minimize");
        }
    }

    std::vector<std::string> ids;
    for (const auto& item : dataset.items) {
        if (std::find(ids.begin(), ids.end(), item.id) != ids.end()) {
            problems.push_back("duplicate item id '" + item.id + "'");
        }
        ids.push_back(item.id);

        auto check_known = [&](const std::string& attr_name, AttributeKind kind) {
            const auto* attr = dataset.find_attribute(attr_name);
            if (!attr) {
                problems.push_back("item '" + item.id + "' references unknown attribute '" +
                                   attr_name + "'");
            } else if (attr->kind != kind) {
                problems.push_back("item '" + item.id + "' stores attribute '" + attr_name +
                                   "' as " + to_string(kind) + " but schema says " +
                                   to_string(attr->kind));
            }
        };
        for (const auto& [attr_name, value] : item.numerical) {
            check_known(attr_name, AttributeKind::Numerical);
            if (!std::isfinite(value)) {
                problems.push_back("item '" + item.id + "' has non-finite value for '" +
                                   attr_name + "'");
            }
        }
        for (const auto& [attr_name, _] : item.categorical) {
            check_known(attr_name, AttributeKind::Categorical);
        }
        for (const auto& [attr_name, _] : item.textual) {
            check_known(attr_name, AttributeKind::Textual);
        }

        // Numerical and categorical attributes are mandatory on every item;
        // only textual ones may be absent.
        for (const auto& attr : dataset.schema) {
            const bool present =
                (attr.kind == AttributeKind::Numerical && item.numerical.count(attr.name)) ||
                (attr.kind == AttributeKind::Categorical && item.categorical.count(attr.name)) ||
                attr.kind == AttributeKind::Textual;
            if (!present) {
                problems.push_back("item '" + item.id + "' is missing attribute '" +
                                   attr.name + "'");
            }
        }
    }

    std::vector<std::string> seen_gt;
    for (const auto& id : dataset.ground_truth.ranking) {
        if (!dataset.find_item(id)) {
            problems.push_back("ground-truth id '" + id + "' not among items");
        }
        if (std::find(seen_gt.begin(), seen_gt.end(), id) != seen_gt.end()) {
            problems.push_back("ground-truth id '" + id + "' appears twice");
        }
        seen_gt.push_back(id);
    }
    if (dataset.ground_truth.ranking.size() > dataset.items.size()) {
        problems.push_back("ground truth ranks more items than the dataset holds");
    }
    if (dataset.ground_truth.tie_group_size &&
        *dataset.ground_truth.tie_group_size > dataset.ground_truth.ranking.size()) {
        problems.push_back("tie group larger than the ranked list");
    }

    if (!problems.empty()) {
        std::string message = "dataset '" + dataset.name + "' failed validation:";
        for (const auto& problem : problems) {
            message += "\n  - " + problem;
        }
        throw SchemaError(message);
    }
}

// ---------------------------------------------------------------------------
// JSON round trip
// ---------------------------------------------------------------------------

Dataset parse_dataset(const json& document) {
    Dataset dataset;
    dataset.name = document.value("name", "");
    dataset.persona = document.value("persona", "");
    dataset.utterance = document.value("utterance", "");

    for (const auto& entry : document.at("schema")) {
        AttributeSchema attr;
        attr.name = entry.at("name").get<std::string>();
        attr.kind = attribute_kind_from_string(entry.at("kind").get<std::string>());
        attr.direction = direction_from_string(entry.value("direction", "maximize"));
        attr.units = entry.value("units", "");
        attr.description = entry.value("description", "");
        dataset.schema.push_back(std::move(attr));
    }

    for (const auto& entry : document.at("items")) {
        Item item;
        item.id = entry.at("id").get<std::string>();
        for (const auto& [attr_name, value] : entry.at("attributes").items()) {
            const auto* attr = dataset.find_attribute(attr_name);
            if (!attr) {
                throw SchemaError("item '" + item.id + "' references unknown attribute '" +
                                  attr_name + "'");
            }
            switch (attr->kind) {
                case AttributeKind::Numerical:
                    if (!value.is_number()) {
                        throw SchemaError("item '" + item.id + "': attribute '" + attr_name +
                                          "' must be a number");
                    }
                    item.numerical[attr_name] = value.get<double>();
                    break;
                case AttributeKind::Categorical:
                    item.categorical[attr_name] = value.get<std::string>();
                    break;
                case AttributeKind::Textual:
                    item.textual[attr_name] = value.get<std::string>();
                    break;
            }
        }
        dataset.items.push_back(std::move(item));
    }

    if (document.contains("ground_truth") && !document.at("ground_truth").is_null()) {
        const auto& gt = document.at("ground_truth");
        dataset.ground_truth.ranking = gt.value("ranking", std::vector<std::string>{});
        if (gt.contains("tie_group_size") && !gt.at("tie_group_size").is_null()) {
            dataset.ground_truth.tie_group_size = gt.at("tie_group_size").get<std::size_t>();
        }
    }

    if (document.contains("generator") && !document.at("generator").is_null()) {
        const auto& gen = document.at("generator");
        GeneratorInfo info;
        info.kind = gen.at("kind").get<std::string>();
        if (gen.contains("weights")) {
            for (const auto& [key, value] : gen.at("weights").items()) {
                info.weights[key] = value.get<double>();
            }
        }
        info.constraint_attribute = gen.value("constraint_attribute", "");
        info.constraint_threshold = gen.value("constraint_threshold", 0.0);
        info.constraint_is_upper_bound = gen.value("constraint_is_upper_bound", true);
        info.tier_order = gen.value("tier_order", std::vector<std::string>{});
        dataset.generator = std::move(info);
    }

    validate_dataset(dataset);
    return dataset;
}

json dataset_to_json(const Dataset& dataset) {
    json schema = json::array();
    for (const auto& attr : dataset.schema) {
        schema.push_back({
            {"name", attr.name},
            {"kind", to_string(attr.kind)},
            {"direction", to_string(attr.direction)},
            {"units", attr.units},
            {"description", attr.description},
        });
    }

    json items = json::array();
    for (const auto& item : dataset.items) {
        json attributes = json::object();
        for (const auto& [key, value] : item.numerical) attributes[key] = value;
        for (const auto& [key, value] : item.categorical) attributes[key] = value;
        for (const auto& [key, value] : item.textual) attributes[key] = value;
        items.push_back({{"id", item.id}, {"attributes", std::move(attributes)}});
    }

    json ground_truth = {{"ranking", dataset.ground_truth.ranking}};
    if (dataset.ground_truth.tie_group_size) {
        ground_truth["tie_group_size"] = *dataset.ground_truth.tie_group_size;
    }

    json document = {
        {"name", dataset.name},
        {"persona", dataset.persona},
        {"utterance", dataset.utterance},
        {"schema", std::move(schema)},
        {"items", std::move(items)},
        {"ground_truth", std::move(ground_truth)},
    };

    if (dataset.generator) {
        const auto& info = *dataset.generator;
        json gen = {{"kind", info.kind}};
        if (!info.weights.empty()) {
            json weights = json::object();
            for (const auto& [key, value] : info.weights) weights[key] = value;
            gen["weights"] = std::move(weights);
        }
        if (!info.constraint_attribute.empty()) {
            gen["constraint_attribute"] = info.constraint_attribute;
            gen["constraint_threshold"] = info.constraint_threshold;
            gen["constraint_is_upper_bound"] = info.constraint_is_upper_bound;
        }
        if (!info.tier_order.empty()) {
            gen["tier_order"] = info.tier_order;
        }
        document["generator"] = std::move(gen);
    }
    return document;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream stream(path);
    if (!stream) {
        throw SchemaError("cannot open dataset file: " + path.string());
    }
    json document = json::parse(stream, nullptr, false);
    if (document.is_discarded()) {
        throw SchemaError("dataset file is not valid JSON: " + path.string());
    }
    return parse_dataset(document);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream stream(path);
    if (!stream) {
        throw SchemaError("cannot write dataset file: " + path.string());
    }
    stream << dataset_to_json(dataset).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

std::string to_string(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::Linear: return "linear";
        case GeneratorKind::Lexicographic: return "lexicographic";
        case GeneratorKind::Threshold: return "threshold";
    }
    throw std::logic_error("unknown GeneratorKind");
}

GeneratorKind generator_kind_from_string(const std::string& s) {
    if (s == "linear") return GeneratorKind::Linear;
    if (s == "lexicographic") return GeneratorKind::Lexicographic;
    if (s == "threshold") return GeneratorKind::Threshold;
    throw SchemaError("unknown generator kind: '" + s + "'");
}

SyntheticSpec synthetic_spec_from_json(const json& document) {
    SyntheticSpec spec;
    spec.name = document.value("name", spec.name);
    spec.num_items = document.value("num_items", spec.num_items);
    if (document.contains("numerical")) {
        for (const auto& entry : document.at("numerical")) {
            NumericalAttributeSpec attr;
            attr.name = entry.at("name").get<std::string>();
            attr.min_value = entry.value("min", 0.0);
            attr.max_value = entry.value("max", 1.0);
            attr.direction = direction_from_string(entry.value("direction", "maximize"));
            spec.numerical.push_back(std::move(attr));
        }
    }
    if (document.contains("categorical")) {
        for (const auto& entry : document.at("categorical")) {
            CategoricalAttributeSpec attr;
            attr.name = entry.at("name").get<std::string>();
            attr.cardinality = entry.value("cardinality", 2);
            spec.categorical.push_back(std::move(attr));
        }
    }
    spec.generator = generator_kind_from_string(document.value("generator", "linear"));
    if (document.contains("true_weights") && !document.at("true_weights").is_null()) {
        WeightVector weights;
        for (const auto& [key, value] : document.at("true_weights").items()) {
            weights[key] = value.get<double>();
        }
        spec.true_weights = std::move(weights);
    }
    spec.constraint_attribute = document.value("constraint_attribute", "");
    spec.constraint_threshold = document.value("constraint_threshold", 0.0);
    spec.noise = document.value("noise", 0.0);
    spec.ranked_count = document.value("ranked_count", spec.ranked_count);
    if (document.contains("tie_group_size") && !document.at("tie_group_size").is_null()) {
        spec.tie_group_size = document.at("tie_group_size").get<int>();
    }
    spec.seed = document.value("seed", static_cast<std::uint64_t>(0));
    return spec;
}

namespace {

std::string item_id_for(int index, int total) {
    int width = 1;
    for (int v = total - 1; v >= 10; v /= 10) ++width;
    width = std::max(width, 3);
    std::ostringstream out;
    out << "item_";
    out.width(width);
    out.fill('0');
    out << index;
    return out.str();
}

/// Preference order under a generator description; best first, ties broken
/// by lower item index.
std::vector<std::size_t> preference_order(const Dataset& dataset, const GeneratorInfo& info) {
    const std::size_t n = dataset.items.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    if (info.kind == "lexicographic") {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            for (const auto& attr_name : info.tier_order) {
                const auto* attr = dataset.find_attribute(attr_name);
                const double va = dataset.items[a].numerical.at(attr_name);
                const double vb = dataset.items[b].numerical.at(attr_name);
                if (va == vb) continue;
                const bool smaller_better = attr && attr->direction == Direction::Minimize;
                return smaller_better ? va < vb : va > vb;
            }
            return false;
        });
        return order;
    }

    const auto normalized = normalize_minmax(build_feature_matrix(dataset, true));
    auto utilities = score_all(info.weights, normalized);
    if (info.kind == "threshold" && !info.constraint_attribute.empty()) {
        // Infeasible items are pushed strictly below every feasible one.
        constexpr double kPenalty = 1e6;
        for (std::size_t i = 0; i < n; ++i) {
            const double value = dataset.items[i].numerical.at(info.constraint_attribute);
            const bool feasible = info.constraint_is_upper_bound
                                      ? value <= info.constraint_threshold
                                      : value >= info.constraint_threshold;
            if (!feasible) utilities[i] -= kPenalty;
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return utilities[a] > utilities[b]; });
    return order;
}

}  // namespace

std::vector<std::size_t> generator_preference_order(const Dataset& dataset) {
    if (!dataset.generator) {
        throw SchemaError("dataset '" + dataset.name + "' has no persisted generator");
    }
    return preference_order(dataset, *dataset.generator);
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.num_items <= 0) {
        throw SchemaError("synthetic spec: num_items must be positive");
    }
    if (spec.numerical.empty()) {
        throw SchemaError("synthetic spec: at least one numerical attribute required");
    }
    if (spec.ranked_count < 0 || spec.ranked_count > spec.num_items) {
        throw SchemaError("synthetic spec: ranked_count out of range");
    }
    if (spec.generator == GeneratorKind::Threshold && spec.constraint_attribute.empty()) {
        throw SchemaError("synthetic spec: threshold generator needs a constraint attribute");
    }

    Rng rng(spec.seed);

    Dataset dataset;
    dataset.name = spec.name;
    dataset.persona = "You are an expert assistant selecting the best candidate for a client.";
    dataset.utterance =
        "Pick the candidate that best balances the listed metrics according to their "
        "stated directions; respect any hard constraints mentioned in the definitions.";

    for (const auto& attr : spec.numerical) {
        dataset.schema.push_back({attr.name, AttributeKind::Numerical, attr.direction, "",
                                  "synthetic numerical metric"});
    }
    for (const auto& attr : spec.categorical) {
        dataset.schema.push_back({attr.name, AttributeKind::Categorical, Direction::Maximize,
                                  "", "synthetic categorical metric"});
    }

    for (int i = 0; i < spec.num_items; ++i) {
        Item item;
        item.id = item_id_for(i, spec.num_items);
        for (const auto& attr : spec.numerical) {
            item.numerical[attr.name] = rng.uniform(attr.min_value, attr.max_value);
        }
        for (const auto& attr : spec.categorical) {
            item.categorical[attr.name] =
                "c" + std::to_string(rng.index(static_cast<std::size_t>(attr.cardinality)));
        }
        dataset.items.push_back(std::move(item));
    }

    GeneratorInfo info;
    info.kind = to_string(spec.generator);
    if (spec.generator == GeneratorKind::Lexicographic) {
        for (const auto& attr : spec.numerical) {
            info.tier_order.push_back(attr.name);
        }
    } else {
        const auto layout = build_feature_matrix(dataset, true).layout;
        for (const auto& label : layout) {
            if (spec.true_weights && spec.true_weights->count(label)) {
                info.weights[label] = spec.true_weights->at(label);
            } else if (spec.true_weights) {
                info.weights[label] = 0.0;
            } else {
                info.weights[label] = rng.uniform(-1.0, 1.0);
            }
        }
        if (spec.generator == GeneratorKind::Threshold) {
            info.constraint_attribute = spec.constraint_attribute;
            info.constraint_threshold = spec.constraint_threshold;
        }
    }
    dataset.generator = info;

    auto order = preference_order(dataset, info);
    if (spec.noise > 0.0) {
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            if (rng.uniform() < spec.noise) std::swap(order[i], order[i + 1]);
        }
    }
    for (int k = 0; k < spec.ranked_count; ++k) {
        dataset.ground_truth.ranking.push_back(dataset.items[order[k]].id);
    }
    if (spec.tie_group_size) {
        dataset.ground_truth.tie_group_size = static_cast<std::size_t>(*spec.tie_group_size);
    }

    validate_dataset(dataset);
    return dataset;
}

SyntheticSpec random_linear_spec(int num_items, int num_attributes, int ranked_count,
                                 std::uint64_t seed) {
    SyntheticSpec spec;
    spec.name = "linear_" + std::to_string(seed);
    spec.num_items = num_items;
    spec.ranked_count = ranked_count;
    spec.seed = seed;
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    WeightVector weights;
    for (int j = 0; j < num_attributes; ++j) {
        const std::string name = "attr_" + std::to_string(j);
        spec.numerical.push_back({name, 0.0, 1.0, Direction::Maximize});
        // Magnitudes bounded away from zero keep the sign identifiable.
        const double magnitude = rng.uniform(0.3, 1.0);
        weights[name] = rng.uniform() < 0.5 ? magnitude : -magnitude;
    }
    spec.true_weights = std::move(weights);
    return spec;
}

}  // namespace listen
