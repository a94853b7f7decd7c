#pragma once

#include <string>
#include <vector>

#include "listen/core.hpp"
#include "listen/datasets.hpp"

namespace helpers {

/// Four items, two numerical attributes (one minimize), one categorical,
/// one textual; ground truth ranks the first three.
inline listen::Dataset tiny_dataset() {
    listen::Dataset dataset;
    dataset.name = "tiny";
    dataset.persona = "You are an expert assistant helping a traveler choose a flight.";
    dataset.utterance = "I want something cheap but not too slow.";
    dataset.schema = {
        {"price", listen::AttributeKind::Numerical, listen::Direction::Minimize, "USD",
         "total fare"},
        {"speed", listen::AttributeKind::Numerical, listen::Direction::Maximize, "km/h",
         "cruise speed"},
        {"cabin", listen::AttributeKind::Categorical, listen::Direction::Neutral, "",
         "cabin class"},
        {"notes", listen::AttributeKind::Textual, listen::Direction::Neutral, "",
         "free-form remarks"},
    };
    auto make = [](std::string id, double price, double speed, std::string cabin,
                   std::string notes) {
        listen::Item item;
        item.id = std::move(id);
        item.numerical = {{"price", price}, {"speed", speed}};
        item.categorical = {{"cabin", std::move(cabin)}};
        item.textual = {{"notes", std::move(notes)}};
        return item;
    };
    dataset.items = {
        make("f1", 100.0, 800.0, "economy", "red-eye"),
        make("f2", 250.0, 900.0, "business", "lie-flat"),
        make("f3", 180.0, 850.0, "economy", "window only"),
        make("f4", 400.0, 700.0, "first", "champagne"),
    };
    dataset.ground_truth.ranking = {"f1", "f3", "f2"};
    return dataset;
}

inline listen::Dataset linear_synthetic(int items, int attrs, int ranked,
                                        std::uint64_t seed) {
    return listen::generate_synthetic(
        listen::random_linear_spec(items, attrs, ranked, seed));
}

}  // namespace helpers
