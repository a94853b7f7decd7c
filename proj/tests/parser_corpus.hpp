#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Hand-written oracle responses, well-formed and malformed, shared by the
// unit tests and the conformance check in the acceptance binary.
namespace corpus {

struct ChampionCase {
    std::string raw;
    std::size_t candidate_count;
    bool ok;
    std::size_t expected;  // meaningful only when ok
};

inline std::vector<ChampionCase> champion_cases() {
    return {
        {"FINAL A (B, C)", 5, true, 0},
        {"FINAL B", 5, true, 1},
        {"FINAL: C", 5, true, 2},
        {"I compared the options carefully.\nFINAL D (A, B, C)", 5, true, 3},
        {"FINAL E", 5, true, 4},
        {"FINAL A", 1, true, 0},
        {"FINAL  B  (A)", 5, true, 1},
        {"some reasoning first FINAL A\n", 5, true, 0},
        {"FINAL A (B, C ...)", 5, true, 0},
        {"FINAL Z", 26, true, 25},
        {"FINAL AA", 27, true, 26},
        {"FINAL AB (A)", 30, true, 27},
        {"FINAL\tC", 5, true, 2},
        {"FINAL B, although FINAL C (A) on reflection", 5, true, 2},
        {"FINAL A (B", 5, true, 0},
        {"FINAL F", 5, false, 0},
        {"FINAL AA", 26, false, 0},
        {"FINAL", 5, false, 0},
        {"no decision token here", 5, false, 0},
        {"", 5, false, 0},
        {"FINAL 3", 5, false, 0},
        {"FINAL a", 5, false, 0},
        {"The FINAL answer deserves thought", 5, false, 0},
    };
}

struct WeightCase {
    std::string raw;
    bool strict;
    bool ok;
    double expected_x;  // meaningful only when ok
    double expected_y;
};

// Layout for every weight case is {"x", "y"}.
inline std::vector<WeightCase> weight_cases() {
    return {
        {R"({"x": 1.0, "y": -0.5})", false, true, 1.0, -0.5},
        {R"({"x": 1.0, "y": -0.5})", true, true, 1.0, -0.5},
        {R"(Sure! Here are the weights: {"x": 0.2, "y": 0.3} Hope that helps.)", false, true,
         0.2, 0.3},
        {R"(Sure! {"x": 0.2, "y": 0.3})", true, false, 0, 0},
        {R"({"x": 1.0})", false, true, 1.0, 0.0},
        {R"({"x": 1.0})", true, false, 0, 0},
        {R"({"x": 1, "y": 2, "z": 3})", false, true, 1.0, 2.0},
        {R"({"x": 1, "y": 2, "z": 3})", true, false, 0, 0},
        {"no json at all", false, false, 0, 0},
        {R"({"x": "high", "y": 0})", false, false, 0, 0},
        {R"({"x": 0.5, "y": {"nested": 1}})", false, false, 0, 0},
        {"```json\n{\"x\": -1, \"y\": 1}\n```", false, true, -1.0, 1.0},
        {R"({"x": 1.0, "y": 0.5)", false, false, 0, 0},
        {"{}", false, true, 0.0, 0.0},
        {R"({"y": 2e-1, "x": -3E2})", false, true, -300.0, 0.2},
        {R"({"x": 1, "y": 0} {"x": 9, "y": 9})", false, true, 1.0, 0.0},
        {"text with { brace but no object", false, false, 0, 0},
        {R"({"x": null, "y": 1})", false, false, 0, 0},
        {R"(weights: {"x": 0.125, "y": 0.875}.)", false, true, 0.125, 0.875},
    };
}

}  // namespace corpus
