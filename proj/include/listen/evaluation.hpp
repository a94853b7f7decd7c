#pragma once

#include <string>
#include <vector>

#include "listen/algorithms.hpp"
#include "listen/core.hpp"
#include "listen/rng.hpp"

namespace listen {

// ---------------------------------------------------------------------------
// Normalized Average Rank
// ---------------------------------------------------------------------------

struct RankOutcome {
    std::string item_id;
    double raw_rank = 0.0;        // position 1..m, or the shared unranked rank
    double normalized_rank = 0.0;  // raw_rank / N, in (0, 1]
    bool ranked = false;
};

/// Unranked selections share the average rank (m+1+N)/2.
RankOutcome normalized_average_rank(const std::string& selected_id, const Dataset& dataset);

/// The shared unranked rank for a dataset of N items with m ranked.
double unranked_rank(std::size_t total_items, std::size_t ranked_items);

// ---------------------------------------------------------------------------
// Concordance
// ---------------------------------------------------------------------------

struct ConcordanceResult {
    double p = 0.0;
    double two_se = 0.0;
    int num_samples = 0;
    int successes = 0;
    bool normalized_features = true;
};

double two_standard_errors(double p, int num_samples);

/// Fraction of random Uniform[-1,1] linear utilities whose argmax item is
/// the human top item (or lies in the declared top tie group). Scores on
/// min-max normalized features by default; raw features via the flag.
ConcordanceResult concordance(const Dataset& dataset, int num_samples, Rng& rng,
                              bool normalized_features = true);

// ---------------------------------------------------------------------------
// Utility fitting (pairwise logistic regression)
// ---------------------------------------------------------------------------

struct FitDiagnostics {
    int iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
    bool unranked_pool_empty = false;
};

struct FittedUtility {
    std::string dataset_name;
    WeightVector weights;
    double intercept = 0.0;
    bool normalized_features = true;
    FitDiagnostics diagnostics;
};

struct FitOptions {
    int num_pairs = 10000;
    double q = 0.95;       // probability the better-ranked item is labeled chosen
    double l2 = 1e-4;      // ridge penalty on weights (not the intercept)
    double tolerance = 1e-8;
    int max_iterations = 100;
    bool normalized_features = true;
};

/// Thrown when the solver hits the iteration cap; carries the partial fit.
class FitNonConvergenceError : public std::runtime_error {
public:
    FitNonConvergenceError(const std::string& message, FittedUtility partial)
        : std::runtime_error(message), partial_fit(std::move(partial)) {}

    FittedUtility partial_fit;
};

FittedUtility fit_utility(const Dataset& dataset, const FitOptions& options, Rng& rng);

/// Utility of one item under a fit (intercept excluded).
double fitted_utility_of(const FittedUtility& fit, const Dataset& dataset,
                         const std::string& item_id);

/// Per-iteration mean, across replications, of the fitted utility of each
/// run's selected item.
std::vector<double> average_utility_score(const std::vector<RunRecord>& records,
                                          const FittedUtility& fit, const Dataset& dataset);

}  // namespace listen
