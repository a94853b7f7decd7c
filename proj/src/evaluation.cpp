#include "listen/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <unordered_map>

#include <Eigen/Dense>

namespace listen {

// ---------------------------------------------------------------------------
// Normalized Average Rank
// ---------------------------------------------------------------------------

double unranked_rank(std::size_t total_items, std::size_t ranked_items) {
    return static_cast<double>(ranked_items + 1 + total_items) / 2.0;
}

RankOutcome normalized_average_rank(const std::string& selected_id, const Dataset& dataset) {
    if (dataset.ground_truth.empty()) {
        throw SchemaError("normalized_average_rank: dataset has no ground truth");
    }
    if (!dataset.find_item(selected_id)) {
        throw SchemaError("normalized_average_rank: unknown item id '" + selected_id + "'");
    }

    RankOutcome outcome;
    outcome.item_id = selected_id;
    const auto& ranking = dataset.ground_truth.ranking;
    const auto it = std::find(ranking.begin(), ranking.end(), selected_id);
    if (it != ranking.end()) {
        outcome.ranked = true;
        outcome.raw_rank = static_cast<double>(std::distance(ranking.begin(), it) + 1);
    } else {
        outcome.ranked = false;
        outcome.raw_rank = unranked_rank(dataset.items.size(), ranking.size());
    }
    outcome.normalized_rank = outcome.raw_rank / static_cast<double>(dataset.items.size());
    return outcome;
}

// ---------------------------------------------------------------------------
// Concordance
// ---------------------------------------------------------------------------

double two_standard_errors(double p, int num_samples) {
    if (num_samples <= 0) {
        throw std::invalid_argument("two_standard_errors: sample count must be positive");
    }
    return 2.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(num_samples));
}

ConcordanceResult concordance(const Dataset& dataset, int num_samples, Rng& rng,
                              bool normalized_features) {
    if (num_samples <= 0) {
        throw std::invalid_argument("concordance: sample count must be positive");
    }
    if (dataset.ground_truth.empty()) {
        throw SchemaError("concordance: dataset has no ground truth");
    }
    const bool has_numerical =
        std::any_of(dataset.schema.begin(), dataset.schema.end(),
                    [](const AttributeSchema& a) { return a.kind == AttributeKind::Numerical; });
    if (!has_numerical) {
        throw SchemaError("concordance: dataset has no numerical attributes");
    }

    auto matrix = build_feature_matrix(dataset, true);
    if (normalized_features) {
        matrix = normalize_minmax(matrix);
    }

    // Success target: the human top item, widened to the whole top tie group
    // when one is declared.
    const std::size_t tie = dataset.ground_truth.tie_group_size.value_or(1);
    std::vector<std::size_t> targets;
    for (std::size_t k = 0; k < std::min(tie, dataset.ground_truth.ranking.size()); ++k) {
        targets.push_back(dataset.item_index(dataset.ground_truth.ranking[k]));
    }

    const std::size_t d = matrix.layout.size();
    int successes = 0;
    std::vector<double> weights(d);
    for (int s = 0; s < num_samples; ++s) {
        for (std::size_t j = 0; j < d; ++j) {
            weights[j] = rng.uniform(-1.0, 1.0);
        }
        double best = -std::numeric_limits<double>::infinity();
        std::vector<std::size_t> argmax_set;
        for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
            double utility = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                utility += weights[j] * matrix.rows[i][j];
            }
            if (utility > best) {
                best = utility;
                argmax_set.assign(1, i);
            } else if (utility == best) {
                argmax_set.push_back(i);
            }
        }
        // Argmax ties count as success iff a target item is among the tied set.
        const bool hit = std::any_of(targets.begin(), targets.end(), [&](std::size_t t) {
            return std::find(argmax_set.begin(), argmax_set.end(), t) != argmax_set.end();
        });
        if (hit) ++successes;
    }

    ConcordanceResult result;
    result.num_samples = num_samples;
    result.successes = successes;
    result.p = static_cast<double>(successes) / static_cast<double>(num_samples);
    result.two_se = two_standard_errors(result.p, num_samples);
    result.normalized_features = normalized_features;
    return result;
}

// ---------------------------------------------------------------------------
// Utility fitting
// ---------------------------------------------------------------------------

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double penalized_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta, double l2) {
    // beta(0) is the intercept; the rest are weights.
    const Eigen::VectorXd z =
        (X * beta.tail(beta.size() - 1)).array() + beta(0);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        // log(1 + e^z) - y z, evaluated stably
        const double zi = z(i);
        loss += (zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi))) -
                y(i) * zi;
    }
    loss += 0.5 * l2 * beta.tail(beta.size() - 1).squaredNorm();
    return loss;
}

}  // namespace

FittedUtility fit_utility(const Dataset& dataset, const FitOptions& options, Rng& rng) {
    if (dataset.ground_truth.empty()) {
        throw SchemaError("fit_utility: dataset has no ground truth");
    }
    if (options.num_pairs < 2) {
        throw std::invalid_argument("fit_utility: num_pairs must be at least 2");
    }

    auto matrix = build_feature_matrix(dataset, true);
    if (options.normalized_features) {
        matrix = normalize_minmax(matrix);
    }
    const std::size_t d = matrix.layout.size();

    // Ranked pool with effective ranks; a declared top tie group shares rank 1.
    const auto& ranking = dataset.ground_truth.ranking;
    const std::size_t tie = dataset.ground_truth.tie_group_size.value_or(1);
    std::vector<std::size_t> ranked_indices;
    std::vector<std::size_t> effective_rank;
    for (std::size_t k = 0; k < ranking.size(); ++k) {
        ranked_indices.push_back(dataset.item_index(ranking[k]));
        effective_rank.push_back(k < tie ? 1 : k + 1);
    }
    std::vector<std::size_t> unranked_indices;
    for (std::size_t i = 0; i < dataset.items.size(); ++i) {
        if (std::find(ranked_indices.begin(), ranked_indices.end(), i) ==
            ranked_indices.end()) {
            unranked_indices.push_back(i);
        }
    }

    const bool no_unranked = unranked_indices.empty();
    if (no_unranked) {
        std::cerr << "[fit_utility] dataset '" << dataset.name
                  << "' has no unranked items; drawing all " << options.num_pairs
                  << " comparisons from the ranked pool\n";
    }
    const int ranked_pairs = no_unranked ? options.num_pairs : options.num_pairs / 2;
    const int cross_pairs = options.num_pairs - ranked_pairs;

    Eigen::MatrixXd X(options.num_pairs, static_cast<Eigen::Index>(d));
    Eigen::VectorXd y(options.num_pairs);
    int row = 0;

    // Each pair's orientation is randomized; otherwise every row has the
    // preferred item first and the intercept soaks up the label imbalance.
    auto emit = [&](std::size_t better, std::size_t worse, double label) {
        if (rng.uniform() < 0.5) {
            std::swap(better, worse);
            label = 1.0 - label;
        }
        for (std::size_t j = 0; j < d; ++j) {
            X(row, static_cast<Eigen::Index>(j)) =
                matrix.rows[better][j] - matrix.rows[worse][j];
        }
        y(row) = label;
        ++row;
    };

    for (int i = 0; i < ranked_pairs; ++i) {
        const std::size_t a = rng.index(ranked_indices.size());
        const std::size_t b = rng.index(ranked_indices.size());
        std::size_t better = a;
        std::size_t worse = b;
        if (effective_rank[a] > effective_rank[b]) {
            std::swap(better, worse);
        } else if (effective_rank[a] == effective_rank[b] && rng.uniform() < 0.5) {
            std::swap(better, worse);  // ties broken at random
        }
        emit(ranked_indices[better], ranked_indices[worse],
             rng.uniform() < options.q ? 1.0 : 0.0);
    }
    for (int i = 0; i < cross_pairs; ++i) {
        const std::size_t a = ranked_indices[rng.index(ranked_indices.size())];
        const std::size_t b = unranked_indices[rng.index(unranked_indices.size())];
        emit(a, b, 1.0);  // the ranked item is always chosen
    }

    // Newton iterations with backtracking on the penalized log-loss.
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d) + 1);
    double gradient_norm = 0.0;
    bool converged = false;
    int iteration = 0;
    for (; iteration < options.max_iterations; ++iteration) {
        const Eigen::VectorXd z = (X * beta.tail(beta.size() - 1)).array() + beta(0);
        Eigen::VectorXd p(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) p(i) = logistic(z(i));
        const Eigen::VectorXd residual = p - y;

        Eigen::VectorXd gradient(beta.size());
        gradient(0) = residual.sum();
        gradient.tail(beta.size() - 1) =
            X.transpose() * residual + options.l2 * beta.tail(beta.size() - 1);
        gradient_norm = gradient.norm();
        if (gradient_norm <= options.tolerance) {
            converged = true;
            break;
        }

        const Eigen::VectorXd s = p.array() * (1.0 - p.array());
        Eigen::MatrixXd hessian(beta.size(), beta.size());
        hessian(0, 0) = s.sum() + 1e-12;
        const Eigen::VectorXd xs = X.transpose() * s;
        hessian.block(1, 0, beta.size() - 1, 1) = xs;
        hessian.block(0, 1, 1, beta.size() - 1) = xs.transpose();
        hessian.block(1, 1, beta.size() - 1, beta.size() - 1) =
            X.transpose() * s.asDiagonal() * X +
            options.l2 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d),
                                                   static_cast<Eigen::Index>(d));

        const Eigen::VectorXd step = hessian.ldlt().solve(gradient);
        const double loss = penalized_loss(X, y, beta, options.l2);
        // Near the optimum the loss change sinks below rounding noise, so a
        // strict decrease test would reject the full Newton step and stall.
        const double slack = 1e-10 * (1.0 + std::abs(loss));
        double scale = 1.0;
        Eigen::VectorXd candidate = beta - step;
        while (scale > 1e-8 && penalized_loss(X, y, candidate, options.l2) > loss + slack) {
            scale *= 0.5;
            candidate = beta - scale * step;
        }
        beta = candidate;
    }

    FittedUtility fit;
    fit.dataset_name = dataset.name;
    fit.intercept = beta(0);
    fit.normalized_features = options.normalized_features;
    for (std::size_t j = 0; j < d; ++j) {
        fit.weights[matrix.layout[j]] = beta(static_cast<Eigen::Index>(j) + 1);
    }
    fit.diagnostics.iterations = iteration;
    fit.diagnostics.gradient_norm = gradient_norm;
    fit.diagnostics.converged = converged;
    fit.diagnostics.unranked_pool_empty = no_unranked;

    if (!converged) {
        throw FitNonConvergenceError(
            "fit_utility did not converge after " + std::to_string(options.max_iterations) +
                " iterations (gradient norm " + std::to_string(gradient_norm) + ")",
            std::move(fit));
    }
    return fit;
}

double fitted_utility_of(const FittedUtility& fit, const Dataset& dataset,
                         const std::string& item_id) {
    if (fit.dataset_name != dataset.name) {
        throw SchemaError("fitted utility belongs to dataset '" + fit.dataset_name +
                          "', not '" + dataset.name + "'");
    }
    auto matrix = build_feature_matrix(dataset, true);
    if (fit.normalized_features) {
        matrix = normalize_minmax(matrix);
    }
    return score(fit.weights, matrix.layout, matrix.rows[dataset.item_index(item_id)]);
}

std::vector<double> average_utility_score(const std::vector<RunRecord>& records,
                                          const FittedUtility& fit, const Dataset& dataset) {
    if (records.empty()) {
        throw std::invalid_argument("average_utility_score: no run records");
    }
    if (fit.dataset_name != dataset.name) {
        throw SchemaError("fitted utility belongs to dataset '" + fit.dataset_name +
                          "', not '" + dataset.name + "'");
    }

    auto matrix = build_feature_matrix(dataset, true);
    if (fit.normalized_features) {
        matrix = normalize_minmax(matrix);
    }
    std::unordered_map<std::string, double> utility_by_id;
    for (std::size_t i = 0; i < dataset.items.size(); ++i) {
        utility_by_id[dataset.items[i].id] =
            score(fit.weights, matrix.layout, matrix.rows[i]);
    }

    const std::size_t iterations = records.front().entries.size();
    for (const auto& record : records) {
        if (record.dataset_name != dataset.name) {
            throw SchemaError("run record belongs to dataset '" + record.dataset_name +
                              "', not '" + dataset.name + "'");
        }
        if (record.entries.size() != iterations) {
            throw SchemaError("run records disagree on iteration count");
        }
    }

    std::vector<double> means(iterations, 0.0);
    for (const auto& record : records) {
        for (std::size_t t = 0; t < iterations; ++t) {
            const auto it = utility_by_id.find(record.entries[t].selected_id);
            if (it == utility_by_id.end()) {
                throw SchemaError("run record selects unknown item '" +
                                  record.entries[t].selected_id + "'");
            }
            means[t] += it->second;
        }
    }
    for (auto& mean : means) {
        mean /= static_cast<double>(records.size());
    }
    return means;
}

}  // namespace listen
