#include "semrob/ranking.hpp"

#include "semrob/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace semrob {

std::vector<double> normalized_energies(const Perturbation& delta, const BudgetMatrix& m) {
    const double energy = m_norm(delta, m);
    if (energy == 0.0) throw ConfigError("normalized energies of a zero perturbation");
    std::vector<double> out(delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
        out[i] = delta[i] * delta[i] * m.diag[i] / energy;
    }
    return out;
}

namespace {

void validate_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) throw StatError("ranking requires at least 2 energy rows");
    const std::size_t n_attrs = rows.front().size();
    if (n_attrs < 2) throw ConfigError("ranking requires at least 2 attributes");
    for (const auto& row : rows) {
        if (row.size() != n_attrs) throw ShapeError("energy rows must have equal length");
    }
}

// Scores of the remaining columns under the vote rule; the round winner is the
// remaining attribute with the highest score (ties to the lower index).
std::vector<double> round_scores(const std::vector<std::vector<double>>& rows,
                                 const std::vector<std::size_t>& remaining,
                                 VoteRule rule) {
    std::vector<double> scores(remaining.size(), 0.0);
    if (rule == VoteRule::column_sum) {
        for (const auto& row : rows) {
            for (std::size_t k = 0; k < remaining.size(); ++k) scores[k] += row[remaining[k]];
        }
        return scores;
    }
    // mean_rank: ascending within-row ranks of the remaining entries, averaged.
    std::vector<std::size_t> order(remaining.size());
    for (const auto& row : rows) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return row[remaining[a]] < row[remaining[b]];
        });
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() &&
                   row[remaining[order[j + 1]]] == row[remaining[order[i]]]) {
                ++j;
            }
            const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) scores[order[k]] += shared;
            i = j + 1;
        }
    }
    return scores;
}

} // namespace

std::pair<std::vector<std::size_t>, std::vector<double>>
compose_ranking(const std::vector<std::vector<double>>& energy_rows,
                double alpha,
                VoteRule rule) {
    (void)alpha; // recorded in the report; a weak round never halts the ranking
    validate_rows(energy_rows);
    const std::size_t n_attrs = energy_rows.front().size();

    std::vector<std::size_t> remaining(n_attrs);
    std::iota(remaining.begin(), remaining.end(), std::size_t{0});
    std::vector<std::size_t> ordered;
    std::vector<double> friedman_ps;
    ordered.reserve(n_attrs);
    friedman_ps.reserve(n_attrs - 1);

    while (remaining.size() > 1) {
        std::vector<std::vector<double>> table(energy_rows.size(),
                                               std::vector<double>(remaining.size()));
        for (std::size_t r = 0; r < energy_rows.size(); ++r) {
            for (std::size_t k = 0; k < remaining.size(); ++k) {
                table[r][k] = energy_rows[r][remaining[k]];
            }
        }
        friedman_ps.push_back(friedman_test(table).p_value);

        const std::vector<double> scores = round_scores(energy_rows, remaining, rule);
        std::size_t winner = 0;
        for (std::size_t k = 1; k < scores.size(); ++k) {
            if (scores[k] > scores[winner]) winner = k;
        }
        ordered.push_back(remaining[winner]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(winner));
    }
    ordered.push_back(remaining.front());
    return {std::move(ordered), std::move(friedman_ps)};
}

RankingResult validate_ranking(const std::vector<std::vector<double>>& energy_rows,
                               const std::vector<std::size_t>& ordered,
                               const std::vector<std::string>& attribute_names,
                               double alpha) {
    validate_rows(energy_rows);
    const std::size_t n_attrs = energy_rows.front().size();
    if (ordered.size() != n_attrs || attribute_names.size() != n_attrs) {
        throw ShapeError("ranking order and names must cover every attribute");
    }

    RankingResult result;
    result.alpha = alpha;
    result.n_samples = energy_rows.size();
    result.ordered_indices = ordered;
    for (std::size_t idx : ordered) result.ordered_attributes.push_back(attribute_names.at(idx));

    std::vector<double> upper(energy_rows.size()), lower(energy_rows.size());
    for (std::size_t k = 0; k + 1 < n_attrs; ++k) {
        for (std::size_t r = 0; r < energy_rows.size(); ++r) {
            upper[r] = energy_rows[r][ordered[k]];
            lower[r] = energy_rows[r][ordered[k + 1]];
        }
        const TestResult test = wilcoxon_signed_rank(upper, lower, Alternative::greater);
        result.adjacent_p_values.push_back(test.p_value);
        result.adjacent_significant.push_back(test.p_value < alpha);
    }
    return result;
}

RankingResult rank_attributes(const std::vector<std::vector<double>>& energy_rows,
                              const std::vector<std::string>& attribute_names,
                              double alpha,
                              VoteRule rule) {
    auto [ordered, friedman_ps] = compose_ranking(energy_rows, alpha, rule);
    RankingResult result = validate_ranking(energy_rows, ordered, attribute_names, alpha);
    result.round_friedman_p = std::move(friedman_ps);
    return result;
}

} // namespace semrob
