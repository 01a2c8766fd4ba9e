#pragma once

#include "semrob/geometry.hpp"
#include "semrob/stats.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace semrob {

// Attribute ranking with its statistical validation: the ordering, the
// Friedman p-value recorded before each selection round, and the adjacent
// Wilcoxon comparisons.
struct RankingResult {
    std::vector<std::string> ordered_attributes;
    std::vector<std::size_t> ordered_indices;
    std::vector<double> adjacent_p_values;  // N-1 entries
    std::vector<bool> adjacent_significant; // p < alpha
    std::vector<double> round_friedman_p;   // N-1 entries
    std::size_t n_samples = 0;
    double alpha = 0.01;
};

// How each perturbation casts its votes in a ranking round.
enum class VoteRule { column_sum, mean_rank };

// Normalized per-attribute energies: delta_i^2 * diag[i] / ||delta||_{M,2}.
// Their sum equals the perturbation's energy. Throws ConfigError for a zero
// perturbation; callers filter zero-energy outcomes first.
std::vector<double> normalized_energies(const Perturbation& delta, const BudgetMatrix& m);

// Iteratively selects winners over the remaining attribute columns, recording
// a Friedman p-value per round. A non-significant round does not stop the
// ranking; alpha only travels into the report.
std::pair<std::vector<std::size_t>, std::vector<double>>
compose_ranking(const std::vector<std::vector<double>>& energy_rows,
                double alpha,
                VoteRule rule = VoteRule::column_sum);

// Wilcoxon signed-rank validation of each adjacent pair in the candidate
// ranking (one-sided, greater).
RankingResult validate_ranking(const std::vector<std::vector<double>>& energy_rows,
                               const std::vector<std::size_t>& ordered,
                               const std::vector<std::string>& attribute_names,
                               double alpha);

// compose + validate in one call.
RankingResult rank_attributes(const std::vector<std::vector<double>>& energy_rows,
                              const std::vector<std::string>& attribute_names,
                              double alpha,
                              VoteRule rule = VoteRule::column_sum);

} // namespace semrob
