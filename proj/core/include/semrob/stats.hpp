#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace semrob {

// Outcome of a hypothesis test.
struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n_effective = 0;
    std::string method_note;
};

enum class Alternative { greater };

// Standard normal CDF, absolute error below 1e-12.
double std_normal_cdf(double x);

// Inverse of std_normal_cdf on (0,1). Throws ConfigError outside the open interval.
double std_normal_quantile(double p);

// Survival function of the chi-square distribution with `dof` degrees of freedom.
double chi_square_survival(double x, double dof);

// Regularized incomplete beta function I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);

// One-sided exact (Clopper-Pearson) lower confidence bound for a binomial
// proportion at confidence level 1 - alpha. Returns 0 when successes == 0.
double clopper_pearson_lower(std::size_t successes, std::size_t trials, double alpha);

// Paired one-sided Wilcoxon signed-rank test on d = x - y, alternative "greater".
// Zero differences are dropped; ties share average ranks. Exact distribution for
// n_effective <= 25, normal approximation with tie and continuity correction above.
TestResult wilcoxon_signed_rank(const std::vector<double>& x,
                                const std::vector<double>& y,
                                Alternative alternative = Alternative::greater);

// Friedman test over an n x k table (rows = subjects, columns = treatments),
// tie-corrected chi-square statistic with k - 1 degrees of freedom.
TestResult friedman_test(const std::vector<std::vector<double>>& data);

} // namespace semrob
