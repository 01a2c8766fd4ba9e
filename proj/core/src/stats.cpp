#include "semrob/stats.hpp"

#include "semrob/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace semrob {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Average ranks (1-based) of `values` in ascending order, ties averaged.
std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

// Sum of (t^3 - t) over tie groups of `values`.
double tie_term(const std::vector<double>& values) {
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        total += t * t * t - t;
        i = j + 1;
    }
    return total;
}

// Continued fraction for the regularized incomplete beta (Lentz's method).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 400;
    constexpr double kEps = 3.0e-16;
    constexpr double kTiny = 1.0e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw NumericalError("incomplete beta continued fraction did not converge");
}

// Regularized lower incomplete gamma P(a, x) by series expansion (x < a + 1).
double gamma_p_series(double a, double x) {
    constexpr int kMaxIter = 600;
    constexpr double kEps = 1.0e-16;
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw NumericalError("incomplete gamma series did not converge");
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction (x >= a + 1).
double gamma_q_continued_fraction(double a, double x) {
    constexpr int kMaxIter = 600;
    constexpr double kEps = 1.0e-16;
    constexpr double kTiny = 1.0e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) {
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw NumericalError("incomplete gamma continued fraction did not converge");
}

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw ConfigError("gamma_q requires x >= 0 and a > 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_continued_fraction(a, x);
}

// Exact one-sided p-value P(W+ >= observed) for signed ranks `ranks` (ties allowed,
// so ranks are multiples of 1/2). Computes the full null distribution of the
// positive-rank sum by counting over doubled-integer rank sums; identical to
// enumerating all 2^n sign patterns.
double wilcoxon_exact_p(const std::vector<double>& ranks, double w_plus) {
    long long total2 = 0;
    std::vector<long long> doubled(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        doubled[i] = std::llround(2.0 * ranks[i]);
        total2 += doubled[i];
    }
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    for (long long t : doubled) {
        for (long long s = total2; s >= t; --s) {
            count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - t)];
        }
    }
    const long long threshold = std::llround(2.0 * w_plus);
    double tail = 0.0;
    for (long long s = threshold; s <= total2; ++s) tail += count[static_cast<std::size_t>(s)];
    return tail / std::ldexp(1.0, static_cast<int>(ranks.size()));
}

} // namespace

double std_normal_cdf(double x) {
    if (!std::isfinite(x)) throw ConfigError("std_normal_cdf requires a finite argument");
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("std_normal_quantile requires p in (0,1)");

    // Acklam's rational approximation, then one Halley refinement step.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    if (std::fabs(x) < 37.0) {
        const double e = std_normal_cdf(x) - p;
        const double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double chi_square_survival(double x, double dof) {
    if (dof <= 0.0) throw ConfigError("chi_square_survival requires dof > 0");
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * dof, 0.5 * x);
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw ConfigError("incomplete beta requires a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = a * std::log(x) + b * std::log1p(-x) -
                            (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double clopper_pearson_lower(std::size_t successes, std::size_t trials, double alpha) {
    if (trials == 0 || successes > trials) {
        throw ConfigError("clopper_pearson_lower requires 0 <= successes <= trials, trials >= 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("clopper_pearson_lower requires alpha in (0,1)");
    }
    if (successes == 0) return 0.0;

    // Lower bound is the alpha-quantile of Beta(k, n - k + 1); invert the
    // regularized incomplete beta by bisection.
    const double a = static_cast<double>(successes);
    const double b = static_cast<double>(trials - successes) + 1.0;
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 200 && (hi - lo) > 1e-16; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (regularized_incomplete_beta(a, b, mid) < alpha) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

TestResult wilcoxon_signed_rank(const std::vector<double>& x,
                                const std::vector<double>& y,
                                Alternative alternative) {
    (void)alternative; // single-sided "greater" is the only supported alternative
    if (x.size() != y.size() || x.empty()) {
        throw ShapeError("wilcoxon_signed_rank requires equal nonempty samples");
    }

    std::vector<double> diffs;
    diffs.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (!std::isfinite(d)) throw ConfigError("wilcoxon_signed_rank requires finite data");
        if (d != 0.0) diffs.push_back(d);
    }

    TestResult result;
    result.n_effective = diffs.size();
    if (diffs.empty()) {
        result.statistic = 0.0;
        result.p_value = 1.0;
        result.method_note = "degenerate: all-zero differences";
        return result;
    }

    const std::size_t n = diffs.size();
    std::vector<double> abs_diffs(n);
    for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::fabs(diffs[i]);
    const std::vector<double> ranks = average_ranks(abs_diffs);

    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0.0) w_plus += ranks[i];
    }
    result.statistic = w_plus;

    constexpr std::size_t kExactLimit = 25;
    if (n <= kExactLimit) {
        result.p_value = wilcoxon_exact_p(ranks, w_plus);
        result.method_note = "exact";
    } else {
        const double nd = static_cast<double>(n);
        const double mean = nd * (nd + 1.0) / 4.0;
        double variance = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term(abs_diffs) / 48.0;
        variance = std::max(variance, 1e-300);
        const double z = (w_plus - mean - 0.5) / std::sqrt(variance);
        result.p_value = std::clamp(1.0 - std_normal_cdf(z), 0.0, 1.0);
        result.method_note = "normal-approx, ties-corrected";
    }
    return result;
}

TestResult friedman_test(const std::vector<std::vector<double>>& data) {
    const std::size_t n = data.size();
    if (n < 2) throw StatError("friedman_test requires at least 2 rows");
    const std::size_t k = data.front().size();
    if (k < 2) throw StatError("friedman_test requires at least 2 columns");
    for (const auto& row : data) {
        if (row.size() != k) throw ShapeError("friedman_test requires a rectangular table");
    }

    std::vector<double> rank_sums(k, 0.0);
    double ties = 0.0;
    for (const auto& row : data) {
        const std::vector<double> ranks = average_ranks(row);
        for (std::size_t j = 0; j < k; ++j) rank_sums[j] += ranks[j];
        ties += tie_term(row);
    }

    const double nd = static_cast<double>(n);
    const double kd = static_cast<double>(k);
    double deviation_sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double dev = rank_sums[j] - nd * (kd + 1.0) / 2.0;
        deviation_sq += dev * dev;
    }
    const double raw = 12.0 * deviation_sq / (nd * kd * (kd + 1.0));
    const double correction = 1.0 - ties / (nd * kd * (kd * kd - 1.0));

    TestResult result;
    result.n_effective = n;
    if (correction <= 0.0) {
        // Every row fully tied: no rank variation at all.
        result.statistic = 0.0;
        result.p_value = 1.0;
        result.method_note = "degenerate: no rank variation";
        return result;
    }
    result.statistic = raw / correction;
    result.p_value = chi_square_survival(result.statistic, kd - 1.0);
    result.method_note = "chi-square approx, ties-corrected";
    return result;
}

} // namespace semrob
