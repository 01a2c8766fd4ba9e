#include "semrob/geometry.hpp"

#include "semrob/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace semrob {

namespace {

void require_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw ConfigError(std::string(what) + " contains a non-finite entry");
    }
}

void require_same_size(const Perturbation& delta, const BudgetMatrix& m) {
    if (delta.size() != m.size()) {
        throw ShapeError("perturbation length does not match budget matrix size");
    }
}

} // namespace

SemanticBasis SemanticBasis::create(std::vector<double> directions,
                                    std::vector<std::string> attribute_names,
                                    std::size_t latent_dim) {
    const std::size_t n = attribute_names.size();
    if (n == 0) throw ConfigError("semantic basis requires at least one direction");
    if (latent_dim < n) throw ConfigError("semantic basis requires latent_dim >= num_directions");
    if (directions.size() != n * latent_dim) {
        throw ShapeError("direction matrix size does not match N x d");
    }
    require_finite(directions, "semantic basis");
    std::set<std::string> unique(attribute_names.begin(), attribute_names.end());
    if (unique.size() != n) throw ConfigError("attribute names must be distinct");

    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < latent_dim; ++j) {
            const double x = directions[i * latent_dim + j];
            sq += x * x;
        }
        if (std::fabs(std::sqrt(sq) - 1.0) > 1e-9) {
            throw ConfigError("semantic direction '" + attribute_names[i] + "' is not unit norm");
        }
    }

    SemanticBasis basis;
    basis.directions_ = std::move(directions);
    basis.attribute_names_ = std::move(attribute_names);
    basis.latent_dim_ = latent_dim;
    return basis;
}

SemanticBasis SemanticBasis::random_orthonormal(std::size_t num_directions,
                                                std::size_t latent_dim,
                                                std::vector<std::string> attribute_names,
                                                std::uint64_t seed) {
    if (attribute_names.size() != num_directions) {
        throw ConfigError("attribute name count must equal num_directions");
    }
    if (latent_dim < num_directions) {
        throw ConfigError("random orthonormal basis requires latent_dim >= num_directions");
    }
    RandomStream rng(seed);
    std::vector<double> rows(num_directions * latent_dim);
    for (std::size_t i = 0; i < num_directions; ++i) {
        double* row = rows.data() + i * latent_dim;
        for (int attempt = 0;; ++attempt) {
            for (std::size_t j = 0; j < latent_dim; ++j) row[j] = rng.normal();
            // Two Gram-Schmidt passes against earlier rows for orthogonality.
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < i; ++k) {
                    const double* prev = rows.data() + k * latent_dim;
                    double proj = 0.0;
                    for (std::size_t j = 0; j < latent_dim; ++j) proj += row[j] * prev[j];
                    for (std::size_t j = 0; j < latent_dim; ++j) row[j] -= proj * prev[j];
                }
            }
            double sq = 0.0;
            for (std::size_t j = 0; j < latent_dim; ++j) sq += row[j] * row[j];
            if (sq > 1e-12) {
                const double inv = 1.0 / std::sqrt(sq);
                for (std::size_t j = 0; j < latent_dim; ++j) row[j] *= inv;
                break;
            }
            if (attempt > 64) throw NumericalError("could not draw an independent basis row");
        }
    }
    return create(std::move(rows), std::move(attribute_names), latent_dim);
}

SemanticBasis SemanticBasis::restricted_to(std::size_t attribute_index) const {
    if (attribute_index >= num_directions()) {
        throw ConfigError("attribute index out of range");
    }
    const auto r = row(attribute_index);
    return create(std::vector<double>(r.begin(), r.end()),
                  {attribute_names_[attribute_index]}, latent_dim_);
}

BudgetMatrix BudgetMatrix::restricted_to(std::size_t attribute_index) const {
    if (attribute_index >= diag.size()) throw ConfigError("attribute index out of range");
    BudgetMatrix out;
    out.diag = {diag[attribute_index]};
    out.global_scale = global_scale;
    return out;
}

BudgetMatrix build_budget_matrix(const BudgetSpec& spec) {
    if (spec.epsilons.empty()) throw ConfigError("budget requires at least one epsilon");
    BudgetMatrix m;
    m.diag.reserve(spec.epsilons.size());
    for (double eps : spec.epsilons) {
        if (!(eps > 0.0) || !std::isfinite(eps)) {
            throw ConfigError("attribute budgets must be positive and finite");
        }
        m.diag.push_back(1.0 / (eps * eps));
    }
    m.global_scale = 1.0;
    return m;
}

BudgetMatrix rescale_budget(const BudgetMatrix& m, double eps_global) {
    if (!(eps_global > 0.0) || !std::isfinite(eps_global)) {
        throw ConfigError("global budget scale must be positive and finite");
    }
    BudgetMatrix out;
    out.diag.reserve(m.diag.size());
    const double factor = 1.0 / (eps_global * eps_global);
    for (double d : m.diag) out.diag.push_back(d * factor);
    out.global_scale = m.global_scale * eps_global;
    return out;
}

double m_norm(const Perturbation& delta, const BudgetMatrix& m) {
    require_same_size(delta, m);
    double sq = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) sq += delta[i] * delta[i] * m.diag[i];
    return std::sqrt(sq);
}

double m_dual_norm(const std::vector<double>& a, const BudgetMatrix& m) {
    require_same_size(a, m);
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sq += a[i] * a[i] / m.diag[i];
    return std::sqrt(sq);
}

LatentCode to_latent(const Perturbation& delta, const SemanticBasis& basis) {
    if (delta.size() != basis.num_directions()) {
        throw ShapeError("perturbation length does not match basis direction count");
    }
    LatentCode eta(basis.latent_dim(), 0.0);
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double c = delta[i];
        if (c == 0.0) continue;
        const auto r = basis.row(i);
        for (std::size_t j = 0; j < eta.size(); ++j) eta[j] += c * r[j];
    }
    return eta;
}

double h_eval(double lambda, const Perturbation& delta, const BudgetMatrix& m) {
    require_same_size(delta, m);
    double sum = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double denom = 1.0 + lambda * m.diag[i];
        sum += delta[i] * delta[i] * m.diag[i] / (denom * denom);
    }
    return sum - 1.0;
}

Perturbation project_to_ellipsoid(const Perturbation& delta, const BudgetMatrix& m) {
    require_same_size(delta, m);
    require_finite(delta, "perturbation");

    double energy_sq = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) energy_sq += delta[i] * delta[i] * m.diag[i];
    if (energy_sq <= 1.0) return delta;

    // Bracket the unique positive root of h: h(0) = energy_sq - 1 > 0 and h is
    // strictly decreasing, so doubling the upper end always brackets.
    double lo = 0.0;
    double hi = 1.0;
    int doublings = 0;
    while (h_eval(hi, delta, m) >= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > 200) throw NumericalError("ellipsoid projection failed to bracket");
    }

    double lambda = 0.5 * (lo + hi);
    for (int iter = 0; iter < 300; ++iter) {
        lambda = 0.5 * (lo + hi);
        const double h = h_eval(lambda, delta, m);
        if (std::fabs(h) <= 1e-12 || (hi - lo) <= 1e-12 * (1.0 + hi)) break;
        if (h > 0.0) {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }

    // Newton polish to pin the surface constraint near machine precision.
    for (int iter = 0; iter < 2; ++iter) {
        double h = -1.0;
        double dh = 0.0;
        for (std::size_t i = 0; i < delta.size(); ++i) {
            const double di = m.diag[i];
            const double denom = 1.0 + lambda * di;
            const double term = delta[i] * delta[i] * di / (denom * denom);
            h += term;
            dh -= 2.0 * term * di / denom;
        }
        if (dh == 0.0) break;
        const double next = lambda - h / dh;
        if (!(next > lo && next < hi)) break;
        lambda = next;
    }

    Perturbation projected(delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
        projected[i] = delta[i] / (1.0 + lambda * m.diag[i]);
    }
    return projected;
}

Perturbation sample_uniform_ellipsoid(const BudgetMatrix& m, RandomStream& rng) {
    const std::size_t n = m.size();
    Perturbation sample(n);

    // Direction uniform on the unit sphere.
    double norm_sq = 0.0;
    do {
        norm_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sample[i] = rng.normal();
            norm_sq += sample[i] * sample[i];
        }
    } while (norm_sq < 1e-280);

    // Radius U^(1/N) makes the ball sample uniform in volume.
    const double radius = std::pow(rng.uniform01(), 1.0 / static_cast<double>(n));
    const double scale = radius / std::sqrt(norm_sq);
    for (std::size_t i = 0; i < n; ++i) {
        sample[i] *= scale / std::sqrt(m.diag[i]);
    }

    // Guard against the last-ulp rounding pushing the sample outside.
    const double energy = m_norm(sample, m);
    if (energy > 1.0) {
        for (double& x : sample) x /= energy;
    }
    return sample;
}

} // namespace semrob
