#pragma once

#include "semrob/rng.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace semrob {

// Perturbation coefficients in the semantic-direction basis (length N) and
// latent-space points (length d). Plain vectors keep the numeric code simple;
// shapes are validated at operation boundaries.
using Perturbation = std::vector<double>;
using LatentCode = std::vector<double>;

// N unit-norm direction rows spanning the attribute subspace of a d-dimensional
// latent space, with one name per direction.
class SemanticBasis {
public:
    // Validates row norms (1 within 1e-9), N >= 1, d >= N and distinct names.
    static SemanticBasis create(std::vector<double> directions,
                                std::vector<std::string> attribute_names,
                                std::size_t latent_dim);

    // Orthonormal rows from a seeded Gaussian matrix (modified Gram-Schmidt).
    static SemanticBasis random_orthonormal(std::size_t num_directions,
                                            std::size_t latent_dim,
                                            std::vector<std::string> attribute_names,
                                            std::uint64_t seed);

    std::size_t num_directions() const { return attribute_names_.size(); }
    std::size_t latent_dim() const { return latent_dim_; }
    std::span<const double> row(std::size_t i) const {
        return {directions_.data() + i * latent_dim_, latent_dim_};
    }
    const std::vector<double>& directions() const { return directions_; }
    const std::vector<std::string>& attribute_names() const { return attribute_names_; }

    // Single-direction basis used by attribute-restricted attacks.
    SemanticBasis restricted_to(std::size_t attribute_index) const;

private:
    SemanticBasis() = default;
    std::vector<double> directions_; // N x d, row-major
    std::vector<std::string> attribute_names_;
    std::size_t latent_dim_ = 0;
};

// Per-attribute maximum displacements along the basis directions.
struct BudgetSpec {
    std::vector<double> epsilons;
};

// Diagonal positive-definite matrix defining the perturbation ellipsoid
// ||delta||_{M,2} <= 1; entries are eps_i^-2 scaled by the global budget.
struct BudgetMatrix {
    std::vector<double> diag;
    double global_scale = 1.0;

    std::size_t size() const { return diag.size(); }

    // Restriction to a single attribute, preserving the global scale.
    BudgetMatrix restricted_to(std::size_t attribute_index) const;
};

// diag[i] = epsilons[i]^-2 with global_scale 1. Throws ConfigError on
// non-positive or non-finite budgets.
BudgetMatrix build_budget_matrix(const BudgetSpec& spec);

// Multiplies every diagonal entry by eps_global^-2, so the unit constraint in
// the rescaled norm equals ||delta||_{M,2} <= eps_global in the original one.
BudgetMatrix rescale_budget(const BudgetMatrix& m, double eps_global);

// sqrt(sum_i delta_i^2 * diag[i]).
double m_norm(const Perturbation& delta, const BudgetMatrix& m);

// Dual norm sqrt(sum_i a_i^2 / diag[i]); distance from a point to a hyperplane
// in the M-norm is |value| / dual_norm(normal).
double m_dual_norm(const std::vector<double>& a, const BudgetMatrix& m);

// eta = V^T delta, the latent-space displacement of a coefficient vector.
LatentCode to_latent(const Perturbation& delta, const SemanticBasis& basis);

// Root function of the ellipsoid projection: for diagonal M,
//   h(lambda) = sum_i delta_i^2 diag[i] / (1 + lambda diag[i])^2 - 1,
// strictly decreasing in lambda for delta != 0.
double h_eval(double lambda, const Perturbation& delta, const BudgetMatrix& m);

// Euclidean projection onto {||delta||_{M,2} <= 1}. Interior points are
// returned unchanged; exterior points map to (I + lambda* M)^-1 delta with
// lambda* the positive root of h, found by bracketing bisection.
Perturbation project_to_ellipsoid(const Perturbation& delta, const BudgetMatrix& m);

// Uniform sample inside the ellipsoid: uniform ball sample (sphere direction
// times U^(1/N) radius) deformed by the ellipsoid axes.
Perturbation sample_uniform_ellipsoid(const BudgetMatrix& m, RandomStream& rng);

} // namespace semrob
