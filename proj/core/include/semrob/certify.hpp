#pragma once

#include "semrob/geometry.hpp"
#include "semrob/oracle.hpp"

#include <cstdint>
#include <vector>

namespace semrob {

enum class SmoothingMode { isotropic, anisotropic };

// Monte-Carlo randomized-smoothing configuration. The smoothing covariance is
// sigma^2 I in isotropic mode and sigma^2 M^-1 in anisotropic mode, so the two
// coincide when M is the identity.
struct SmoothingConfig {
    SmoothingMode mode = SmoothingMode::isotropic;
    double sigma = 0.25;
    std::size_t n0 = 100;    // samples used to select the top class
    std::size_t n = 10000;   // samples used to bound its probability
    double alpha = 1e-3;     // significance of the lower confidence bound
    std::uint64_t seed = 0;
};

// Certificate for one identity. Abstention (lower bound <= 1/2) zeroes both
// radii; `correct` compares the smoothed prediction against the true label.
struct CertResult {
    std::int64_t identity_id = -1;
    std::size_t predicted_class = 0;
    double p_a_lower = 0.0;
    double mahalanobis_radius = 0.0;
    double l2_or_proxy_radius = 0.0;
    bool abstain = true;
    bool correct = false;
};

// Class counts of the base classifier's argmax over `count` Gaussian draws
// around w + V^T p; counts always sum to `count`.
std::vector<std::uint64_t> smooth_sample_counts(const ClassifierOracle& oracle,
                                                const SemanticBasis& basis,
                                                const BudgetMatrix& m,
                                                const LatentCode& w,
                                                const Perturbation& p,
                                                const SmoothingConfig& cfg,
                                                std::size_t count,
                                                RandomStream& rng);

// Two-stage certification: select the top class from n0 samples, lower-bound
// its probability with a fresh batch of n samples (Clopper-Pearson at level
// 1 - alpha), then convert to radii. The Mahalanobis radius is in units of the
// smoothing covariance; the second radius is the l2 radius (isotropic) or the
// equal-volume ball proxy (anisotropic).
CertResult certify(const ClassifierOracle& oracle,
                   const SemanticBasis& basis,
                   const BudgetMatrix& m,
                   const LatentCode& w,
                   const Perturbation& p,
                   std::size_t true_label,
                   const SmoothingConfig& cfg,
                   RandomStream& rng);

// Certification campaign over identities with per-identity derived streams;
// deterministic for a given seed regardless of worker count. The canonical
// perturbation p is zero.
std::vector<CertResult> certify_campaign(const ClassifierOracle& oracle,
                                         const SemanticBasis& basis,
                                         const BudgetMatrix& m,
                                         const std::vector<CampaignTarget>& targets,
                                         const SmoothingConfig& cfg,
                                         unsigned workers = 1);

// Certified-accuracy curve: fraction of results certified correctly with
// radius at least x, for each grid value x. Non-increasing in x.
std::vector<std::pair<double, double>>
certified_accuracy_curve(const std::vector<CertResult>& results,
                         const std::vector<double>& radii_grid);

// Average certified radius: abstained or incorrect results contribute zero.
double acr(const std::vector<CertResult>& results);

} // namespace semrob
