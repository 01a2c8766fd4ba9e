#include "semrob/certify.hpp"

#include "semrob/error.hpp"
#include "semrob/stats.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace semrob {

namespace {

void validate_config(const SmoothingConfig& cfg) {
    if (!(cfg.sigma > 0.0)) throw ConfigError("smoothing sigma must be positive");
    if (cfg.n0 < 1 || cfg.n < 1) throw ConfigError("smoothing sample counts must be >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("smoothing alpha must be in (0,1)");
}

// Per-coordinate noise standard deviations for the configured covariance.
std::vector<double> noise_stds(const BudgetMatrix& m, const SmoothingConfig& cfg) {
    std::vector<double> stds(m.size(), cfg.sigma);
    if (cfg.mode == SmoothingMode::anisotropic) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            stds[i] = cfg.sigma / std::sqrt(m.diag[i]);
        }
    }
    return stds;
}

} // namespace

std::vector<std::uint64_t> smooth_sample_counts(const ClassifierOracle& oracle,
                                                const SemanticBasis& basis,
                                                const BudgetMatrix& m,
                                                const LatentCode& w,
                                                const Perturbation& p,
                                                const SmoothingConfig& cfg,
                                                std::size_t count,
                                                RandomStream& rng) {
    validate_config(cfg);
    if (basis.num_directions() != m.size() || p.size() != m.size()) {
        throw ShapeError("basis, budget matrix and perturbation sizes do not match");
    }
    if (w.size() != basis.latent_dim() || oracle.latent_dim() != basis.latent_dim()) {
        throw ShapeError("latent dimensions do not match");
    }

    const std::vector<double> stds = noise_stds(m, cfg);
    const std::size_t n_dirs = basis.num_directions();
    std::vector<std::uint64_t> counts(oracle.num_classes(), 0);
    Perturbation noisy(n_dirs);
    for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t i = 0; i < n_dirs; ++i) {
            noisy[i] = p[i] + stds[i] * rng.normal();
        }
        LatentCode point = to_latent(noisy, basis);
        for (std::size_t j = 0; j < point.size(); ++j) point[j] += w[j];
        ++counts[oracle.predict(point)];
    }
    return counts;
}

CertResult certify(const ClassifierOracle& oracle,
                   const SemanticBasis& basis,
                   const BudgetMatrix& m,
                   const LatentCode& w,
                   const Perturbation& p,
                   std::size_t true_label,
                   const SmoothingConfig& cfg,
                   RandomStream& rng) {
    validate_config(cfg);

    const std::vector<std::uint64_t> selection =
        smooth_sample_counts(oracle, basis, m, w, p, cfg, cfg.n0, rng);
    std::size_t top = 0;
    for (std::size_t c = 1; c < selection.size(); ++c) {
        if (selection[c] > selection[top]) top = c;
    }

    const std::vector<std::uint64_t> estimation =
        smooth_sample_counts(oracle, basis, m, w, p, cfg, cfg.n, rng);
    const std::size_t hits = estimation[top];

    CertResult result;
    result.predicted_class = top;
    result.correct = (top == true_label);
    result.p_a_lower = clopper_pearson_lower(hits, cfg.n, cfg.alpha);

    if (result.p_a_lower <= 0.5) {
        result.abstain = true;
        result.mahalanobis_radius = 0.0;
        result.l2_or_proxy_radius = 0.0;
        return result;
    }

    // With p_B = 1 - p_A the certified Mahalanobis radius
    // (1/2)(Phi^-1(p_A) - Phi^-1(p_B)) collapses to Phi^-1(p_A).
    result.abstain = false;
    result.mahalanobis_radius = std_normal_quantile(result.p_a_lower);

    if (cfg.mode == SmoothingMode::isotropic) {
        result.l2_or_proxy_radius = cfg.sigma * result.mahalanobis_radius;
    } else {
        // Equal-volume ball radius of the certified ellipsoid:
        // R * det(Sigma)^(1/2N) with Sigma = sigma^2 M^-1.
        double log_det_m = 0.0;
        for (double d : m.diag) log_det_m += std::log(d);
        const double geo =
            cfg.sigma * std::exp(-log_det_m / (2.0 * static_cast<double>(m.size())));
        result.l2_or_proxy_radius = result.mahalanobis_radius * geo;
    }
    return result;
}

std::vector<CertResult> certify_campaign(const ClassifierOracle& oracle,
                                         const SemanticBasis& basis,
                                         const BudgetMatrix& m,
                                         const std::vector<CampaignTarget>& targets,
                                         const SmoothingConfig& cfg,
                                         unsigned workers) {
    if (targets.empty()) throw ConfigError("certification campaign requires targets");
    validate_config(cfg);
    std::vector<CertResult> results(targets.size());
    const Perturbation canonical(basis.num_directions(), 0.0);

    auto process = [&](std::size_t idx) {
        RandomStream rng = RandomStream::derive(
            cfg.seed, static_cast<std::uint64_t>(targets[idx].identity_id));
        results[idx] = certify(oracle, basis, m, targets[idx].latent, canonical,
                               targets[idx].label, cfg, rng);
        results[idx].identity_id = targets[idx].identity_id;
    };

    if (workers <= 1 || targets.size() < 2) {
        for (std::size_t i = 0; i < targets.size(); ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        const unsigned count = std::min<unsigned>(workers, static_cast<unsigned>(targets.size()));
        std::vector<std::thread> pool;
        pool.reserve(count);
        for (unsigned t = 0; t < count; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t idx = next.fetch_add(1);
                    if (idx >= targets.size()) return;
                    process(idx);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return results;
}

std::vector<std::pair<double, double>>
certified_accuracy_curve(const std::vector<CertResult>& results,
                         const std::vector<double>& radii_grid) {
    if (results.empty()) throw StatError("certified accuracy curve of an empty result set");
    std::vector<std::pair<double, double>> curve;
    curve.reserve(radii_grid.size());
    for (double x : radii_grid) {
        std::size_t hits = 0;
        for (const CertResult& r : results) {
            if (r.correct && !r.abstain && r.l2_or_proxy_radius >= x) ++hits;
        }
        curve.emplace_back(x, static_cast<double>(hits) / static_cast<double>(results.size()));
    }
    return curve;
}

double acr(const std::vector<CertResult>& results) {
    if (results.empty()) throw StatError("acr of an empty result set");
    double total = 0.0;
    for (const CertResult& r : results) {
        if (r.correct && !r.abstain) total += r.l2_or_proxy_radius;
    }
    return total / static_cast<double>(results.size());
}

} // namespace semrob
