#include "semrob/certify.hpp"

#include "semrob/error.hpp"
#include "semrob/rng.hpp"
#include "semrob/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace semrob;

namespace {

class FixedOracle final : public ClassifierOracle {
public:
    FixedOracle(std::size_t classes, std::size_t dim, std::vector<double> logits)
        : classes_(classes), dim_(dim), fixed_(std::move(logits)) {}
    std::size_t num_classes() const override { return classes_; }
    std::size_t latent_dim() const override { return dim_; }
    std::vector<double> logits(const LatentCode&) const override { return fixed_; }
    std::vector<double> backprop_logits(const LatentCode&,
                                        const std::vector<double>&) const override {
        return std::vector<double>(dim_, 0.0);
    }

private:
    std::size_t classes_, dim_;
    std::vector<double> fixed_;
};

SemanticBasis identity_basis(std::size_t n) {
    std::vector<double> rows(n * n, 0.0);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
        rows[i * n + i] = 1.0;
        names.push_back("attr" + std::to_string(i));
    }
    return SemanticBasis::create(std::move(rows), std::move(names), n);
}

// Binary oracle in coefficient space: logit_1 - logit_0 = a.delta + v.
LinearOracle boundary_oracle(const std::vector<double>& a, double v) {
    const std::size_t n = a.size();
    std::vector<double> weights(2 * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) weights[n + j] = a[j];
    return LinearOracle(2, n, std::move(weights), {0.0, v});
}

double sigma_eff(const std::vector<double>& a, const BudgetMatrix& m,
                 const SmoothingConfig& cfg) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double var = cfg.mode == SmoothingMode::isotropic
                               ? cfg.sigma * cfg.sigma
                               : cfg.sigma * cfg.sigma / m.diag[i];
        acc += a[i] * a[i] * var;
    }
    return std::sqrt(acc);
}

} // namespace

TEST_SUITE_BEGIN("certify");

TEST_CASE("sample counts always sum to the sample count") {
    const SemanticBasis basis = identity_basis(3);
    const BudgetMatrix m{{4.0, 25.0, 1.0}, 1.0};
    const FixedOracle oracle(4, 3, {0.0, 3.0, 1.0, 2.0});
    SmoothingConfig cfg;
    cfg.sigma = 0.5;
    RandomStream rng(3);
    const auto counts =
        smooth_sample_counts(oracle, basis, m, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, cfg, 777, rng);
    CHECK(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) == 777);
    // A constant oracle puts every draw on its winning class.
    CHECK(counts[1] == 777);
}

TEST_CASE("constant oracle certificate matches the closed form") {
    const SemanticBasis basis = identity_basis(2);
    const BudgetMatrix m{{1.0, 1.0}, 1.0};
    const FixedOracle oracle(3, 2, {0.0, 4.0, 1.0});
    SmoothingConfig cfg;
    cfg.mode = SmoothingMode::isotropic;
    cfg.sigma = 0.25;
    cfg.n = 100; // all-success Clopper-Pearson bound is alpha^(1/n)
    cfg.alpha = 1e-3;
    RandomStream rng(5);
    const CertResult result = certify(oracle, basis, m, {0.0, 0.0}, {0.0, 0.0}, 1, cfg, rng);
    CHECK(result.predicted_class == 1);
    CHECK(result.correct);
    CHECK_FALSE(result.abstain);
    CHECK(result.p_a_lower == doctest::Approx(0.93325430079699104).epsilon(1e-12));
    CHECK(result.mahalanobis_radius == doctest::Approx(1.5004750241206365).epsilon(1e-9));
    CHECK(result.l2_or_proxy_radius == doctest::Approx(0.37511875603015912).epsilon(1e-9));
}

TEST_CASE("balanced boundary forces abstention") {
    // Boundary through the certified point: the smoothed top-class probability
    // is one half, so its lower bound cannot exceed the abstention threshold.
    const SemanticBasis basis = identity_basis(2);
    const BudgetMatrix m{{4.0, 25.0}, 1.0};
    const LinearOracle oracle = boundary_oracle({1.0, 0.5}, 0.0);
    SmoothingConfig cfg;
    cfg.sigma = 0.5;
    RandomStream rng(7);
    const CertResult result = certify(oracle, basis, m, {0.0, 0.0}, {0.0, 0.0}, 0, cfg, rng);
    CHECK(result.abstain);
    CHECK(result.mahalanobis_radius == 0.0);
    CHECK(result.l2_or_proxy_radius == 0.0);
}

TEST_CASE("tied logits resolve to the lowest class before certification") {
    const SemanticBasis basis = identity_basis(2);
    const BudgetMatrix m{{1.0, 1.0}, 1.0};
    const FixedOracle oracle(3, 2, {2.0, 2.0, 0.0});
    SmoothingConfig cfg;
    RandomStream rng(11);
    const CertResult result = certify(oracle, basis, m, {0.0, 0.0}, {0.0, 0.0}, 0, cfg, rng);
    CHECK(result.predicted_class == 0);
    CHECK(result.correct);
}

TEST_CASE("isotropic and anisotropic paths coincide for the identity budget") {
    const SemanticBasis basis = identity_basis(3);
    const BudgetMatrix eye{{1.0, 1.0, 1.0}, 1.0};
    const LinearOracle oracle = boundary_oracle({0.8, -0.4, 0.2}, -1.2);
    SmoothingConfig iso;
    iso.mode = SmoothingMode::isotropic;
    iso.sigma = 0.4;
    iso.seed = 21;
    SmoothingConfig aniso = iso;
    aniso.mode = SmoothingMode::anisotropic;

    RandomStream rng_a(33), rng_b(33);
    const CertResult a = certify(oracle, basis, eye, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0, iso, rng_a);
    const CertResult b =
        certify(oracle, basis, eye, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0, aniso, rng_b);
    CHECK(a.predicted_class == b.predicted_class);
    CHECK(a.p_a_lower == b.p_a_lower);
    CHECK(std::fabs(a.mahalanobis_radius - b.mahalanobis_radius) <= 1e-9);
    CHECK(std::fabs(a.l2_or_proxy_radius - b.l2_or_proxy_radius) <= 1e-9);
}

TEST_CASE("smoothed top-class frequency matches the Gaussian closed form") {
    RandomStream data_rng(41);
    const SemanticBasis basis = identity_basis(3);
    BudgetMatrix m;
    for (int i = 0; i < 3; ++i) {
        const double eps = 0.3 + 0.6 * data_rng.uniform01();
        m.diag.push_back(1.0 / (eps * eps));
    }
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<double> a(3);
        for (double& x : a) x = data_rng.normal();
        a[0] += 1.0;
        const double margin = 0.2 + data_rng.uniform01();
        const LinearOracle oracle = boundary_oracle(a, -margin);

        for (SmoothingMode mode : {SmoothingMode::isotropic, SmoothingMode::anisotropic}) {
            SmoothingConfig cfg;
            cfg.mode = mode;
            cfg.sigma = 0.5;
            RandomStream rng(100 + static_cast<std::uint64_t>(trial));
            const std::size_t n = 10000;
            const auto counts = smooth_sample_counts(oracle, basis, m, {0.0, 0.0, 0.0},
                                                     {0.0, 0.0, 0.0}, cfg, n, rng);
            const double expected = std_normal_cdf(margin / sigma_eff(a, m, cfg));
            const double freq = static_cast<double>(counts[0]) / static_cast<double>(n);
            const double band = 3.0 * std::sqrt(expected * (1.0 - expected) / n);
            CHECK(std::fabs(freq - expected) <= band);
        }
    }
}

TEST_CASE("certified radius never exceeds the analytic boundary distance") {
    RandomStream data_rng(43);
    std::size_t failures = 0;
    const int trials = 30;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t n = 2 + data_rng.uniform_below(4);
        const SemanticBasis basis = identity_basis(n);
        BudgetMatrix m;
        for (std::size_t i = 0; i < n; ++i) {
            const double eps = 0.25 + 0.75 * data_rng.uniform01();
            m.diag.push_back(1.0 / (eps * eps));
        }
        std::vector<double> a(n);
        for (double& x : a) x = data_rng.normal();
        a[0] += 0.7;
        const double margin = 0.1 + 1.5 * data_rng.uniform01();
        const LinearOracle oracle = boundary_oracle(a, -margin);

        SmoothingConfig cfg;
        cfg.mode = (trial % 2 == 0) ? SmoothingMode::isotropic : SmoothingMode::anisotropic;
        cfg.sigma = 0.3 + 0.5 * data_rng.uniform01();
        RandomStream rng(900 + static_cast<std::uint64_t>(trial));
        const CertResult result =
            certify(oracle, basis, m, LatentCode(n, 0.0), Perturbation(n, 0.0), 0, cfg, rng);
        if (result.abstain) continue;
        // True Mahalanobis distance from the point to the boundary, in the
        // norm induced by the smoothing covariance.
        const double analytic = margin / sigma_eff(a, m, cfg);
        if (result.mahalanobis_radius > analytic) ++failures;
    }
    // Clopper-Pearson fails with probability alpha = 1e-3 per instance.
    CHECK(failures <= 1);
}

TEST_CASE("certified radius grows with the estimation sample count") {
    const SemanticBasis basis = identity_basis(2);
    const BudgetMatrix m{{4.0, 25.0}, 1.0};
    const std::vector<double> a{1.0, 0.7};
    const double margin = 1.1;
    const LinearOracle oracle = boundary_oracle(a, -margin);

    SmoothingConfig cfg;
    cfg.sigma = 0.5;
    const double ceiling = margin / sigma_eff(a, m, cfg);

    double previous = 0.0;
    for (std::size_t n : {1000UL, 10000UL, 100000UL}) {
        cfg.n = n;
        RandomStream rng(55);
        const CertResult result =
            certify(oracle, basis, m, {0.0, 0.0}, {0.0, 0.0}, 0, cfg, rng);
        REQUIRE_FALSE(result.abstain);
        CHECK(result.mahalanobis_radius <= ceiling);
        CHECK(result.mahalanobis_radius >= previous - 0.05);
        previous = result.mahalanobis_radius;
    }
    CHECK(previous >= 0.8 * ceiling);
}

TEST_CASE("campaigns are deterministic across worker counts") {
    const SemanticBasis basis = identity_basis(2);
    const BudgetMatrix m{{4.0, 25.0}, 1.0};
    const LinearOracle oracle = boundary_oracle({1.0, 0.4}, -0.9);
    SmoothingConfig cfg;
    cfg.sigma = 0.4;
    cfg.n = 2000;
    cfg.seed = 77;

    std::vector<CampaignTarget> targets;
    for (int i = 0; i < 10; ++i) targets.push_back({i, {0.0, 0.0}, 0});

    const auto serial = certify_campaign(oracle, basis, m, targets, cfg, 1);
    const auto threaded = certify_campaign(oracle, basis, m, targets, cfg, 3);
    REQUIRE(serial.size() == threaded.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].identity_id == threaded[i].identity_id);
        CHECK(serial[i].p_a_lower == threaded[i].p_a_lower);
        CHECK(serial[i].mahalanobis_radius == threaded[i].mahalanobis_radius);
        CHECK(serial[i].l2_or_proxy_radius == threaded[i].l2_or_proxy_radius);
    }
}

TEST_CASE("curve and acr counting conventions") {
    std::vector<CertResult> results(4);
    results[0].correct = true;
    results[0].abstain = false;
    results[0].l2_or_proxy_radius = 0.4;
    results[1].correct = false; // incorrect: contributes zero
    results[1].abstain = false;
    results[1].l2_or_proxy_radius = 0.2;
    results[2].correct = true; // abstained: contributes zero
    results[2].abstain = true;
    results[2].l2_or_proxy_radius = 0.0;
    results[3].correct = true;
    results[3].abstain = false;
    results[3].l2_or_proxy_radius = 0.1;

    CHECK(acr(results) == doctest::Approx(0.125).epsilon(1e-15));

    const auto curve = certified_accuracy_curve(results, {0.0, 0.05, 0.25, 1.0});
    CHECK(curve[0].second == doctest::Approx(0.5));  // both correct certificates
    CHECK(curve[1].second == doctest::Approx(0.5));
    CHECK(curve[2].second == doctest::Approx(0.25)); // only the 0.4 certificate
    CHECK(curve[3].second == doctest::Approx(0.0));  // beyond the largest radius
    for (std::size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].second <= curve[i - 1].second);
    }

    std::vector<CertResult> abstained(3);
    CHECK(acr(abstained) == 0.0);
    CHECK_THROWS_AS(acr({}), StatError);
    CHECK_THROWS_AS(certified_accuracy_curve({}, {0.0}), StatError);
}

TEST_CASE("smoothing configuration is validated") {
    const SemanticBasis basis = identity_basis(2);
    const BudgetMatrix m{{1.0, 1.0}, 1.0};
    const FixedOracle oracle(2, 2, {1.0, 0.0});
    RandomStream rng(1);
    SmoothingConfig bad;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(certify(oracle, basis, m, {0.0, 0.0}, {0.0, 0.0}, 0, bad, rng), ConfigError);
    bad = SmoothingConfig{};
    bad.alpha = 1.0;
    CHECK_THROWS_AS(certify(oracle, basis, m, {0.0, 0.0}, {0.0, 0.0}, 0, bad, rng), ConfigError);
    bad = SmoothingConfig{};
    bad.n0 = 0;
    CHECK_THROWS_AS(certify(oracle, basis, m, {0.0, 0.0}, {0.0, 0.0}, 0, bad, rng), ConfigError);
}

TEST_SUITE_END();
