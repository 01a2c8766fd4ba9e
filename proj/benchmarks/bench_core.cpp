// Microbenchmarks for the hot paths: ellipsoid geometry, the two attacks on
// an analytic oracle, Monte-Carlo smoothing and the statistical tests.

#include "semrob/attacks.hpp"
#include "semrob/certify.hpp"
#include "semrob/geometry.hpp"
#include "semrob/oracle.hpp"
#include "semrob/rng.hpp"
#include "semrob/stats.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace semrob;

namespace {

BudgetMatrix default_budget() { return build_budget_matrix({{0.5, 0.5, 0.2, 0.8, 0.5}}); }

SemanticBasis identity_basis(std::size_t n) {
    std::vector<double> rows(n * n, 0.0);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
        rows[i * n + i] = 1.0;
        names.push_back("attr" + std::to_string(i));
    }
    return SemanticBasis::create(std::move(rows), std::move(names), n);
}

LinearOracle binary_oracle(std::size_t n) {
    std::vector<double> weights(2 * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) weights[n + j] = 1.0 + 0.1 * static_cast<double>(j);
    return LinearOracle(2, n, std::move(weights), {0.0, -0.4});
}

void BM_ProjectExterior(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    BudgetMatrix m;
    for (std::size_t i = 0; i < n; ++i) m.diag.push_back(1.0 + static_cast<double>(i % 7));
    const Perturbation delta(n, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(project_to_ellipsoid(delta, m));
    }
}
BENCHMARK(BM_ProjectExterior)->Arg(5)->Arg(64);

void BM_ProjectInterior(benchmark::State& state) {
    const BudgetMatrix m = default_budget();
    const Perturbation delta(5, 0.01);
    for (auto _ : state) {
        benchmark::DoNotOptimize(project_to_ellipsoid(delta, m));
    }
}
BENCHMARK(BM_ProjectInterior);

void BM_MNorm(benchmark::State& state) {
    const BudgetMatrix m = default_budget();
    const Perturbation delta{0.1, -0.2, 0.05, 0.3, -0.1};
    for (auto _ : state) {
        benchmark::DoNotOptimize(m_norm(delta, m));
    }
}
BENCHMARK(BM_MNorm);

void BM_SampleEllipsoid(benchmark::State& state) {
    const BudgetMatrix m = default_budget();
    RandomStream rng(1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_uniform_ellipsoid(m, rng));
    }
}
BENCHMARK(BM_SampleEllipsoid);

void BM_PgdAttackLinear(benchmark::State& state) {
    const std::size_t n = 5;
    const LinearOracle oracle = binary_oracle(n);
    const SemanticBasis basis = identity_basis(n);
    const BudgetMatrix m = default_budget();
    PgdConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(pgd_attack(oracle, basis, m, LatentCode(n, 0.0), 0, cfg));
    }
}
BENCHMARK(BM_PgdAttackLinear);

void BM_FabAttackLinear(benchmark::State& state) {
    const std::size_t n = 5;
    const LinearOracle oracle = binary_oracle(n);
    const SemanticBasis basis = identity_basis(n);
    const BudgetMatrix m = default_budget();
    FabConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fab_attack(oracle, basis, m, LatentCode(n, 0.0), 0, cfg));
    }
}
BENCHMARK(BM_FabAttackLinear);

void BM_SmoothCounts(benchmark::State& state) {
    const std::size_t n = 5;
    const SyntheticPopulation pop = gen_population(100, 32, 3);
    const PrototypeOracle oracle = make_prototype_oracle(pop, 5, 12.0, 1);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("attr" + std::to_string(i));
    const SemanticBasis basis = SemanticBasis::random_orthonormal(n, 32, names, 2);
    const BudgetMatrix m = default_budget();
    const SmoothingConfig cfg;
    RandomStream rng(5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(smooth_sample_counts(oracle, basis, m, pop.codes[0],
                                                      Perturbation(n, 0.0), cfg, 100, rng));
    }
}
BENCHMARK(BM_SmoothCounts);

void BM_WilcoxonNormalApprox(benchmark::State& state) {
    RandomStream rng(7);
    std::vector<double> x(500), y(500);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.normal() + 0.2;
        y[i] = rng.normal();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(wilcoxon_signed_rank(x, y));
    }
}
BENCHMARK(BM_WilcoxonNormalApprox);

void BM_WilcoxonExact25(benchmark::State& state) {
    RandomStream rng(8);
    std::vector<double> x(25), y(25);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.normal() + 0.2;
        y[i] = rng.normal();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(wilcoxon_signed_rank(x, y));
    }
}
BENCHMARK(BM_WilcoxonExact25);

void BM_ClopperPearson(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(clopper_pearson_lower(9311, 10000, 1e-3));
    }
}
BENCHMARK(BM_ClopperPearson);

} // namespace

BENCHMARK_MAIN();
