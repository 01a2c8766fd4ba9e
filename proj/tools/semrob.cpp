// Command-line harness: population generation, attack campaigns, sweeps,
// attribute rankings and randomized-smoothing certification over pluggable
// classifier oracles. Every command is deterministic for fixed inputs; output
// files are written atomically.

#include "semrob/attacks.hpp"
#include "semrob/certify.hpp"
#include "semrob/error.hpp"
#include "semrob/geometry.hpp"
#include "semrob/io.hpp"
#include "semrob/oracle.hpp"
#include "semrob/ranking.hpp"
#include "semrob/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace semrob;

// ---------------------------------------------------------------------------
// Config-file support: a flat JSON object whose keys mirror the long flags.
// Flags given on the command line always win over config values.

json load_config_file(const std::string& path) {
    const json cfg = json::parse(read_file(path), nullptr, false);
    if (cfg.is_discarded() || !cfg.is_object()) {
        throw ConfigError("config file '" + path + "' must hold a JSON object");
    }
    return cfg;
}

class ConfigMerge {
public:
    ConfigMerge(const CLI::App& cmd, const std::string& config_path) : cmd_(cmd) {
        if (!config_path.empty()) cfg_ = load_config_file(config_path);
    }

    template <typename T>
    void operator()(const std::string& flag, const char* key, T& var) const {
        if (cmd_.count(flag) > 0 || !cfg_.contains(key)) return;
        try {
            var = cfg_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("config key '") + key + "' has the wrong type");
        }
    }

private:
    const CLI::App& cmd_;
    json cfg_;
};

// ---------------------------------------------------------------------------
// Shared experiment options.

struct OracleOptions {
    std::string population_path;
    std::string family = "prototype";
    std::size_t embed_dim = 5;
    double temperature = 12.0;
    std::uint64_t oracle_seed = 1;
};

struct BasisOptions {
    std::string basis_file;
    std::uint64_t basis_seed = 2;
    std::vector<std::string> attributes = {"pose", "age", "gender", "smile", "eyeglasses"};
    std::vector<double> epsilons = {0.5, 0.5, 0.2, 0.8, 0.5};
    double budget_scale = 1.0;
};

void add_oracle_options(CLI::App* cmd, OracleOptions& opts) {
    cmd->add_option("--population", opts.population_path, "population JSON file");
    cmd->add_option("--oracle", opts.family, "oracle family: prototype | linear");
    cmd->add_option("--embed-dim", opts.embed_dim, "prototype embedding dimension");
    cmd->add_option("--temperature", opts.temperature, "prototype softmax temperature");
    cmd->add_option("--oracle-seed", opts.oracle_seed, "oracle construction seed");
}

void add_basis_options(CLI::App* cmd, BasisOptions& opts) {
    cmd->add_option("--basis-file", opts.basis_file, "semantic direction matrix JSON");
    cmd->add_option("--basis-seed", opts.basis_seed, "seed for the random orthonormal basis");
    cmd->add_option("--attributes", opts.attributes, "attribute names")->delimiter(',');
    cmd->add_option("--epsilons", opts.epsilons, "per-attribute budgets")->delimiter(',');
    cmd->add_option("--budget-scale", opts.budget_scale, "global budget scale");
}

void merge_oracle_options(const ConfigMerge& merge, OracleOptions& opts) {
    merge("--population", "population", opts.population_path);
    merge("--oracle", "oracle", opts.family);
    merge("--embed-dim", "embed_dim", opts.embed_dim);
    merge("--temperature", "temperature", opts.temperature);
    merge("--oracle-seed", "oracle_seed", opts.oracle_seed);
}

void merge_basis_options(const ConfigMerge& merge, BasisOptions& opts) {
    merge("--basis-file", "basis_file", opts.basis_file);
    merge("--basis-seed", "basis_seed", opts.basis_seed);
    merge("--attributes", "attributes", opts.attributes);
    merge("--epsilons", "epsilons", opts.epsilons);
    merge("--budget-scale", "budget_scale", opts.budget_scale);
}

std::unique_ptr<ClassifierOracle> make_oracle(const OracleOptions& opts,
                                              const SyntheticPopulation& population) {
    if (opts.family == "prototype") {
        return std::make_unique<PrototypeOracle>(make_prototype_oracle(
            population, opts.embed_dim, opts.temperature, opts.oracle_seed));
    }
    if (opts.family == "linear") {
        // Random affine classifier; a stress oracle without the self-match
        // guarantee, so clean errors are possible and counted as non-robust.
        RandomStream rng(opts.oracle_seed);
        const std::size_t d = population.latent_dim;
        const std::size_t classes = population.size();
        std::vector<double> weights(classes * d);
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        for (double& w : weights) w = scale * rng.normal();
        return std::make_unique<LinearOracle>(classes, d, std::move(weights),
                                              std::vector<double>(classes, 0.0));
    }
    throw ConfigError("unknown oracle family '" + opts.family + "'");
}

SemanticBasis make_basis(const BasisOptions& opts, std::size_t latent_dim) {
    if (opts.attributes.empty()) throw ConfigError("at least one attribute is required");
    if (!opts.basis_file.empty()) {
        double renorm = 0.0;
        SemanticBasis basis = load_basis(opts.basis_file, &renorm);
        if (renorm > 1e-6) {
            std::cerr << "warning: basis rows renormalized by up to " << renorm << "\n";
        }
        if (basis.latent_dim() != latent_dim) {
            throw ConfigError("basis latent_dim does not match the population");
        }
        return basis;
    }
    return SemanticBasis::random_orthonormal(opts.attributes.size(), latent_dim,
                                             opts.attributes, opts.basis_seed);
}

BudgetMatrix make_budget(const BasisOptions& opts, const SemanticBasis& basis) {
    if (opts.epsilons.size() != basis.num_directions()) {
        throw ConfigError("epsilons count does not match the number of attributes");
    }
    BudgetMatrix m = build_budget_matrix({opts.epsilons});
    if (opts.budget_scale != 1.0) m = rescale_budget(m, opts.budget_scale);
    return m;
}

std::vector<CampaignTarget> prefix_targets(const SyntheticPopulation& population,
                                           std::size_t count) {
    const std::size_t n = std::min(count, population.size());
    if (n == 0) throw ConfigError("no identities selected");
    std::vector<CampaignTarget> targets;
    targets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        targets.push_back({static_cast<std::int64_t>(i), population.codes[i], i});
    }
    return targets;
}

// ---------------------------------------------------------------------------
// Attack options shared by `attack` and `sweep`.

struct AttackOptions {
    std::string method = "pgd";
    std::size_t iterations = 10;
    std::size_t restarts = 10;
    double step_size = 0.25;
    std::string loss = "cross-entropy";
    std::size_t target_classes = 10;
    double alpha_max = 0.1;
    double beta = 0.9;
    double eta = 1.05;
    bool no_final_search = false;
    std::uint64_t seed = 0;
};

void add_attack_options(CLI::App* cmd, AttackOptions& opts) {
    cmd->add_option("--method", opts.method, "attack method: pgd | fab");
    cmd->add_option("--iterations", opts.iterations, "attack iterations");
    cmd->add_option("--restarts", opts.restarts, "attack restarts");
    cmd->add_option("--step-size", opts.step_size, "PGD step length in M-norm units");
    cmd->add_option("--loss", opts.loss, "PGD loss: cross-entropy | margin");
    cmd->add_option("--target-classes", opts.target_classes, "FAB target classes");
    cmd->add_option("--alpha-max", opts.alpha_max, "FAB interpolation cap");
    cmd->add_option("--beta", opts.beta, "FAB backward step factor");
    cmd->add_option("--eta", opts.eta, "FAB extrapolation factor");
    cmd->add_flag("--no-final-search", opts.no_final_search, "disable FAB final search");
    cmd->add_option("--seed", opts.seed, "campaign seed");
}

void merge_attack_options(const ConfigMerge& merge, AttackOptions& opts) {
    merge("--method", "method", opts.method);
    merge("--iterations", "iterations", opts.iterations);
    merge("--restarts", "restarts", opts.restarts);
    merge("--step-size", "step_size", opts.step_size);
    merge("--loss", "loss", opts.loss);
    merge("--target-classes", "target_classes", opts.target_classes);
    merge("--alpha-max", "alpha_max", opts.alpha_max);
    merge("--beta", "beta", opts.beta);
    merge("--eta", "eta", opts.eta);
    merge("--no-final-search", "no_final_search", opts.no_final_search);
    merge("--seed", "seed", opts.seed);
}

AttackConfig make_attack_config(const AttackOptions& opts) {
    if (opts.method == "pgd") {
        PgdConfig cfg;
        cfg.iterations = opts.iterations;
        cfg.restarts = opts.restarts;
        cfg.step_size = opts.step_size;
        cfg.seed = opts.seed;
        if (opts.loss == "cross-entropy" || opts.loss == "cross_entropy") {
            cfg.loss_kind = LossKind::cross_entropy;
        } else if (opts.loss == "margin") {
            cfg.loss_kind = LossKind::margin;
        } else {
            throw ConfigError("unknown loss '" + opts.loss + "'");
        }
        return cfg;
    }
    if (opts.method == "fab") {
        FabConfig cfg;
        cfg.iterations = opts.iterations;
        cfg.restarts = opts.restarts;
        cfg.target_classes = opts.target_classes;
        cfg.alpha_max = opts.alpha_max;
        cfg.beta = opts.beta;
        cfg.eta = opts.eta;
        cfg.final_search = !opts.no_final_search;
        cfg.seed = opts.seed;
        return cfg;
    }
    throw ConfigError("unknown attack method '" + opts.method + "'");
}

std::size_t resolve_attribute(const std::string& spec, const SemanticBasis& basis) {
    const auto& names = basis.attribute_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == spec) return i;
    }
    try {
        std::size_t pos = 0;
        const unsigned long idx = std::stoul(spec, &pos);
        if (pos == spec.size() && idx < names.size()) return idx;
    } catch (const std::exception&) {
    }
    throw ConfigError("unknown attribute '" + spec + "'");
}

json attack_summary(const std::vector<AttackOutcome>& outcomes, const std::string& method) {
    std::vector<double> energies;
    std::size_t successes = 0;
    std::size_t clean_correct = 0;
    for (const AttackOutcome& out : outcomes) {
        if (out.clean_correct) ++clean_correct;
        if (out.success) {
            ++successes;
            energies.push_back(out.energy);
        }
    }
    json summary;
    summary["method"] = method;
    summary["n"] = outcomes.size();
    summary["robust_accuracy"] = robust_accuracy(outcomes);
    summary["clean_accuracy"] =
        static_cast<double>(clean_correct) / static_cast<double>(outcomes.size());
    summary["success_count"] = successes;
    if (energies.empty()) {
        summary["mean_energy"] = nullptr;
        summary["median_energy"] = nullptr;
    } else {
        double total = 0.0;
        for (double e : energies) total += e;
        summary["mean_energy"] = total / static_cast<double>(energies.size());
        std::sort(energies.begin(), energies.end());
        const std::size_t mid = energies.size() / 2;
        summary["median_energy"] = energies.size() % 2 == 1
                                       ? energies[mid]
                                       : 0.5 * (energies[mid - 1] + energies[mid]);
    }
    return summary;
}

std::string default_summary_path(const std::string& out) { return out + ".summary.json"; }

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
    std::size_t num_identities = 2000;
    std::size_t latent_dim = 64;
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
};

void run_gen(const CLI::App& cmd, GenArgs& args) {
    const ConfigMerge merge(cmd, args.config);
    merge("--num-identities", "num_identities", args.num_identities);
    merge("--latent-dim", "latent_dim", args.latent_dim);
    merge("--seed", "seed", args.seed);
    merge("--out", "out", args.out);
    if (args.out.empty()) throw ConfigError("--out is required");

    if (args.num_identities >= 50000) {
        std::cerr << "warning: generating " << args.num_identities
                  << " identities; expect a large file and long campaigns\n";
    }
    save_population(gen_population(args.num_identities, args.latent_dim, args.seed), args.out);
    std::cout << "wrote " << args.out << "\n";
}

// ---------------------------------------------------------------------------
// attack

struct AttackArgs {
    OracleOptions oracle;
    BasisOptions basis;
    AttackOptions attack;
    std::size_t num_attacked = 200;
    std::string only_attribute;
    unsigned workers = 1;
    std::string out;
    std::string summary_path;
    std::string config;
};

void run_attack(const CLI::App& cmd, AttackArgs& args) {
    const ConfigMerge merge(cmd, args.config);
    merge_oracle_options(merge, args.oracle);
    merge_basis_options(merge, args.basis);
    merge_attack_options(merge, args.attack);
    merge("--num-attacked", "num_attacked", args.num_attacked);
    merge("--only-attribute", "only_attribute", args.only_attribute);
    merge("--workers", "workers", args.workers);
    merge("--out", "out", args.out);
    merge("--summary", "summary", args.summary_path);
    if (args.out.empty()) throw ConfigError("--out is required");
    if (args.oracle.population_path.empty()) throw ConfigError("--population is required");

    const SyntheticPopulation population = load_population(args.oracle.population_path);
    const std::unique_ptr<ClassifierOracle> oracle = make_oracle(args.oracle, population);
    const SemanticBasis basis = make_basis(args.basis, population.latent_dim);
    const BudgetMatrix budget = make_budget(args.basis, basis);
    const std::vector<CampaignTarget> targets = prefix_targets(population, args.num_attacked);
    const AttackConfig cfg = make_attack_config(args.attack);

    std::vector<AttackOutcome> outcomes;
    if (args.only_attribute.empty()) {
        outcomes = run_campaign(*oracle, basis, budget, targets, cfg, args.workers);
    } else {
        const std::size_t index = resolve_attribute(args.only_attribute, basis);
        outcomes =
            single_attribute_ablation(*oracle, basis, budget, targets, cfg, index, args.workers);
    }

    write_file_atomic(args.out,
                      attack_results_to_csv(outcomes, method_name(cfg), basis.num_directions()));
    const json summary = attack_summary(outcomes, method_name(cfg));
    const std::string summary_path =
        args.summary_path.empty() ? default_summary_path(args.out) : args.summary_path;
    write_file_atomic(summary_path, summary.dump() + "\n");
    std::cout << "robust_accuracy " << format_real(summary.at("robust_accuracy").get<double>())
              << "\n";
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    OracleOptions oracle;
    BasisOptions basis;
    AttackOptions attack;
    std::string axis = "budget";
    std::vector<double> values;
    std::size_t num_attacked = 200;
    unsigned workers = 1;
    std::string out;
    std::string config;
};

SweepRow sweep_point(double axis_value, double accuracy, std::size_t attacked,
                     std::size_t population) {
    SweepRow row;
    row.axis_value = axis_value;
    row.robust_accuracy = accuracy;
    row.n_attacked = attacked;
    row.n_population = population;
    return row;
}

// Budget rows use best-over-budgets accounting: an identity counts as fooled
// at scale b when any attack run at a scale <= b fooled it. Every such
// perturbation is feasible at budget b, and the reported column is
// non-increasing by construction.
std::vector<SweepRow> run_budget_sweep(const ClassifierOracle& oracle, const SemanticBasis& basis,
                                       const BudgetMatrix& base,
                                       const std::vector<CampaignTarget>& targets,
                                       const AttackOptions& attack_opts,
                                       std::vector<double> values, unsigned workers,
                                       std::size_t population_size) {
    std::sort(values.begin(), values.end());
    const AttackConfig cfg = make_attack_config(attack_opts);
    std::vector<SweepRow> rows;

    if (std::holds_alternative<FabConfig>(cfg)) {
        // One unconstrained minimum-norm campaign; thresholding its energies
        // yields the whole accuracy-vs-budget curve.
        const std::vector<AttackOutcome> outcomes =
            run_campaign(oracle, basis, base, targets, cfg, workers);
        for (double value : values) {
            if (!(value > 0.0)) throw ConfigError("budget values must be positive");
            std::size_t robust = 0;
            for (const AttackOutcome& out : outcomes) {
                if (out.clean_correct && (!out.success || out.energy > value)) ++robust;
            }
            rows.push_back(sweep_point(value,
                                       static_cast<double>(robust) /
                                           static_cast<double>(outcomes.size()),
                                       targets.size(), population_size));
        }
        return rows;
    }

    std::vector<bool> fooled(targets.size(), false);
    std::vector<bool> clean_correct(targets.size(), true);
    for (double value : values) {
        if (!(value > 0.0)) throw ConfigError("budget values must be positive");
        const BudgetMatrix scaled = rescale_budget(base, value);
        const std::vector<AttackOutcome> outcomes =
            run_campaign(oracle, basis, scaled, targets, cfg, workers);
        std::size_t robust = 0;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            if (outcomes[i].success) fooled[i] = true;
            clean_correct[i] = outcomes[i].clean_correct;
            if (clean_correct[i] && !fooled[i]) ++robust;
        }
        rows.push_back(sweep_point(value,
                                   static_cast<double>(robust) /
                                       static_cast<double>(outcomes.size()),
                                   targets.size(), population_size));
    }
    return rows;
}

void run_sweep(const CLI::App& cmd, SweepArgs& args) {
    const ConfigMerge merge(cmd, args.config);
    merge_oracle_options(merge, args.oracle);
    merge_basis_options(merge, args.basis);
    merge_attack_options(merge, args.attack);
    merge("--axis", "axis", args.axis);
    merge("--values", "values", args.values);
    merge("--num-attacked", "num_attacked", args.num_attacked);
    merge("--workers", "workers", args.workers);
    merge("--out", "out", args.out);
    if (args.out.empty()) throw ConfigError("--out is required");
    if (args.values.empty()) throw ConfigError("--values is required");
    if (args.oracle.population_path.empty()) throw ConfigError("--population is required");

    const SyntheticPopulation population = load_population(args.oracle.population_path);
    const SemanticBasis basis = make_basis(args.basis, population.latent_dim);
    const BudgetMatrix budget = make_budget(args.basis, basis);

    std::vector<SweepRow> rows;
    if (args.axis == "budget") {
        const std::unique_ptr<ClassifierOracle> oracle = make_oracle(args.oracle, population);
        const std::vector<CampaignTarget> targets = prefix_targets(population, args.num_attacked);
        rows = run_budget_sweep(*oracle, basis, budget, targets, args.attack, args.values,
                                args.workers, population.size());
    } else if (args.axis == "num-attacked") {
        const std::unique_ptr<ClassifierOracle> oracle = make_oracle(args.oracle, population);
        const AttackConfig cfg = make_attack_config(args.attack);
        for (double value : args.values) {
            const auto count = static_cast<std::size_t>(value);
            if (count < 1 || count > population.size()) {
                throw ConfigError("num-attacked value out of range");
            }
            const std::vector<CampaignTarget> targets = prefix_targets(population, count);
            const auto outcomes = run_campaign(*oracle, basis, budget, targets, cfg, args.workers);
            rows.push_back(
                sweep_point(value, robust_accuracy(outcomes), count, population.size()));
        }
    } else if (args.axis == "dataset-size") {
        const AttackConfig cfg = make_attack_config(args.attack);
        for (double value : args.values) {
            const auto size = static_cast<std::size_t>(value);
            if (size < 2 || size > population.size()) {
                throw ConfigError("dataset-size value out of range (population file too small?)");
            }
            SyntheticPopulation prefix;
            prefix.latent_dim = population.latent_dim;
            prefix.seed = population.seed;
            prefix.codes.assign(population.codes.begin(),
                                population.codes.begin() + static_cast<std::ptrdiff_t>(size));
            const std::unique_ptr<ClassifierOracle> oracle = make_oracle(args.oracle, prefix);
            const std::vector<CampaignTarget> targets =
                prefix_targets(prefix, std::min(args.num_attacked, size));
            const auto outcomes = run_campaign(*oracle, basis, budget, targets, cfg, args.workers);
            rows.push_back(
                sweep_point(value, robust_accuracy(outcomes), targets.size(), size));
        }
    } else {
        throw ConfigError("unknown sweep axis '" + args.axis + "'");
    }

    write_file_atomic(args.out, sweep_to_csv(rows));
    std::cout << "wrote " << args.out << "\n";
}

// ---------------------------------------------------------------------------
// rank

struct RankArgs {
    std::string in;
    BasisOptions basis; // epsilons / attributes / budget_scale are used
    double alpha = 0.01;
    std::string vote = "sum";
    std::string out;
    std::string config;
};

void run_rank(const CLI::App& cmd, RankArgs& args) {
    const ConfigMerge merge(cmd, args.config);
    merge("--in", "in", args.in);
    merge_basis_options(merge, args.basis);
    merge("--alpha", "alpha", args.alpha);
    merge("--vote", "vote", args.vote);
    merge("--out", "out", args.out);
    if (args.in.empty()) throw ConfigError("--in is required");
    if (args.out.empty()) throw ConfigError("--out is required");

    const std::size_t n_attrs = args.basis.attributes.size();
    if (n_attrs < 2) throw ConfigError("ranking requires at least 2 attributes");
    if (args.basis.epsilons.size() != n_attrs) {
        throw ConfigError("epsilons count does not match the number of attributes");
    }
    BudgetMatrix budget = build_budget_matrix({args.basis.epsilons});
    if (args.basis.budget_scale != 1.0) budget = rescale_budget(budget, args.basis.budget_scale);

    VoteRule rule = VoteRule::column_sum;
    if (args.vote == "mean-rank") {
        rule = VoteRule::mean_rank;
    } else if (args.vote != "sum") {
        throw ConfigError("unknown vote rule '" + args.vote + "'");
    }

    const std::vector<AttackRecord> records = attack_records_from_csv(read_file(args.in));
    std::vector<std::vector<double>> energy_rows;
    for (const AttackRecord& record : records) {
        if (!record.success || record.energy <= 0.0) continue;
        if (record.delta.size() != n_attrs) {
            throw ConfigError("results CSV delta width does not match the attribute count");
        }
        energy_rows.push_back(normalized_energies(record.delta, budget));
    }
    if (energy_rows.size() < 2) {
        throw StatError("need at least 2 successful nonzero-energy rows to rank");
    }

    const RankingResult result =
        rank_attributes(energy_rows, args.basis.attributes, args.alpha, rule);
    write_file_atomic(args.out, ranking_to_json(result) + "\n");
    std::cout << "wrote " << args.out << "\n";
}

// ---------------------------------------------------------------------------
// certify

struct CertifyArgs {
    OracleOptions oracle;
    BasisOptions basis;
    std::string mode = "isotropic";
    double sigma = 0.25;
    std::size_t n0 = 100;
    std::size_t n = 10000;
    double alpha = 1e-3;
    std::size_t num_certify = 500;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::string out;
    std::string curve_path;
    double curve_step = 0.01;
    std::vector<std::string> envelope_inputs;
    std::string summary_path;
    std::string config;
};

std::vector<CertResult> records_to_results(const std::vector<CertRecord>& records) {
    std::vector<CertResult> results;
    results.reserve(records.size());
    for (const CertRecord& r : records) {
        CertResult res;
        res.identity_id = r.identity_id;
        res.predicted_class = r.predicted_class;
        res.p_a_lower = r.p_a_lower;
        res.mahalanobis_radius = r.mahalanobis_radius;
        res.l2_or_proxy_radius = r.radius;
        res.abstain = r.abstain;
        res.correct = r.correct;
        results.push_back(res);
    }
    return results;
}

std::vector<double> radius_grid(const std::vector<CertResult>& results, double step, double max) {
    if (!(step > 0.0)) throw ConfigError("curve step must be positive");
    if (max < 0.0) {
        max = 0.0;
        for (const CertResult& r : results) max = std::max(max, r.l2_or_proxy_radius);
    }
    std::vector<double> grid;
    for (double x = 0.0; x <= max + 0.5 * step; x += step) grid.push_back(x);
    return grid;
}

void write_cert_summary(const std::vector<CertResult>& results, const std::string& path) {
    std::size_t abstained = 0;
    std::size_t certified_correct = 0;
    for (const CertResult& r : results) {
        if (r.abstain) ++abstained;
        if (r.correct && !r.abstain) ++certified_correct;
    }
    json summary;
    summary["n"] = results.size();
    summary["acr"] = acr(results);
    summary["abstain_rate"] =
        static_cast<double>(abstained) / static_cast<double>(results.size());
    summary["certified_correct_rate"] =
        static_cast<double>(certified_correct) / static_cast<double>(results.size());
    write_file_atomic(path, summary.dump() + "\n");
    std::cout << "acr " << format_real(summary.at("acr").get<double>()) << "\n";
}

void run_certify(const CLI::App& cmd, CertifyArgs& args) {
    const ConfigMerge merge(cmd, args.config);
    merge_oracle_options(merge, args.oracle);
    merge_basis_options(merge, args.basis);
    merge("--mode", "mode", args.mode);
    merge("--sigma", "sigma", args.sigma);
    merge("--n0", "n0", args.n0);
    merge("--n", "n", args.n);
    merge("--alpha", "alpha", args.alpha);
    merge("--num-certify", "num_certify", args.num_certify);
    merge("--seed", "seed", args.seed);
    merge("--workers", "workers", args.workers);
    merge("--out", "out", args.out);
    merge("--curve", "curve", args.curve_path);
    merge("--curve-step", "curve_step", args.curve_step);
    merge("--summary", "summary", args.summary_path);
    if (args.out.empty()) throw ConfigError("--out is required");

    // Envelope mode: pure CSV merge, no sampling.
    if (!args.envelope_inputs.empty()) {
        std::vector<std::vector<CertRecord>> inputs;
        for (const std::string& path : args.envelope_inputs) {
            inputs.push_back(cert_records_from_csv(read_file(path)));
        }
        const std::vector<CertRecord> merged = envelope_merge(inputs);
        write_file_atomic(args.out, cert_records_to_csv(merged));
        const std::vector<CertResult> results = records_to_results(merged);
        const std::string summary_path =
            args.summary_path.empty() ? default_summary_path(args.out) : args.summary_path;
        write_cert_summary(results, summary_path);
        return;
    }

    SmoothingConfig cfg;
    if (args.mode == "isotropic") {
        cfg.mode = SmoothingMode::isotropic;
    } else if (args.mode == "anisotropic") {
        cfg.mode = SmoothingMode::anisotropic;
    } else {
        throw ConfigError("unknown smoothing mode '" + args.mode + "'");
    }
    cfg.sigma = args.sigma;
    cfg.n0 = args.n0;
    cfg.n = args.n;
    cfg.alpha = args.alpha;
    cfg.seed = args.seed;
    if (args.oracle.population_path.empty()) throw ConfigError("--population is required");

    const SyntheticPopulation population = load_population(args.oracle.population_path);
    const std::unique_ptr<ClassifierOracle> oracle = make_oracle(args.oracle, population);
    const SemanticBasis basis = make_basis(args.basis, population.latent_dim);
    const BudgetMatrix budget = make_budget(args.basis, basis);
    const std::vector<CampaignTarget> targets = prefix_targets(population, args.num_certify);

    const std::vector<CertResult> results =
        certify_campaign(*oracle, basis, budget, targets, cfg, args.workers);
    write_file_atomic(args.out, cert_results_to_csv(results, cfg.mode, cfg.sigma));

    if (!args.curve_path.empty()) {
        const auto curve =
            certified_accuracy_curve(results, radius_grid(results, args.curve_step, -1.0));
        write_file_atomic(args.curve_path, curve_to_csv(curve));
    }
    const std::string summary_path =
        args.summary_path.empty() ? default_summary_path(args.out) : args.summary_path;
    write_cert_summary(results, summary_path);
}

// ---------------------------------------------------------------------------
// curve

struct CurveArgs {
    std::string in;
    std::string out;
    double step = 0.01;
    double max = -1.0;
    std::string config;
};

void run_curve(const CLI::App& cmd, CurveArgs& args) {
    const ConfigMerge merge(cmd, args.config);
    merge("--in", "in", args.in);
    merge("--out", "out", args.out);
    merge("--step", "step", args.step);
    merge("--max", "max", args.max);
    if (args.in.empty()) throw ConfigError("--in is required");
    if (args.out.empty()) throw ConfigError("--out is required");

    const std::vector<CertResult> results =
        records_to_results(cert_records_from_csv(read_file(args.in)));
    const auto curve = certified_accuracy_curve(results, radius_grid(results, args.step, args.max));
    write_file_atomic(args.out, curve_to_csv(curve));
    std::cout << "wrote " << args.out << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic robustness assessment harness"};
    app.require_subcommand(1);

    GenArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic identity population");
    gen->add_option("--num-identities", gen_args.num_identities, "population size");
    gen->add_option("--latent-dim", gen_args.latent_dim, "latent dimension");
    gen->add_option("--seed", gen_args.seed, "generation seed");
    gen->add_option("--out", gen_args.out, "output population JSON");
    gen->add_option("--config", gen_args.config, "config JSON file");
    gen->callback([&] { run_gen(*gen, gen_args); });

    AttackArgs attack_args;
    CLI::App* attack = app.add_subcommand("attack", "run an attack campaign");
    add_oracle_options(attack, attack_args.oracle);
    add_basis_options(attack, attack_args.basis);
    add_attack_options(attack, attack_args.attack);
    attack->add_option("--num-attacked", attack_args.num_attacked, "identities to attack");
    attack->add_option("--only-attribute", attack_args.only_attribute,
                       "restrict the search to one attribute (name or index)");
    attack->add_option("--workers", attack_args.workers, "campaign worker threads");
    attack->add_option("--out", attack_args.out, "output results CSV");
    attack->add_option("--summary", attack_args.summary_path, "summary JSON path");
    attack->add_option("--config", attack_args.config, "config JSON file");
    attack->callback([&] { run_attack(*attack, attack_args); });

    SweepArgs sweep_args;
    CLI::App* sweep = app.add_subcommand("sweep", "sweep an experiment axis");
    add_oracle_options(sweep, sweep_args.oracle);
    add_basis_options(sweep, sweep_args.basis);
    add_attack_options(sweep, sweep_args.attack);
    sweep->add_option("--axis", sweep_args.axis, "dataset-size | num-attacked | budget");
    sweep->add_option("--values", sweep_args.values, "sweep values")->delimiter(',');
    sweep->add_option("--num-attacked", sweep_args.num_attacked, "identities to attack");
    sweep->add_option("--workers", sweep_args.workers, "campaign worker threads");
    sweep->add_option("--out", sweep_args.out, "output curve CSV");
    sweep->add_option("--config", sweep_args.config, "config JSON file");
    sweep->callback([&] { run_sweep(*sweep, sweep_args); });

    RankArgs rank_args;
    CLI::App* rank = app.add_subcommand("rank", "rank attributes by spent energy");
    rank->add_option("--in", rank_args.in, "attack results CSV");
    add_basis_options(rank, rank_args.basis);
    rank->add_option("--alpha", rank_args.alpha, "significance level");
    rank->add_option("--vote", rank_args.vote, "vote rule: sum | mean-rank");
    rank->add_option("--out", rank_args.out, "output ranking JSON");
    rank->add_option("--config", rank_args.config, "config JSON file");
    rank->callback([&] { run_rank(*rank, rank_args); });

    CertifyArgs certify_args;
    CLI::App* certify = app.add_subcommand("certify", "randomized-smoothing certification");
    add_oracle_options(certify, certify_args.oracle);
    add_basis_options(certify, certify_args.basis);
    certify->add_option("--mode", certify_args.mode, "isotropic | anisotropic");
    certify->add_option("--sigma", certify_args.sigma, "smoothing scale");
    certify->add_option("--n0", certify_args.n0, "selection sample count");
    certify->add_option("--n", certify_args.n, "estimation sample count");
    certify->add_option("--alpha", certify_args.alpha, "confidence level of the bound");
    certify->add_option("--num-certify", certify_args.num_certify, "identities to certify");
    certify->add_option("--seed", certify_args.seed, "certification seed");
    certify->add_option("--workers", certify_args.workers, "worker threads");
    certify->add_option("--out", certify_args.out, "output certification CSV");
    certify->add_option("--curve", certify_args.curve_path, "also write a curve CSV here");
    certify->add_option("--curve-step", certify_args.curve_step, "curve radius step");
    certify->add_option("--envelope", certify_args.envelope_inputs,
                        "merge these certification CSVs instead of sampling")
        ->expected(-1);
    certify->add_option("--summary", certify_args.summary_path, "summary JSON path");
    certify->add_option("--config", certify_args.config, "config JSON file");
    certify->callback([&] { run_certify(*certify, certify_args); });

    CurveArgs curve_args;
    CLI::App* curve = app.add_subcommand("curve", "certified-accuracy curve from a cert CSV");
    curve->add_option("--in", curve_args.in, "certification CSV");
    curve->add_option("--out", curve_args.out, "output curve CSV");
    curve->add_option("--step", curve_args.step, "radius grid step");
    curve->add_option("--max", curve_args.max, "largest radius (default: max in file)");
    curve->add_option("--config", curve_args.config, "config JSON file");
    curve->callback([&] { run_curve(*curve, curve_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
