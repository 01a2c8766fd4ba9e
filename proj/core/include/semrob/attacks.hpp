#pragma once

#include "semrob/geometry.hpp"
#include "semrob/oracle.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace semrob {

// Constrained-perturbation attack: maximize the loss inside the budget
// ellipsoid by projected gradient ascent with M-normalized steps.
struct PgdConfig {
    std::size_t iterations = 10;
    std::size_t restarts = 10;
    double step_size = 0.25; // M-norm length of each ascent step
    LossKind loss_kind = LossKind::cross_entropy;
    std::uint64_t seed = 0;
};

// Minimum-perturbation attack adapted to the M-norm geometry: targeted
// boundary walk over the top runner-up classes.
struct FabConfig {
    std::size_t iterations = 10;
    std::size_t restarts = 10;
    std::size_t target_classes = 10;
    double alpha_max = 0.1;
    double beta = 0.9;
    double eta = 1.05;
    bool final_search = true;
    std::size_t final_search_steps = 3;
    std::uint64_t seed = 0;
};

using AttackConfig = std::variant<PgdConfig, FabConfig>;

// Per-identity attack record. On failure (no fooling perturbation found)
// delta is zero, energy 0, predicted_class the clean prediction and
// restart_index -1. `note` carries diagnostics (degenerate targets,
// per-identity errors caught by campaigns) and is not serialized.
struct AttackOutcome {
    std::int64_t identity_id = -1;
    bool success = false;
    bool clean_correct = true;
    Perturbation delta;
    double energy = 0.0;
    std::size_t predicted_class = 0;
    int restart_index = -1;
    std::string note;
};

// M-norm-closest point on the hyperplane {x : a.x + (value - a.delta) = 0},
// i.e. the linearized constraint g = 0 at `delta` where g(delta) = value.
Perturbation hyperplane_project_m(const Perturbation& delta,
                                  const std::vector<double>& normal,
                                  double value,
                                  const BudgetMatrix& m);

AttackOutcome pgd_attack(const ClassifierOracle& oracle, const SemanticBasis& basis,
                         const BudgetMatrix& m, const LatentCode& w, std::size_t label,
                         const PgdConfig& cfg);
AttackOutcome pgd_attack(const ClassifierOracle& oracle, const SemanticBasis& basis,
                         const BudgetMatrix& m, const LatentCode& w, std::size_t label,
                         const PgdConfig& cfg, RandomStream& rng);

AttackOutcome fab_attack(const ClassifierOracle& oracle, const SemanticBasis& basis,
                         const BudgetMatrix& m, const LatentCode& w, std::size_t label,
                         const FabConfig& cfg);
AttackOutcome fab_attack(const ClassifierOracle& oracle, const SemanticBasis& basis,
                         const BudgetMatrix& m, const LatentCode& w, std::size_t label,
                         const FabConfig& cfg, RandomStream& rng);

// Attacks every target with per-identity random streams derived from
// (config seed, identity id): outcomes are in input order and independent of
// worker count. Per-identity errors become failed records with a note.
std::vector<AttackOutcome> run_campaign(const ClassifierOracle& oracle,
                                        const SemanticBasis& basis,
                                        const BudgetMatrix& m,
                                        const std::vector<CampaignTarget>& targets,
                                        const AttackConfig& cfg,
                                        unsigned workers = 1);

// Campaign with the search restricted to one attribute direction; returned
// deltas are re-embedded into full-length coefficient vectors.
std::vector<AttackOutcome> single_attribute_ablation(const ClassifierOracle& oracle,
                                                     const SemanticBasis& basis,
                                                     const BudgetMatrix& m,
                                                     const std::vector<CampaignTarget>& targets,
                                                     const AttackConfig& cfg,
                                                     std::size_t attribute_index,
                                                     unsigned workers = 1);

// Fraction of outcomes that are clean-correct and not fooled; clean errors
// count against robustness. Throws StatError on empty input.
double robust_accuracy(const std::vector<AttackOutcome>& outcomes);

const char* method_name(const AttackConfig& cfg);

} // namespace semrob
