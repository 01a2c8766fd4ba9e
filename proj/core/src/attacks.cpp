#include "semrob/attacks.hpp"

#include "semrob/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace semrob {

namespace {

void validate_inputs(const ClassifierOracle& oracle, const SemanticBasis& basis,
                     const BudgetMatrix& m, const LatentCode& w, std::size_t label) {
    if (basis.num_directions() != m.size()) {
        throw ShapeError("basis direction count does not match budget matrix size");
    }
    if (w.size() != basis.latent_dim() || oracle.latent_dim() != basis.latent_dim()) {
        throw ShapeError("latent dimensions do not match");
    }
    if (label >= oracle.num_classes()) throw ConfigError("label out of range");
    for (double x : w) {
        if (!std::isfinite(x)) throw ConfigError("latent code contains a non-finite entry");
    }
}

std::size_t predict_at(const ClassifierOracle& oracle, const SemanticBasis& basis,
                       const LatentCode& w, const Perturbation& delta) {
    LatentCode point = to_latent(delta, basis);
    for (std::size_t j = 0; j < point.size(); ++j) point[j] += w[j];
    return oracle.predict(point);
}

// Best-so-far fooling candidate, by M-norm energy.
struct BestCandidate {
    bool found = false;
    Perturbation delta;
    double energy = 0.0;
    std::size_t predicted = 0;
    int restart_index = -1;

    void offer(const Perturbation& d, double e, std::size_t pred, int restart) {
        if (!found || e < energy) {
            found = true;
            delta = d;
            energy = e;
            predicted = pred;
            restart_index = restart;
        }
    }
};

AttackOutcome clean_misclassified_outcome(std::size_t n, std::size_t pred) {
    AttackOutcome out;
    out.success = true;
    out.clean_correct = false;
    out.delta.assign(n, 0.0);
    out.energy = 0.0;
    out.predicted_class = pred;
    out.restart_index = -1;
    return out;
}

AttackOutcome failure_outcome(std::size_t n, std::size_t clean_pred) {
    AttackOutcome out;
    out.success = false;
    out.clean_correct = true;
    out.delta.assign(n, 0.0);
    out.energy = 0.0;
    out.predicted_class = clean_pred;
    out.restart_index = -1;
    return out;
}

} // namespace

Perturbation hyperplane_project_m(const Perturbation& delta,
                                  const std::vector<double>& normal,
                                  double value,
                                  const BudgetMatrix& m) {
    if (normal.size() != delta.size()) throw ShapeError("hyperplane normal length mismatch");
    double dual_sq = 0.0;
    for (std::size_t i = 0; i < normal.size(); ++i) {
        dual_sq += normal[i] * normal[i] / m.diag[i];
    }
    if (dual_sq <= 0.0) throw ConfigError("degenerate hyperplane: zero normal");
    const double shift = value / dual_sq;
    Perturbation out = delta;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= shift * normal[i] / m.diag[i];
    }
    return out;
}

AttackOutcome pgd_attack(const ClassifierOracle& oracle, const SemanticBasis& basis,
                         const BudgetMatrix& m, const LatentCode& w, std::size_t label,
                         const PgdConfig& cfg) {
    RandomStream rng(cfg.seed);
    return pgd_attack(oracle, basis, m, w, label, cfg, rng);
}

AttackOutcome pgd_attack(const ClassifierOracle& oracle, const SemanticBasis& basis,
                         const BudgetMatrix& m, const LatentCode& w, std::size_t label,
                         const PgdConfig& cfg, RandomStream& rng) {
    validate_inputs(oracle, basis, m, w, label);
    if (cfg.iterations < 1 || cfg.restarts < 1 || !(cfg.step_size > 0.0)) {
        throw ConfigError("pgd config requires iterations >= 1, restarts >= 1, step_size > 0");
    }
    const std::size_t n = basis.num_directions();

    const std::size_t clean_pred = oracle.predict(w);
    if (clean_pred != label) {
        return clean_misclassified_outcome(n, clean_pred);
    }

    BestCandidate best;
    for (std::size_t restart = 0; restart < cfg.restarts; ++restart) {
        Perturbation delta(n, 0.0);
        if (restart > 0) {
            delta = sample_uniform_ellipsoid(m, rng);
            const std::size_t pred = predict_at(oracle, basis, w, delta);
            if (pred != label) {
                best.offer(delta, m_norm(delta, m), pred, static_cast<int>(restart));
            }
        }
        for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
            const Perturbation grad =
                loss_and_grad_delta(oracle, basis, w, delta, label, cfg.loss_kind).second;
            const double grad_norm = m_norm(grad, m);
            if (grad_norm >= 1e-20) {
                const double scale = cfg.step_size / grad_norm;
                for (std::size_t i = 0; i < n; ++i) delta[i] += scale * grad[i];
                delta = project_to_ellipsoid(delta, m);
            }
            const std::size_t pred = predict_at(oracle, basis, w, delta);
            if (pred != label) {
                best.offer(delta, m_norm(delta, m), pred, static_cast<int>(restart));
            }
        }
    }

    if (!best.found) return failure_outcome(n, clean_pred);
    AttackOutcome out;
    out.success = true;
    out.clean_correct = true;
    out.delta = std::move(best.delta);
    out.energy = best.energy;
    out.predicted_class = best.predicted;
    out.restart_index = best.restart_index;
    return out;
}

AttackOutcome fab_attack(const ClassifierOracle& oracle, const SemanticBasis& basis,
                         const BudgetMatrix& m, const LatentCode& w, std::size_t label,
                         const FabConfig& cfg) {
    RandomStream rng(cfg.seed);
    return fab_attack(oracle, basis, m, w, label, cfg, rng);
}

AttackOutcome fab_attack(const ClassifierOracle& oracle, const SemanticBasis& basis,
                         const BudgetMatrix& m, const LatentCode& w, std::size_t label,
                         const FabConfig& cfg, RandomStream& rng) {
    validate_inputs(oracle, basis, m, w, label);
    if (cfg.iterations < 1 || cfg.restarts < 1 || cfg.target_classes < 1) {
        throw ConfigError("fab config requires iterations, restarts and target_classes >= 1");
    }
    if (!(cfg.beta > 0.0 && cfg.beta < 1.0) || !(cfg.eta >= 1.0) ||
        !(cfg.alpha_max > 0.0 && cfg.alpha_max <= 1.0)) {
        throw ConfigError("fab config requires 0 < beta < 1, eta >= 1, alpha_max in (0,1]");
    }
    const std::size_t n = basis.num_directions();

    const std::vector<double> clean_logits = oracle.logits(w);
    const std::size_t clean_pred = argmax_lowest(clean_logits);
    if (clean_pred != label) {
        return clean_misclassified_outcome(n, clean_pred);
    }

    // Runner-up classes ranked by clean logit, ties to the lower index.
    std::vector<std::size_t> order(oracle.num_classes());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return clean_logits[a] > clean_logits[b];
    });
    std::vector<std::size_t> targets;
    for (std::size_t c : order) {
        if (c != label && targets.size() < cfg.target_classes) targets.push_back(c);
    }

    BestCandidate best;
    std::string note;
    for (std::size_t target : targets) {
        bool degenerate = false;
        for (std::size_t restart = 0; restart < cfg.restarts && !degenerate; ++restart) {
            Perturbation delta(n, 0.0);
            if (restart > 0) delta = sample_uniform_ellipsoid(m, rng);

            for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
                std::size_t pred = predict_at(oracle, basis, w, delta);
                if (pred != label) {
                    best.offer(delta, m_norm(delta, m), pred, static_cast<int>(restart));
                    // Backward step pulls the iterate toward the clean point.
                    for (double& x : delta) x *= cfg.beta;
                }

                const LogitDiff lin =
                    logit_diff_and_grad_delta(oracle, basis, w, delta, target, label);
                double normal_max = 0.0;
                for (double g : lin.grad_delta) normal_max = std::max(normal_max, std::fabs(g));
                if (normal_max == 0.0) {
                    degenerate = true;
                    if (!note.empty()) note += "; ";
                    note += "degenerate gradient for target " + std::to_string(target);
                    break;
                }

                // M-norm projections of the iterate and of the clean point onto
                // the linearized boundary {g = 0}.
                const Perturbation proj_cur =
                    hyperplane_project_m(delta, lin.grad_delta, lin.value, m);
                double value_at_origin = lin.value;
                for (std::size_t i = 0; i < n; ++i) {
                    value_at_origin -= lin.grad_delta[i] * delta[i];
                }
                const Perturbation proj_origin = hyperplane_project_m(
                    Perturbation(n, 0.0), lin.grad_delta, value_at_origin, m);

                Perturbation step_cur(n), step_origin(n);
                for (std::size_t i = 0; i < n; ++i) {
                    step_cur[i] = proj_cur[i] - delta[i];
                    step_origin[i] = proj_origin[i];
                }
                const double norm_cur = m_norm(step_cur, m);
                const double norm_origin = m_norm(step_origin, m);
                double alpha = 0.0;
                if (norm_cur + norm_origin > 0.0) {
                    alpha = std::min(norm_cur / (norm_cur + norm_origin), cfg.alpha_max);
                }

                for (std::size_t i = 0; i < n; ++i) {
                    const double from_cur = delta[i] + cfg.eta * step_cur[i];
                    const double from_origin = cfg.eta * step_origin[i];
                    delta[i] = (1.0 - alpha) * from_cur + alpha * from_origin;
                }
            }

            const std::size_t pred = predict_at(oracle, basis, w, delta);
            if (pred != label) {
                best.offer(delta, m_norm(delta, m), pred, static_cast<int>(restart));
            }
        }
    }

    // Final search: bisection along the segment from the clean point to the
    // best adversarial candidate.
    if (best.found && cfg.final_search) {
        double hi = 1.0;
        double lo = 0.0;
        for (std::size_t step = 0; step < cfg.final_search_steps; ++step) {
            const double mid = 0.5 * (lo + hi);
            Perturbation probe(n);
            for (std::size_t i = 0; i < n; ++i) probe[i] = mid * best.delta[i];
            const std::size_t pred = predict_at(oracle, basis, w, probe);
            if (pred != label) {
                best.offer(probe, m_norm(probe, m), pred, best.restart_index);
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    if (!best.found) {
        AttackOutcome out = failure_outcome(n, clean_pred);
        out.note = note;
        return out;
    }
    AttackOutcome out;
    out.success = true;
    out.clean_correct = true;
    out.delta = std::move(best.delta);
    out.energy = best.energy;
    out.predicted_class = best.predicted;
    out.restart_index = best.restart_index;
    out.note = note;
    return out;
}

namespace {

AttackOutcome attack_one(const ClassifierOracle& oracle, const SemanticBasis& basis,
                         const BudgetMatrix& m, const CampaignTarget& target,
                         const AttackConfig& cfg) {
    const std::uint64_t seed = std::visit([](const auto& c) { return c.seed; }, cfg);
    RandomStream rng = RandomStream::derive(seed, static_cast<std::uint64_t>(target.identity_id));
    if (const auto* pgd = std::get_if<PgdConfig>(&cfg)) {
        return pgd_attack(oracle, basis, m, target.latent, target.label, *pgd, rng);
    }
    return fab_attack(oracle, basis, m, target.latent, target.label, std::get<FabConfig>(cfg), rng);
}

} // namespace

std::vector<AttackOutcome> run_campaign(const ClassifierOracle& oracle,
                                        const SemanticBasis& basis,
                                        const BudgetMatrix& m,
                                        const std::vector<CampaignTarget>& targets,
                                        const AttackConfig& cfg,
                                        unsigned workers) {
    if (targets.empty()) throw ConfigError("campaign requires at least one target");
    std::vector<AttackOutcome> outcomes(targets.size());

    auto process = [&](std::size_t idx) {
        try {
            outcomes[idx] = attack_one(oracle, basis, m, targets[idx], cfg);
        } catch (const Error& e) {
            AttackOutcome failed;
            failed.success = false;
            failed.clean_correct = false;
            failed.delta.assign(basis.num_directions(), 0.0);
            failed.note = e.what();
            outcomes[idx] = std::move(failed);
        }
        outcomes[idx].identity_id = targets[idx].identity_id;
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
    return outcomes;
}

std::vector<AttackOutcome> single_attribute_ablation(const ClassifierOracle& oracle,
                                                     const SemanticBasis& basis,
                                                     const BudgetMatrix& m,
                                                     const std::vector<CampaignTarget>& targets,
                                                     const AttackConfig& cfg,
                                                     std::size_t attribute_index,
                                                     unsigned workers) {
    if (attribute_index >= basis.num_directions()) {
        throw ConfigError("ablation attribute index out of range");
    }
    const SemanticBasis restricted_basis = basis.restricted_to(attribute_index);
    const BudgetMatrix restricted_m = m.restricted_to(attribute_index);

    std::vector<AttackOutcome> outcomes =
        run_campaign(oracle, restricted_basis, restricted_m, targets, cfg, workers);
    for (AttackOutcome& out : outcomes) {
        Perturbation full(basis.num_directions(), 0.0);
        if (!out.delta.empty()) full[attribute_index] = out.delta[0];
        out.delta = std::move(full);
    }
    return outcomes;
}

double robust_accuracy(const std::vector<AttackOutcome>& outcomes) {
    if (outcomes.empty()) throw StatError("robust_accuracy of an empty campaign");
    std::size_t robust = 0;
    for (const AttackOutcome& out : outcomes) {
        if (!out.success && out.clean_correct) ++robust;
    }
    return static_cast<double>(robust) / static_cast<double>(outcomes.size());
}

const char* method_name(const AttackConfig& cfg) {
    return std::holds_alternative<PgdConfig>(cfg) ? "pgd" : "fab";
}

} // namespace semrob
