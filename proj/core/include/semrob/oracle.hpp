#pragma once

#include "semrob/geometry.hpp"

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace semrob {

enum class LossKind { cross_entropy, margin };

// Deterministic classifier over latent codes. Implementations provide logits
// and a vector-Jacobian product; probabilities and losses are derived here.
// Oracles are immutable after construction and safe for concurrent evaluation.
class ClassifierOracle {
public:
    virtual ~ClassifierOracle() = default;

    virtual std::size_t num_classes() const = 0;
    virtual std::size_t latent_dim() const = 0;
    virtual std::vector<double> logits(const LatentCode& w) const = 0;

    // Gradient of sum_c grad_logits[c] * logit_c(w) with respect to w.
    virtual std::vector<double> backprop_logits(const LatentCode& w,
                                                const std::vector<double>& grad_logits) const = 0;

    // Stable softmax of the logits; nonnegative, sums to 1.
    std::vector<double> probabilities(const LatentCode& w) const;

    // Argmax of the logits; ties resolve to the lowest class index.
    std::size_t predict(const LatentCode& w) const;

    // Loss value and d-dimensional gradient at w. cross_entropy is -log p_y
    // with the probability clamped at 1e-12 so the value stays finite; margin
    // is max_{c != y} logit_c - logit_y.
    std::pair<double, std::vector<double>> loss_and_gradient(const LatentCode& w,
                                                             std::size_t label,
                                                             LossKind kind) const;
};

// Argmax with lowest-index tie break, shared by every decision in the library.
std::size_t argmax_lowest(const std::vector<double>& values);

// One identity to attack or certify.
struct CampaignTarget {
    std::int64_t identity_id = -1;
    LatentCode latent;
    std::size_t label = 0;
};

// K latent codes, one per identity; labels are the indices 0..K-1.
struct SyntheticPopulation {
    std::size_t latent_dim = 0;
    std::uint64_t seed = 0;
    std::vector<LatentCode> codes;

    std::size_t size() const { return codes.size(); }
};

// Identity codes drawn i.i.d. standard normal from the seeded stream;
// bit-identical across runs for equal arguments.
SyntheticPopulation gen_population(std::size_t num_identities,
                                   std::size_t latent_dim,
                                   std::uint64_t seed);

// Affine classifier logits(w) = W w + b. Used as the verification oracle:
// boundary distances have closed forms.
class LinearOracle final : public ClassifierOracle {
public:
    LinearOracle(std::size_t num_classes, std::size_t latent_dim,
                 std::vector<double> weights, std::vector<double> biases);

    std::size_t num_classes() const override { return num_classes_; }
    std::size_t latent_dim() const override { return latent_dim_; }
    std::vector<double> logits(const LatentCode& w) const override;
    std::vector<double> backprop_logits(const LatentCode& w,
                                        const std::vector<double>& grad_logits) const override;

    std::span<const double> weight_row(std::size_t c) const {
        return {weights_.data() + c * latent_dim_, latent_dim_};
    }
    const std::vector<double>& biases() const { return biases_; }

private:
    std::size_t num_classes_;
    std::size_t latent_dim_;
    std::vector<double> weights_; // Y x d, row-major
    std::vector<double> biases_;  // Y
};

// Embedding-space matcher: logits are temperature-scaled cosine similarities
// between the embedded code A w and per-identity prototype embeddings.
class PrototypeOracle final : public ClassifierOracle {
public:
    PrototypeOracle(std::size_t latent_dim, std::size_t embed_dim,
                    std::vector<double> embedding, std::vector<double> gallery,
                    double temperature);

    std::size_t num_classes() const override { return gallery_.size() / embed_dim_; }
    std::size_t latent_dim() const override { return latent_dim_; }
    std::vector<double> logits(const LatentCode& w) const override;
    std::vector<double> backprop_logits(const LatentCode& w,
                                        const std::vector<double>& grad_logits) const override;

    double temperature() const { return temperature_; }
    std::size_t embed_dim() const { return embed_dim_; }

private:
    std::vector<double> embed(const LatentCode& w) const;

    std::size_t latent_dim_;
    std::size_t embed_dim_;
    std::vector<double> embedding_;     // e x d, row-major
    std::vector<double> gallery_;       // Y x e, row-major
    std::vector<double> gallery_norms_; // Y
    double temperature_;
};

// Prototype oracle whose gallery embeds the population's own codes: every
// identity is its own nearest prototype, so clean accuracy is 100%.
PrototypeOracle make_prototype_oracle(const SyntheticPopulation& population,
                                      std::size_t embed_dim,
                                      double temperature,
                                      std::uint64_t seed);

// Loss value and gradient with respect to the perturbation coefficients at
// w + V^T delta (chain rule grad_delta = V grad_w).
std::pair<double, Perturbation> loss_and_grad_delta(const ClassifierOracle& oracle,
                                                    const SemanticBasis& basis,
                                                    const LatentCode& w,
                                                    const Perturbation& delta,
                                                    std::size_t label,
                                                    LossKind kind);

// Central-difference estimate of the same gradient; verification harness.
Perturbation finite_diff_grad_delta(const ClassifierOracle& oracle,
                                    const SemanticBasis& basis,
                                    const LatentCode& w,
                                    const Perturbation& delta,
                                    std::size_t label,
                                    LossKind kind,
                                    double step);

// Value and delta-gradient of logit[target] - logit[label] at w + V^T delta;
// the linearization used by minimum-perturbation attacks.
struct LogitDiff {
    double value = 0.0;
    Perturbation grad_delta;
};
LogitDiff logit_diff_and_grad_delta(const ClassifierOracle& oracle,
                                    const SemanticBasis& basis,
                                    const LatentCode& w,
                                    const Perturbation& delta,
                                    std::size_t target,
                                    std::size_t label);

} // namespace semrob
