#include "semrob/oracle.hpp"

#include "semrob/error.hpp"

#include <algorithm>
#include <cmath>

namespace semrob {

namespace {
constexpr double kProbabilityFloor = 1e-12;
}

std::size_t argmax_lowest(const std::vector<double>& values) {
    if (values.empty()) throw ShapeError("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

std::vector<double> ClassifierOracle::probabilities(const LatentCode& w) const {
    std::vector<double> lg = logits(w);
    const double max_logit = *std::max_element(lg.begin(), lg.end());
    double sum = 0.0;
    for (double& v : lg) {
        v = std::exp(v - max_logit);
        sum += v;
    }
    for (double& v : lg) v /= sum;
    return lg;
}

std::size_t ClassifierOracle::predict(const LatentCode& w) const {
    return argmax_lowest(logits(w));
}

std::pair<double, std::vector<double>> ClassifierOracle::loss_and_gradient(const LatentCode& w,
                                                                           std::size_t label,
                                                                           LossKind kind) const {
    const std::size_t classes = num_classes();
    if (label >= classes) throw ConfigError("label out of range");

    if (kind == LossKind::cross_entropy) {
        const std::vector<double> probs = probabilities(w);
        const double loss = -std::log(std::max(probs[label], kProbabilityFloor));
        std::vector<double> grad_logits = probs;
        grad_logits[label] -= 1.0;
        return {loss, backprop_logits(w, grad_logits)};
    }

    // Margin loss: best competing logit minus the true logit.
    const std::vector<double> lg = logits(w);
    std::size_t runner_up = label == 0 ? 1 : 0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (c != label && lg[c] > lg[runner_up]) runner_up = c;
    }
    std::vector<double> grad_logits(classes, 0.0);
    grad_logits[runner_up] = 1.0;
    grad_logits[label] -= 1.0;
    return {lg[runner_up] - lg[label], backprop_logits(w, grad_logits)};
}

SyntheticPopulation gen_population(std::size_t num_identities,
                                   std::size_t latent_dim,
                                   std::uint64_t seed) {
    if (num_identities < 2) throw ConfigError("population requires at least 2 identities");
    if (latent_dim < 1) throw ConfigError("population requires latent_dim >= 1");

    SyntheticPopulation pop;
    pop.latent_dim = latent_dim;
    pop.seed = seed;
    pop.codes.resize(num_identities);
    RandomStream rng(seed);
    for (auto& code : pop.codes) {
        code.resize(latent_dim);
        for (double& x : code) x = rng.normal();
    }
    return pop;
}

LinearOracle::LinearOracle(std::size_t num_classes, std::size_t latent_dim,
                           std::vector<double> weights, std::vector<double> biases)
    : num_classes_(num_classes),
      latent_dim_(latent_dim),
      weights_(std::move(weights)),
      biases_(std::move(biases)) {
    if (num_classes_ < 2) throw ConfigError("linear oracle requires at least 2 classes");
    if (weights_.size() != num_classes_ * latent_dim_ || biases_.size() != num_classes_) {
        throw ShapeError("linear oracle weight/bias sizes do not match");
    }
}

std::vector<double> LinearOracle::logits(const LatentCode& w) const {
    if (w.size() != latent_dim_) throw ShapeError("latent code length mismatch");
    std::vector<double> out(num_classes_);
    for (std::size_t c = 0; c < num_classes_; ++c) {
        const double* row = weights_.data() + c * latent_dim_;
        double acc = biases_[c];
        for (std::size_t j = 0; j < latent_dim_; ++j) acc += row[j] * w[j];
        out[c] = acc;
    }
    return out;
}

std::vector<double> LinearOracle::backprop_logits(const LatentCode& w,
                                                  const std::vector<double>& grad_logits) const {
    (void)w;
    if (grad_logits.size() != num_classes_) throw ShapeError("logit gradient length mismatch");
    std::vector<double> grad(latent_dim_, 0.0);
    for (std::size_t c = 0; c < num_classes_; ++c) {
        const double g = grad_logits[c];
        if (g == 0.0) continue;
        const double* row = weights_.data() + c * latent_dim_;
        for (std::size_t j = 0; j < latent_dim_; ++j) grad[j] += g * row[j];
    }
    return grad;
}

PrototypeOracle::PrototypeOracle(std::size_t latent_dim, std::size_t embed_dim,
                                 std::vector<double> embedding, std::vector<double> gallery,
                                 double temperature)
    : latent_dim_(latent_dim),
      embed_dim_(embed_dim),
      embedding_(std::move(embedding)),
      gallery_(std::move(gallery)),
      temperature_(temperature) {
    if (!(temperature_ > 0.0)) throw ConfigError("temperature must be positive");
    if (embed_dim_ < 1) throw ConfigError("embed_dim must be at least 1");
    if (embedding_.size() != embed_dim_ * latent_dim_) {
        throw ShapeError("embedding matrix size does not match e x d");
    }
    if (gallery_.empty() || gallery_.size() % embed_dim_ != 0 || gallery_.size() / embed_dim_ < 2) {
        throw ShapeError("gallery must hold at least 2 prototypes of length embed_dim");
    }
    gallery_norms_.resize(gallery_.size() / embed_dim_);
    for (std::size_t c = 0; c < gallery_norms_.size(); ++c) {
        double sq = 0.0;
        for (std::size_t j = 0; j < embed_dim_; ++j) {
            const double v = gallery_[c * embed_dim_ + j];
            sq += v * v;
        }
        if (sq <= 0.0) throw ConfigError("gallery prototypes must be nonzero");
        gallery_norms_[c] = std::sqrt(sq);
    }
}

std::vector<double> PrototypeOracle::embed(const LatentCode& w) const {
    if (w.size() != latent_dim_) throw ShapeError("latent code length mismatch");
    std::vector<double> u(embed_dim_, 0.0);
    for (std::size_t i = 0; i < embed_dim_; ++i) {
        const double* row = embedding_.data() + i * latent_dim_;
        double acc = 0.0;
        for (std::size_t j = 0; j < latent_dim_; ++j) acc += row[j] * w[j];
        u[i] = acc;
    }
    return u;
}

std::vector<double> PrototypeOracle::logits(const LatentCode& w) const {
    const std::vector<double> u = embed(w);
    double u_sq = 0.0;
    for (double v : u) u_sq += v * v;
    const std::size_t classes = num_classes();
    std::vector<double> out(classes, 0.0);
    if (u_sq < 1e-280) return out; // cosine undefined at the origin
    const double inv_u = 1.0 / std::sqrt(u_sq);
    for (std::size_t c = 0; c < classes; ++c) {
        const double* proto = gallery_.data() + c * embed_dim_;
        double dot = 0.0;
        for (std::size_t j = 0; j < embed_dim_; ++j) dot += u[j] * proto[j];
        out[c] = temperature_ * dot * inv_u / gallery_norms_[c];
    }
    return out;
}

std::vector<double> PrototypeOracle::backprop_logits(const LatentCode& w,
                                                     const std::vector<double>& grad_logits) const {
    const std::size_t classes = num_classes();
    if (grad_logits.size() != classes) throw ShapeError("logit gradient length mismatch");
    const std::vector<double> u = embed(w);
    double u_sq = 0.0;
    for (double v : u) u_sq += v * v;
    if (u_sq < 1e-280) return std::vector<double>(latent_dim_, 0.0);
    const double u_norm = std::sqrt(u_sq);

    // d logit_c / d u = tau * (g_c / (|u||g_c|) - (u.g_c) u / (|u|^3 |g_c|)).
    std::vector<double> grad_u(embed_dim_, 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
        const double g = grad_logits[c];
        if (g == 0.0) continue;
        const double* proto = gallery_.data() + c * embed_dim_;
        double dot = 0.0;
        for (std::size_t j = 0; j < embed_dim_; ++j) dot += u[j] * proto[j];
        const double coeff = temperature_ * g / (u_norm * gallery_norms_[c]);
        const double radial = dot / u_sq;
        for (std::size_t j = 0; j < embed_dim_; ++j) {
            grad_u[j] += coeff * (proto[j] - radial * u[j]);
        }
    }

    std::vector<double> grad(latent_dim_, 0.0);
    for (std::size_t i = 0; i < embed_dim_; ++i) {
        const double g = grad_u[i];
        if (g == 0.0) continue;
        const double* row = embedding_.data() + i * latent_dim_;
        for (std::size_t j = 0; j < latent_dim_; ++j) grad[j] += g * row[j];
    }
    return grad;
}

PrototypeOracle make_prototype_oracle(const SyntheticPopulation& population,
                                      std::size_t embed_dim,
                                      double temperature,
                                      std::uint64_t seed) {
    if (population.size() < 2) throw ConfigError("prototype oracle requires at least 2 identities");
    if (embed_dim < 1) throw ConfigError("embed_dim must be at least 1");
    const std::size_t d = population.latent_dim;

    RandomStream rng(seed);
    std::vector<double> embedding(embed_dim * d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& x : embedding) x = scale * rng.normal();

    std::vector<double> gallery(population.size() * embed_dim, 0.0);
    for (std::size_t c = 0; c < population.size(); ++c) {
        const LatentCode& code = population.codes[c];
        if (code.size() != d) throw ShapeError("population code length mismatch");
        for (std::size_t i = 0; i < embed_dim; ++i) {
            const double* row = embedding.data() + i * d;
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += row[j] * code[j];
            gallery[c * embed_dim + i] = acc;
        }
    }
    return PrototypeOracle(d, embed_dim, std::move(embedding), std::move(gallery), temperature);
}

std::pair<double, Perturbation> loss_and_grad_delta(const ClassifierOracle& oracle,
                                                    const SemanticBasis& basis,
                                                    const LatentCode& w,
                                                    const Perturbation& delta,
                                                    std::size_t label,
                                                    LossKind kind) {
    if (w.size() != basis.latent_dim() || oracle.latent_dim() != basis.latent_dim()) {
        throw ShapeError("latent dimensions do not match");
    }
    LatentCode point = to_latent(delta, basis);
    for (std::size_t j = 0; j < point.size(); ++j) point[j] += w[j];

    auto [loss, grad_w] = oracle.loss_and_gradient(point, label, kind);
    Perturbation grad_delta(delta.size(), 0.0);
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const auto r = basis.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * grad_w[j];
        grad_delta[i] = acc;
    }
    return {loss, std::move(grad_delta)};
}

Perturbation finite_diff_grad_delta(const ClassifierOracle& oracle,
                                    const SemanticBasis& basis,
                                    const LatentCode& w,
                                    const Perturbation& delta,
                                    std::size_t label,
                                    LossKind kind,
                                    double step) {
    if (!(step > 0.0)) throw ConfigError("finite difference step must be positive");
    Perturbation grad(delta.size(), 0.0);
    Perturbation probe = delta;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        probe[i] = delta[i] + step;
        const double plus = loss_and_grad_delta(oracle, basis, w, probe, label, kind).first;
        probe[i] = delta[i] - step;
        const double minus = loss_and_grad_delta(oracle, basis, w, probe, label, kind).first;
        probe[i] = delta[i];
        grad[i] = (plus - minus) / (2.0 * step);
    }
    return grad;
}

LogitDiff logit_diff_and_grad_delta(const ClassifierOracle& oracle,
                                    const SemanticBasis& basis,
                                    const LatentCode& w,
                                    const Perturbation& delta,
                                    std::size_t target,
                                    std::size_t label) {
    if (target >= oracle.num_classes() || label >= oracle.num_classes()) {
        throw ConfigError("class index out of range");
    }
    LatentCode point = to_latent(delta, basis);
    for (std::size_t j = 0; j < point.size(); ++j) point[j] += w[j];

    const std::vector<double> lg = oracle.logits(point);
    std::vector<double> grad_logits(oracle.num_classes(), 0.0);
    grad_logits[target] += 1.0;
    grad_logits[label] -= 1.0;
    const std::vector<double> grad_w = oracle.backprop_logits(point, grad_logits);

    LogitDiff out;
    out.value = lg[target] - lg[label];
    out.grad_delta.resize(delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const auto r = basis.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * grad_w[j];
        out.grad_delta[i] = acc;
    }
    return out;
}

} // namespace semrob
