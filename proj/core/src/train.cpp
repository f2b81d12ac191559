#include "signcraft/train.hpp"

#include <algorithm>
#include <cmath>

#include "signcraft/errors.hpp"

namespace signcraft {

namespace {

constexpr double kLogClamp = 1e-12;

std::size_t argmax_row(const float* row, std::size_t k) {
    return static_cast<std::size_t>(std::max_element(row, row + k) - row);
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0))
        throw InvalidArgument("validation fraction must lie in [0, 1)");
}

std::vector<float> one_hot(std::size_t label, std::size_t num_classes) {
    if (label >= num_classes)
        throw IndexError("label " + std::to_string(label) + " out of range for " +
                         std::to_string(num_classes) + " classes");
    std::vector<float> v(num_classes, 0.0f);
    v[label] = 1.0f;
    return v;
}

template <typename T>
LossResult<T> cross_entropy(const BasicTensor<T>& probabilities, const BasicTensor<T>& targets) {
    if (probabilities.rank() != 2 || probabilities.shape() != targets.shape())
        throw ShapeError("cross_entropy: probabilities " + shape_to_string(probabilities.shape()) +
                         " vs targets " + shape_to_string(targets.shape()));
    const std::size_t n = probabilities.dim(0), k = probabilities.dim(1);
    LossResult<T> result{0.0, BasicTensor<T>(probabilities.shape())};
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n * k; ++i) {
        const double p = probabilities[i];
        const double y = targets[i];
        if (y != 0.0) total -= y * std::log(std::max(p, kLogClamp));
        result.logits_grad[i] = static_cast<T>((p - y) * inv_n);
    }
    result.loss = total * inv_n;
    return result;
}

template <typename T>
LossResult<T> cross_entropy(const BasicTensor<T>& probabilities,
                            std::span<const std::size_t> labels) {
    if (probabilities.rank() != 2 || probabilities.dim(0) != labels.size())
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         shape_to_string(probabilities.shape()) + " probabilities");
    const std::size_t n = probabilities.dim(0), k = probabilities.dim(1);
    BasicTensor<T> targets(probabilities.shape());
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= k) throw IndexError("label out of range in cross_entropy");
        targets[i * k + labels[i]] = T{1};
    }
    return cross_entropy(probabilities, targets);
}

template LossResult<float> cross_entropy(const Tensor&, const Tensor&);
template LossResult<double> cross_entropy(const TensorD&, const TensorD&);
template LossResult<float> cross_entropy(const Tensor&, std::span<const std::size_t>);
template LossResult<double> cross_entropy(const TensorD&, std::span<const std::size_t>);

void adam_step(LayerState& state, const std::vector<Tensor>& gradients, std::uint64_t t,
               const TrainConfig& config) {
    if (t < 1) throw InvalidArgument("adam step index must be >= 1");
    if (state.frozen || state.params.empty()) return;
    if (gradients.size() != state.params.size())
        throw ShapeError("adam: got " + std::to_string(gradients.size()) + " gradients for " +
                         std::to_string(state.params.size()) + " parameters");

    const double b1 = config.beta1, b2 = config.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t p = 0; p < state.params.size(); ++p) {
        Tensor& param = state.params[p];
        Tensor& m = state.adam_m[p];
        Tensor& v = state.adam_v[p];
        const Tensor& g = gradients[p];
        if (g.shape() != param.shape())
            throw ShapeError("adam: gradient shape " + shape_to_string(g.shape()) +
                             " != parameter shape " + shape_to_string(param.shape()));
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double gi = g[i];
            const double mi = b1 * m[i] + (1.0 - b1) * gi;
            const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double m_hat = mi / correction1;
            const double v_hat = vi / correction2;
            param[i] = static_cast<float>(param[i] -
                                          config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon));
        }
    }
}

EpochResult run_epoch(Model& model, const Dataset& split, const TrainConfig& config, Rng& rng,
                      Phase phase) {
    if (split.empty()) throw EmptyDatasetError("cannot run an epoch on an empty dataset");
    const std::size_t n = split.size();
    const std::size_t k = model.class_count();
    const std::size_t batch = std::max<std::size_t>(1, config.batch_size);

    std::vector<std::size_t> order;
    if (phase == Phase::Train) {
        order = shuffle_indices(rng, n);
    } else {
        order.resize(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t count = std::min(batch, n - start);
        const std::span<const std::size_t> idx(order.data() + start, count);
        std::vector<std::size_t> labels(count);
        for (std::size_t i = 0; i < count; ++i) labels[i] = split.labels[idx[i]];

        const ForwardCache cache = model.forward(split.gather(idx), phase, rng);
        const auto loss = cross_entropy(cache.probabilities, std::span<const std::size_t>(labels));
        loss_sum += loss.loss * static_cast<double>(count);
        for (std::size_t i = 0; i < count; ++i)
            if (argmax_row(cache.probabilities.raw() + i * k, k) == labels[i]) ++correct;

        if (phase == Phase::Train) {
            const Gradients grads = model.backward(cache, loss.logits_grad);
            const std::uint64_t t = model.step() + 1;
            for (std::size_t layer = 0; layer < grads.layers.size(); ++layer)
                if (!grads.layers[layer].empty())
                    adam_step(model.state(layer), grads.layers[layer], t, config);
            model.set_step(t);
        }
    }
    return {loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

Rng seed_stream(std::uint64_t seed, SeedStream stream) {
    return Rng::stream(seed, static_cast<std::uint64_t>(stream));
}

Rng epoch_rng(std::uint64_t seed, std::size_t epoch) {
    return Rng::stream(seed, static_cast<std::uint64_t>(SeedStream::Epoch) + epoch);
}

History fit(Model& model, const Dataset& train, const Dataset& val, const TrainConfig& config) {
    config.validate();
    if (train.class_count() != model.class_count())
        throw InvalidArgument("training set has " + std::to_string(train.class_count()) +
                              " classes but the model head has " +
                              std::to_string(model.class_count()));
    if (!val.empty() && val.class_count() != model.class_count())
        throw InvalidArgument("validation set class count does not match the model");

    History history;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng rng = epoch_rng(config.seed, epoch);
        EpochMetrics row;
        row.epoch = epoch;
        const EpochResult tr = run_epoch(model, train, config, rng, Phase::Train);
        row.train_loss = tr.loss;
        row.train_acc = tr.accuracy;
        if (!val.empty()) {
            const EpochResult va = run_epoch(model, val, config, rng, Phase::Eval);
            row.val_loss = va.loss;
            row.val_acc = va.accuracy;
        }
        history.push_back(row);
    }
    return history;
}

Evaluation evaluate(const Model& model, const Dataset& dataset, std::size_t batch_size) {
    if (dataset.empty()) throw EmptyDatasetError("cannot evaluate on an empty dataset");
    const std::size_t n = dataset.size();
    const std::size_t k = model.class_count();
    batch_size = std::max<std::size_t>(1, batch_size);

    Evaluation eval;
    eval.confusion.assign(k, std::vector<std::size_t>(k, 0));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t count = std::min(batch_size, n - start);
        idx.resize(count);
        for (std::size_t i = 0; i < count; ++i) idx[i] = start + i;
        std::vector<std::size_t> labels(dataset.labels.begin() + static_cast<std::ptrdiff_t>(start),
                                        dataset.labels.begin() + static_cast<std::ptrdiff_t>(start + count));
        for (std::size_t label : labels)
            if (label >= k) throw IndexError("dataset label exceeds the model's class count");

        const Tensor probs = model.predict(dataset.gather(idx));
        loss_sum += cross_entropy(probs, std::span<const std::size_t>(labels)).loss *
                    static_cast<double>(count);
        for (std::size_t i = 0; i < count; ++i) {
            const float* row = probs.raw() + i * k;
            const std::size_t pred = argmax_row(row, k);
            eval.predictions.push_back({labels[i], pred, static_cast<double>(row[pred])});
            ++eval.confusion[labels[i]][pred];
            if (pred == labels[i]) ++correct;
        }
    }
    eval.loss = loss_sum / static_cast<double>(n);
    eval.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return eval;
}

}  // namespace signcraft
