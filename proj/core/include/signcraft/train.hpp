#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "signcraft/dataset.hpp"
#include "signcraft/model.hpp"
#include "signcraft/rng.hpp"
#include "signcraft/tensor.hpp"

namespace signcraft {

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 42;
    double val_fraction = 0.2;

    /// Throws InvalidArgument when any field is outside its domain.
    void validate() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    /// Absent when the validation split is empty.
    std::optional<double> val_loss;
    std::optional<double> val_acc;

    friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

using History = std::vector<EpochMetrics>;

/// Throws IndexError unless label < num_classes.
std::vector<float> one_hot(std::size_t label, std::size_t num_classes);

template <typename T>
struct LossResult {
    double loss = 0.0;
    BasicTensor<T> logits_grad;  ///< (p - y) / N
};

/// Mean categorical cross-entropy with log clamp at 1e-12, plus the fused
/// gradient w.r.t. the pre-softmax logits.
template <typename T>
LossResult<T> cross_entropy(const BasicTensor<T>& probabilities, const BasicTensor<T>& targets);

/// Same, with targets given as class indices.
template <typename T>
LossResult<T> cross_entropy(const BasicTensor<T>& probabilities,
                            std::span<const std::size_t> labels);

/// One Adam update at step index t (1-based). Frozen layers are left
/// untouched, moments included. Throws InvalidArgument when t < 1 and
/// ShapeError when gradient shapes disagree with the parameters.
void adam_step(LayerState& state, const std::vector<Tensor>& gradients, std::uint64_t t,
               const TrainConfig& config);

struct EpochResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Train phase: shuffle with `rng`, then forward/loss/backward/Adam per batch
/// (short last batch included), advancing model.step(). Eval phase: forward
/// only, dropout off. Returns sample-weighted loss and accuracy.
/// Throws EmptyDatasetError for an empty split.
EpochResult run_epoch(Model& model, const Dataset& split, const TrainConfig& config, Rng& rng,
                      Phase phase);

/// Sub-stream ids used to derive generators from a run seed.
enum class SeedStream : std::uint64_t { Init = 1, Split = 2, Head = 3, Epoch = 1000 };

Rng seed_stream(std::uint64_t seed, SeedStream stream);

/// Generator used for epoch `epoch` (1-based) of a run seeded with `seed`.
Rng epoch_rng(std::uint64_t seed, std::size_t epoch);

/// config.epochs rounds of train-then-validate. An empty `val` leaves the
/// validation columns unset.
History fit(Model& model, const Dataset& train, const Dataset& val, const TrainConfig& config);

struct SamplePrediction {
    std::size_t true_label = 0;
    std::size_t predicted_label = 0;
    double confidence = 0.0;
};

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  ///< [true][predicted]
    std::vector<SamplePrediction> predictions;
};

/// Throws EmptyDatasetError for an empty dataset.
Evaluation evaluate(const Model& model, const Dataset& dataset, std::size_t batch_size = 64);

}  // namespace signcraft
