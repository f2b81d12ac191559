#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "signcraft/layers.hpp"
#include "signcraft/rng.hpp"
#include "signcraft/tensor.hpp"

namespace signcraft {

struct Conv2DSpec {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    friend bool operator==(const Conv2DSpec&, const Conv2DSpec&) = default;
};

struct MaxPool2x2Spec {
    friend bool operator==(const MaxPool2x2Spec&, const MaxPool2x2Spec&) = default;
};

struct ReLUSpec {
    friend bool operator==(const ReLUSpec&, const ReLUSpec&) = default;
};

struct DropoutSpec {
    double rate = 0.5;
    friend bool operator==(const DropoutSpec&, const DropoutSpec&) = default;
};

struct FlattenSpec {
    friend bool operator==(const FlattenSpec&, const FlattenSpec&) = default;
};

struct DenseSpec {
    std::size_t in_features = 0;
    std::size_t out_features = 0;
    friend bool operator==(const DenseSpec&, const DenseSpec&) = default;
};

struct SoftmaxSpec {
    friend bool operator==(const SoftmaxSpec&, const SoftmaxSpec&) = default;
};

using LayerSpec = std::variant<Conv2DSpec, MaxPool2x2Spec, ReLUSpec, DropoutSpec, FlattenSpec,
                               DenseSpec, SoftmaxSpec>;

/// Lower-case kind tag used in checkpoints and summaries ("conv2d", "dense", ...).
std::string layer_kind(const LayerSpec& spec);

/// Throws InvalidArgument for zero dimensions or a dropout rate outside (0,1).
void validate_layer(const LayerSpec& spec);

/// Conv2D: out*in*kh*kw + out; Dense: in*out + out; everything else 0.
std::size_t param_count(const LayerSpec& spec);

/// Shapes of the learnable tensors of a layer, in storage order (weights, bias).
std::vector<Shape> param_shapes(const LayerSpec& spec);

/// Per-sample output shape for a per-sample input shape ([C,H,W] or [F]).
/// Throws ShapeError if the layer cannot accept the input.
Shape infer_output_shape(const LayerSpec& spec, const Shape& input_shape);

struct LayerState {
    std::vector<Tensor> params;
    std::vector<Tensor> adam_m;
    std::vector<Tensor> adam_v;
    bool frozen = false;

    friend bool operator==(const LayerState&, const LayerState&) = default;
};

/// He-normal weights (stddev sqrt(2/fan_in)), zero bias, zero moments.
LayerState init_params(const LayerSpec& spec, Rng& rng);

struct ModelSpec {
    Shape input_shape;  ///< [C,H,W]
    std::vector<LayerSpec> layers;
    std::size_t class_count = 0;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Per-sample output shape after every layer. Throws ShapeError naming the
/// failing layer index.
std::vector<Shape> infer_shapes(const ModelSpec& spec);

/// Checks shape inference and that the model ends in Dense(K) -> Softmax.
void validate_model_spec(const ModelSpec& spec);

inline constexpr std::size_t kCanonicalSide = 32;

/// Conv(3->32) ReLU Pool Conv(32->64) ReLU Pool Flatten Dropout(0.25)
/// Dense(2304->64) ReLU Dropout(0.5) Dense(64->K) Softmax, for 3x32x32 input.
ModelSpec canonical_architecture(std::size_t class_count, std::size_t hidden_width = 64);

/// Activations kept from a forward pass for the backward pass.
struct ForwardCache {
    std::vector<Tensor> inputs;  ///< input to each layer
    std::vector<Tensor> dropout_masks;
    std::vector<std::vector<std::uint32_t>> pool_argmax;
    Tensor logits;         ///< input to the final softmax
    Tensor probabilities;  ///< [N,K]
};

struct Gradients {
    /// One entry per layer, same layout as LayerState::params. Empty for
    /// frozen and parameter-free layers.
    std::vector<std::vector<Tensor>> layers;
};

class Model {
public:
    Model() = default;
    explicit Model(ModelSpec spec);

    /// Builds and initializes every layer from `rng`.
    static Model initialize(ModelSpec spec, Rng& rng);

    Model(ModelSpec spec, std::vector<LayerState> states, std::uint64_t step);

    const ModelSpec& spec() const noexcept { return spec_; }
    const std::vector<LayerState>& states() const noexcept { return states_; }
    std::vector<LayerState>& states() noexcept { return states_; }
    LayerState& state(std::size_t layer) { return states_.at(layer); }
    const LayerState& state(std::size_t layer) const { return states_.at(layer); }

    /// Adam step counter t (number of optimizer steps already applied).
    std::uint64_t step() const noexcept { return step_; }
    void set_step(std::uint64_t t) noexcept { step_ = t; }

    std::size_t class_count() const noexcept { return spec_.class_count; }

    /// Runs every layer; dropout draws from `rng` in train phase only.
    ForwardCache forward(const Tensor& batch, Phase phase, Rng& rng) const;

    /// Eval-phase forward returning only the probabilities.
    Tensor predict(const Tensor& batch) const;

    /// Backpropagates a gradient w.r.t. the pre-softmax logits.
    Gradients backward(const ForwardCache& cache, const Tensor& logits_grad) const;

    std::size_t total_params() const;
    std::size_t trainable_params() const;

    friend bool operator==(const Model&, const Model&) = default;

private:
    ModelSpec spec_;
    std::vector<LayerState> states_;
    std::uint64_t step_ = 0;
};

struct SummaryRow {
    std::string name;   ///< e.g. "conv2d_1"
    Shape output_shape; ///< per-sample
    std::size_t params = 0;
    bool trainable = true;
};

struct ModelSummary {
    std::vector<SummaryRow> rows;
    std::size_t total_params = 0;
    std::size_t trainable_params = 0;
};

ModelSummary model_summary(const ModelSpec& spec);
/// Same as above but honours the frozen flags of `model`.
ModelSummary model_summary(const Model& model);

std::string format_summary(const ModelSummary& summary);

}  // namespace signcraft
