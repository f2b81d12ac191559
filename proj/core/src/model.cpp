#include "signcraft/model.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "signcraft/errors.hpp"

namespace signcraft {

namespace {

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

std::string layer_error(std::size_t index, const LayerSpec& spec, const std::string& what) {
    return "layer " + std::to_string(index) + " (" + layer_kind(spec) + "): " + what;
}

}  // namespace

std::string layer_kind(const LayerSpec& spec) {
    return std::visit(overloaded{
                          [](const Conv2DSpec&) { return std::string("conv2d"); },
                          [](const MaxPool2x2Spec&) { return std::string("max_pooling2d"); },
                          [](const ReLUSpec&) { return std::string("relu"); },
                          [](const DropoutSpec&) { return std::string("dropout"); },
                          [](const FlattenSpec&) { return std::string("flatten"); },
                          [](const DenseSpec&) { return std::string("dense"); },
                          [](const SoftmaxSpec&) { return std::string("softmax"); },
                      },
                      spec);
}

void validate_layer(const LayerSpec& spec) {
    std::visit(overloaded{
                   [](const Conv2DSpec& s) {
                       if (!s.in_channels || !s.out_channels || !s.kernel_h || !s.kernel_w)
                           throw InvalidArgument("conv2d dimensions must be >= 1");
                   },
                   [](const DenseSpec& s) {
                       if (!s.in_features || !s.out_features)
                           throw InvalidArgument("dense dimensions must be >= 1");
                   },
                   [](const DropoutSpec& s) {
                       if (!(s.rate > 0.0 && s.rate < 1.0))
                           throw InvalidArgument("dropout rate must lie strictly between 0 and 1");
                   },
                   [](const auto&) {},
               },
               spec);
}

std::vector<Shape> param_shapes(const LayerSpec& spec) {
    if (const auto* c = std::get_if<Conv2DSpec>(&spec))
        return {{c->out_channels, c->in_channels, c->kernel_h, c->kernel_w}, {c->out_channels}};
    if (const auto* d = std::get_if<DenseSpec>(&spec))
        return {{d->in_features, d->out_features}, {d->out_features}};
    return {};
}

std::size_t param_count(const LayerSpec& spec) {
    std::size_t total = 0;
    for (const Shape& s : param_shapes(spec)) total += shape_size(s);
    return total;
}

Shape infer_output_shape(const LayerSpec& spec, const Shape& in) {
    return std::visit(
        overloaded{
            [&](const Conv2DSpec& s) -> Shape {
                if (in.size() != 3) throw ShapeError("conv2d expects [C,H,W] input");
                if (in[0] != s.in_channels)
                    throw ShapeError("conv2d expects " + std::to_string(s.in_channels) +
                                     " channels, got " + std::to_string(in[0]));
                if (s.kernel_h > in[1] || s.kernel_w > in[2])
                    throw ShapeError("conv2d kernel larger than input " + shape_to_string(in));
                return {s.out_channels, in[1] - s.kernel_h + 1, in[2] - s.kernel_w + 1};
            },
            [&](const MaxPool2x2Spec&) -> Shape {
                if (in.size() != 3) throw ShapeError("max pooling expects [C,H,W] input");
                if (in[1] < 2 || in[2] < 2) throw ShapeError("max pooling needs H,W >= 2");
                return {in[0], in[1] / 2, in[2] / 2};
            },
            [&](const FlattenSpec&) -> Shape {
                if (in.size() != 3) throw ShapeError("flatten expects [C,H,W] input");
                return {shape_size(in)};
            },
            [&](const DenseSpec& s) -> Shape {
                if (in.size() != 1) throw ShapeError("dense expects flat input");
                if (in[0] != s.in_features)
                    throw ShapeError("dense expects " + std::to_string(s.in_features) +
                                     " features, got " + std::to_string(in[0]));
                return {s.out_features};
            },
            [&](const SoftmaxSpec&) -> Shape {
                if (in.size() != 1) throw ShapeError("softmax expects flat input");
                return in;
            },
            [&](const auto&) -> Shape { return in; },
        },
        spec);
}

LayerState init_params(const LayerSpec& spec, Rng& rng) {
    validate_layer(spec);
    LayerState state;
    const auto shapes = param_shapes(spec);
    if (shapes.empty()) return state;

    // fan_in is every weight element feeding one output unit
    const Shape& w = shapes[0];
    const std::size_t fan_in = std::holds_alternative<Conv2DSpec>(spec) ? w[1] * w[2] * w[3] : w[0];
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));

    Tensor weights(w);
    for (float& v : weights.data()) v = static_cast<float>(rng.normal(0.0, stddev));
    state.params = {std::move(weights), Tensor(shapes[1])};
    for (const Shape& s : shapes) {
        state.adam_m.emplace_back(s);
        state.adam_v.emplace_back(s);
    }
    return state;
}

std::vector<Shape> infer_shapes(const ModelSpec& spec) {
    if (spec.input_shape.size() != 3) throw ShapeError("model input shape must be [C,H,W]");
    std::vector<Shape> shapes;
    Shape current = spec.input_shape;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        try {
            validate_layer(spec.layers[i]);
            current = infer_output_shape(spec.layers[i], current);
        } catch (const ShapeError& e) {
            throw ShapeError(layer_error(i, spec.layers[i], e.what()));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(layer_error(i, spec.layers[i], e.what()));
        }
        shapes.push_back(current);
    }
    return shapes;
}

void validate_model_spec(const ModelSpec& spec) {
    infer_shapes(spec);
    const auto& layers = spec.layers;
    if (layers.size() < 2 || !std::holds_alternative<SoftmaxSpec>(layers.back()))
        throw InvalidArchitecture("model must end with a softmax layer");
    const auto* head = std::get_if<DenseSpec>(&layers[layers.size() - 2]);
    if (!head) throw InvalidArchitecture("softmax must be preceded by a dense layer");
    if (spec.class_count == 0 || head->out_features != spec.class_count)
        throw InvalidArchitecture("dense head has " + std::to_string(head->out_features) +
                                  " outputs but the model declares " +
                                  std::to_string(spec.class_count) + " classes");
}

ModelSpec canonical_architecture(std::size_t class_count, std::size_t hidden_width) {
    if (class_count == 0) throw InvalidArgument("class count must be >= 1");
    const std::size_t flat = 64 * 6 * 6;
    ModelSpec spec;
    spec.input_shape = {3, kCanonicalSide, kCanonicalSide};
    spec.class_count = class_count;
    spec.layers = {
        Conv2DSpec{3, 32, 3, 3},  ReLUSpec{},        MaxPool2x2Spec{},
        Conv2DSpec{32, 64, 3, 3}, ReLUSpec{},        MaxPool2x2Spec{},
        FlattenSpec{},            DropoutSpec{0.25}, DenseSpec{flat, hidden_width},
        ReLUSpec{},               DropoutSpec{0.5},  DenseSpec{hidden_width, class_count},
        SoftmaxSpec{},
    };
    return spec;
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
    validate_model_spec(spec_);
    for (const LayerSpec& layer : spec_.layers) {
        LayerState state;
        for (const Shape& s : param_shapes(layer)) {
            state.params.emplace_back(s);
            state.adam_m.emplace_back(s);
            state.adam_v.emplace_back(s);
        }
        states_.push_back(std::move(state));
    }
}

Model Model::initialize(ModelSpec spec, Rng& rng) {
    validate_model_spec(spec);
    std::vector<LayerState> states;
    for (const LayerSpec& layer : spec.layers) states.push_back(init_params(layer, rng));
    return Model(std::move(spec), std::move(states), 0);
}

Model::Model(ModelSpec spec, std::vector<LayerState> states, std::uint64_t step)
    : spec_(std::move(spec)), states_(std::move(states)), step_(step) {
    validate_model_spec(spec_);
    if (states_.size() != spec_.layers.size())
        throw ShapeError("model has " + std::to_string(spec_.layers.size()) + " layers but " +
                         std::to_string(states_.size()) + " layer states");
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const auto shapes = param_shapes(spec_.layers[i]);
        const LayerState& st = states_[i];
        if (st.params.size() != shapes.size() || st.adam_m.size() != shapes.size() ||
            st.adam_v.size() != shapes.size())
            throw ShapeError(layer_error(i, spec_.layers[i], "parameter count mismatch"));
        for (std::size_t p = 0; p < shapes.size(); ++p)
            if (st.params[p].shape() != shapes[p] || st.adam_m[p].shape() != shapes[p] ||
                st.adam_v[p].shape() != shapes[p])
                throw ShapeError(layer_error(i, spec_.layers[i], "parameter shape mismatch"));
    }
}

ForwardCache Model::forward(const Tensor& batch, Phase phase, Rng& rng) const {
    if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != spec_.input_shape)
        throw ShapeError("batch shape " + shape_to_string(batch.shape()) +
                         " does not match model input [N," +
                         shape_to_string(spec_.input_shape).substr(1));

    const std::size_t count = spec_.layers.size();
    ForwardCache cache;
    cache.inputs.resize(count);
    cache.dropout_masks.resize(count);
    cache.pool_argmax.resize(count);

    Tensor x = batch;
    for (std::size_t i = 0; i < count; ++i) {
        const LayerSpec& layer = spec_.layers[i];
        const LayerState& st = states_[i];
        if (std::holds_alternative<SoftmaxSpec>(layer)) {
            cache.logits = x;
            x = ops::softmax(x);
            continue;
        }
        cache.inputs[i] = x;
        try {
            x = std::visit(
                overloaded{
                    [&](const Conv2DSpec&) {
                        return ops::conv2d_forward(x, st.params[0], st.params[1]);
                    },
                    [&](const MaxPool2x2Spec&) {
                        auto r = ops::maxpool2x2_forward(x);
                        cache.pool_argmax[i] = std::move(r.argmax);
                        return std::move(r.output);
                    },
                    [&](const ReLUSpec&) { return ops::relu_forward(x); },
                    [&](const DropoutSpec& s) {
                        auto r = ops::dropout_forward(x, s.rate, rng, phase);
                        cache.dropout_masks[i] = std::move(r.mask);
                        return std::move(r.output);
                    },
                    [&](const FlattenSpec&) { return ops::flatten_forward(x); },
                    [&](const DenseSpec&) {
                        return ops::dense_forward(x, st.params[0], st.params[1]);
                    },
                    [&](const SoftmaxSpec&) { return x; },
                },
                layer);
        } catch (const ShapeError& e) {
            throw ShapeError(layer_error(i, layer, e.what()));
        }
    }
    cache.probabilities = std::move(x);
    return cache;
}

Tensor Model::predict(const Tensor& batch) const {
    Rng unused(0);
    return forward(batch, Phase::Eval, unused).probabilities;
}

Gradients Model::backward(const ForwardCache& cache, const Tensor& logits_grad) const {
    const std::size_t count = spec_.layers.size();
    Gradients grads;
    grads.layers.resize(count);

    // Earliest layer that still needs an input gradient: anything upstream
    // of the first trainable layer only feeds frozen or parameter-free work.
    std::size_t first_trainable = count;
    for (std::size_t i = 0; i < count; ++i)
        if (!states_[i].params.empty() && !states_[i].frozen) {
            first_trainable = i;
            break;
        }

    Tensor g = logits_grad;
    for (std::size_t i = count; i-- > 0;) {
        if (i < first_trainable) break;
        const LayerSpec& layer = spec_.layers[i];
        const LayerState& st = states_[i];
        const Tensor& input = cache.inputs[i];
        const bool need_input = i > first_trainable;
        const bool need_params = !st.frozen;
        if (std::holds_alternative<SoftmaxSpec>(layer)) continue;

        if (std::holds_alternative<Conv2DSpec>(layer)) {
            auto r = ops::conv2d_backward(input, st.params[0], g, need_input, need_params);
            if (need_params) grads.layers[i] = {std::move(r.weights), std::move(r.bias)};
            g = std::move(r.input);
        } else if (std::holds_alternative<DenseSpec>(layer)) {
            auto r = ops::dense_backward(input, st.params[0], g, need_input, need_params);
            if (need_params) grads.layers[i] = {std::move(r.weights), std::move(r.bias)};
            g = std::move(r.input);
        } else if (std::holds_alternative<MaxPool2x2Spec>(layer)) {
            g = ops::maxpool2x2_backward(g, cache.pool_argmax[i], input.shape());
        } else if (std::holds_alternative<ReLUSpec>(layer)) {
            g = ops::relu_backward(input, g);
        } else if (std::holds_alternative<DropoutSpec>(layer)) {
            g = ops::dropout_backward(g, cache.dropout_masks[i]);
        } else if (std::holds_alternative<FlattenSpec>(layer)) {
            g = ops::flatten_backward(g, input.shape());
        }
    }
    return grads;
}

std::size_t Model::total_params() const {
    std::size_t total = 0;
    for (const LayerSpec& l : spec_.layers) total += param_count(l);
    return total;
}

std::size_t Model::trainable_params() const {
    std::size_t total = 0;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i)
        if (!states_[i].frozen) total += param_count(spec_.layers[i]);
    return total;
}

namespace {

ModelSummary build_summary(const ModelSpec& spec, const std::vector<LayerState>* states) {
    const auto shapes = infer_shapes(spec);
    ModelSummary summary;
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        SummaryRow row;
        const std::string kind = layer_kind(spec.layers[i]);
        row.name = kind + "_" + std::to_string(++seen[kind]);
        row.output_shape = shapes[i];
        row.params = param_count(spec.layers[i]);
        row.trainable = !(states && (*states)[i].frozen);
        summary.total_params += row.params;
        if (row.trainable) summary.trainable_params += row.params;
        summary.rows.push_back(std::move(row));
    }
    return summary;
}

std::string tuple_shape(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
    return out + ")";
}

}  // namespace

ModelSummary model_summary(const ModelSpec& spec) { return build_summary(spec, nullptr); }

ModelSummary model_summary(const Model& model) {
    return build_summary(model.spec(), &model.states());
}

std::string format_summary(const ModelSummary& summary) {
    std::ostringstream os;
    const std::string rule(64, '-');
    os << std::left << std::setw(24) << "Layer" << std::setw(24) << "Output shape" << std::right
       << std::setw(16) << "Params" << '\n'
       << rule << '\n';
    for (const SummaryRow& r : summary.rows) {
        os << std::left << std::setw(24) << (r.name + (r.trainable || !r.params ? "" : " (frozen)"))
           << std::setw(24) << tuple_shape(r.output_shape) << std::right << std::setw(16) << r.params
           << '\n';
    }
    os << rule << '\n'
       << "Total params: " << summary.total_params << '\n'
       << "Trainable params: " << summary.trainable_params << '\n'
       << "Non-trainable params: " << summary.total_params - summary.trainable_params << '\n';
    return os.str();
}

}  // namespace signcraft
