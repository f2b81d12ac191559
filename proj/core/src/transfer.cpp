#include "signcraft/transfer.hpp"

#include "signcraft/errors.hpp"
#include "signcraft/image.hpp"

namespace signcraft {

Model replace_head(const Model& model, std::size_t new_class_count, Rng& rng) {
    if (new_class_count == 0) throw InvalidArgument("new class count must be >= 1");
    const ModelSpec& old_spec = model.spec();
    const auto& layers = old_spec.layers;
    if (layers.size() < 2 || !std::holds_alternative<SoftmaxSpec>(layers.back()) ||
        !std::holds_alternative<DenseSpec>(layers[layers.size() - 2]))
        throw InvalidArchitecture("model does not end with a dense layer feeding softmax");

    const std::size_t head = layers.size() - 2;
    ModelSpec spec = old_spec;
    const auto& old_head = std::get<DenseSpec>(layers[head]);
    spec.layers[head] = DenseSpec{old_head.in_features, new_class_count};
    spec.class_count = new_class_count;

    std::vector<LayerState> states = model.states();
    const bool was_frozen = states[head].frozen;
    states[head] = init_params(spec.layers[head], rng);
    states[head].frozen = was_frozen;
    return Model(std::move(spec), std::move(states), 0);
}

std::string to_string(FreezeMode mode) { return mode == FreezeMode::Conv ? "conv" : "none"; }

FreezeMode parse_freeze_mode(const std::string& text) {
    if (text == "none") return FreezeMode::None;
    if (text == "conv") return FreezeMode::Conv;
    throw InvalidArgument("freeze mode must be 'none' or 'conv', got '" + text + "'");
}

void set_frozen(Model& model, FreezeMode mode) {
    const auto& layers = model.spec().layers;
    for (std::size_t i = 0; i < layers.size(); ++i)
        model.state(i).frozen = mode == FreezeMode::Conv && std::holds_alternative<Conv2DSpec>(layers[i]);
}

void set_frozen(Model& model, const std::vector<std::size_t>& layers, bool frozen) {
    const std::size_t count = model.spec().layers.size();
    for (std::size_t i : layers)
        if (i >= count)
            throw IndexError("layer index " + std::to_string(i) + " out of range (model has " +
                             std::to_string(count) + " layers)");
    for (std::size_t i : layers) model.state(i).frozen = frozen;
}

TrainingRun fine_tune(const Checkpoint& base, const Dataset& target, const TrainConfig& config,
                      FreezeMode freeze) {
    config.validate();
    if (target.class_names.empty()) throw InvalidArgument("target dataset has no classes");
    if (target.empty()) throw EmptyDatasetError("target dataset has no samples");

    Rng head_rng = seed_stream(config.seed, SeedStream::Head);
    Model model = replace_head(base.model, target.class_count(), head_rng);
    set_frozen(model, freeze);

    Rng split_rng = seed_stream(config.seed, SeedStream::Split);
    const SplitResult split = stratified_split(target, config.val_fraction, split_rng);
    History history = fit(model, split.train, split.val, config);
    return {Checkpoint{std::move(model), target.class_names, base.normalization_id}, std::move(history),
            split.warnings};
}

TrainingRun fine_tune(const std::filesystem::path& base, const Dataset& target,
                      const TrainConfig& config, FreezeMode freeze, const std::filesystem::path& out) {
    TrainingRun run = fine_tune(load_checkpoint(base), target, config, freeze);
    save_checkpoint(run.checkpoint, out);
    return run;
}

TrainingRun train_from_scratch(const Dataset& data, const TrainConfig& config) {
    config.validate();
    if (data.empty()) throw EmptyDatasetError("training dataset has no samples");
    Rng init_rng = seed_stream(config.seed, SeedStream::Init);
    Model model = Model::initialize(canonical_architecture(data.class_count()), init_rng);
    Rng split_rng = seed_stream(config.seed, SeedStream::Split);
    const SplitResult split = stratified_split(data, config.val_fraction, split_rng);
    History history = fit(model, split.train, split.val, config);
    return {Checkpoint{std::move(model), data.class_names, kNormalizationId}, std::move(history),
            split.warnings};
}

}  // namespace signcraft
