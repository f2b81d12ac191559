#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "signcraft/checkpoint.hpp"
#include "signcraft/dataset.hpp"
#include "signcraft/model.hpp"
#include "signcraft/train.hpp"

namespace signcraft {

/// Swaps the final Dense layer for a freshly initialized Dense(hidden -> K),
/// zeroes its moments and resets the Adam step counter. Other layers are
/// untouched. Throws InvalidArchitecture if the model does not end in
/// Dense -> Softmax.
Model replace_head(const Model& model, std::size_t new_class_count, Rng& rng);

enum class FreezeMode { None, Conv };

std::string to_string(FreezeMode mode);
/// Accepts "none" and "conv"; throws InvalidArgument otherwise.
FreezeMode parse_freeze_mode(const std::string& text);

/// Conv freezes every Conv2D layer and unfreezes the rest; None unfreezes all.
void set_frozen(Model& model, FreezeMode mode);
/// Sets the flag on the listed layers only. Throws IndexError for a bad index.
void set_frozen(Model& model, const std::vector<std::size_t>& layers, bool frozen);

struct TrainingRun {
    Checkpoint checkpoint;
    History history;
    std::vector<std::string> warnings;  ///< from the stratified split
};

/// replace_head -> set_frozen -> fit on a stratified split of `target`.
/// Head initialization, split and training all derive from config.seed.
TrainingRun fine_tune(const Checkpoint& base, const Dataset& target, const TrainConfig& config,
                         FreezeMode freeze);

/// File-level variant: loads `base`, fine-tunes, saves to `out`.
TrainingRun fine_tune(const std::filesystem::path& base, const Dataset& target,
                         const TrainConfig& config, FreezeMode freeze,
                         const std::filesystem::path& out);

/// Builds and trains the canonical architecture from scratch on a
/// stratified split of `data`.
TrainingRun train_from_scratch(const Dataset& data, const TrainConfig& config);

}  // namespace signcraft
