#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "signcraft/rng.hpp"
#include "signcraft/tensor.hpp"

namespace signcraft {

struct Dataset {
    Tensor images;                         ///< [N,3,32,32], normalized
    std::vector<std::size_t> labels;       ///< class index per sample
    std::vector<std::string> class_names;  ///< ascending byte order
    std::vector<std::string> sample_paths; ///< may be empty for in-memory sets
    std::string source;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t class_count() const noexcept { return class_names.size(); }
    bool empty() const noexcept { return labels.empty(); }

    std::vector<std::size_t> class_counts() const;

    /// New dataset holding `indices` in the given order.
    Dataset subset(const std::vector<std::size_t>& indices) const;

    /// [indices.size(), 3, 32, 32] batch gathered from images.
    Tensor gather(std::span<const std::size_t> indices) const;
};

/// Loads `<root>/<class>/<file>.ppm`. Class index is the rank of the
/// directory name in byte-wise order; files are read in byte-wise filename
/// order. Empty class directories are kept. Files without a .ppm extension
/// and hidden entries are ignored.
///
/// Throws IoError if root is missing or has no class directories, and
/// rethrows the first per-file decode failure with the path attached.
Dataset load_directory_dataset(const std::filesystem::path& root);

struct SplitResult {
    Dataset train;
    Dataset val;
    std::vector<std::string> warnings;
};

/// Per class: n_val = round(n * val_fraction), capped at n - 1. Validation
/// members are picked by a seeded shuffle within the class; both halves keep
/// the original sample order. Throws InvalidArgument unless 0 <= f < 1.
SplitResult stratified_split(const Dataset& dataset, double val_fraction, Rng& rng);

}  // namespace signcraft
