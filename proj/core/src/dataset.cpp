#include "signcraft/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "signcraft/errors.hpp"
#include "signcraft/image.hpp"
#include "signcraft/parallel.hpp"

namespace fs = std::filesystem;

namespace signcraft {

namespace {

constexpr std::size_t kSampleSize = 3 * kImageSide * kImageSide;

bool is_hidden(const fs::path& p) {
    const std::string name = p.filename().string();
    return !name.empty() && name.front() == '.';
}

bool has_ppm_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".ppm";
}

}  // namespace

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (std::size_t label : labels) ++counts.at(label);
    return counts;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.class_names = class_names;
    out.source = source;
    if (!indices.empty()) out.images = gather(indices);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        out.labels.push_back(labels.at(i));
        if (!sample_paths.empty()) out.sample_paths.push_back(sample_paths.at(i));
    }
    return out;
}

Tensor Dataset::gather(std::span<const std::size_t> indices) const {
    if (indices.empty()) throw ShapeError("cannot gather an empty batch");
    const Shape& s = images.shape();
    const std::size_t per = shape_size(Shape(s.begin() + 1, s.end()));
    Shape out_shape = s;
    out_shape[0] = indices.size();
    Tensor batch(out_shape);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= s[0]) throw IndexError("sample index out of range");
        std::copy_n(images.raw() + indices[i] * per, per, batch.raw() + i * per);
    }
    return batch;
}

Dataset load_directory_dataset(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw IoError("dataset directory not found: " + root.string());

    std::vector<std::string> class_names;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && !is_hidden(entry.path()))
            class_names.push_back(entry.path().filename().string());
    if (class_names.empty())
        throw IoError("dataset directory has no class subdirectories: " + root.string());
    std::sort(class_names.begin(), class_names.end());

    std::vector<fs::path> files;
    std::vector<std::size_t> labels;
    for (std::size_t label = 0; label < class_names.size(); ++label) {
        std::vector<fs::path> class_files;
        for (const auto& entry : fs::directory_iterator(root / class_names[label]))
            if (entry.is_regular_file() && !is_hidden(entry.path()) && has_ppm_extension(entry.path()))
                class_files.push_back(entry.path());
        std::sort(class_files.begin(), class_files.end(),
                  [](const fs::path& a, const fs::path& b) {
                      return a.filename().string() < b.filename().string();
                  });
        for (auto& f : class_files) {
            files.push_back(std::move(f));
            labels.push_back(label);
        }
    }

    Dataset ds;
    ds.class_names = std::move(class_names);
    ds.labels = std::move(labels);
    ds.source = root.string();
    for (const auto& f : files) ds.sample_paths.push_back(f.string());
    if (files.empty()) return ds;

    ds.images = Tensor({files.size(), 3, kImageSide, kImageSide});
    std::vector<std::exception_ptr> errors(files.size());
    parallel_for(
        files.size(),
        [&](std::size_t i) {
            try {
                const Tensor t = load_image_tensor(files[i]);
                std::copy_n(t.raw(), kSampleSize, ds.images.raw() + i * kSampleSize);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        },
        16);
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return ds;
}

SplitResult stratified_split(const Dataset& dataset, double val_fraction, Rng& rng) {
    if (!(val_fraction >= 0.0 && val_fraction < 1.0))
        throw InvalidArgument("validation fraction must lie in [0, 1)");

    const std::size_t k = dataset.class_count();
    std::vector<std::vector<std::size_t>> by_class(k);
    for (std::size_t i = 0; i < dataset.size(); ++i) by_class.at(dataset.labels[i]).push_back(i);

    SplitResult result;
    std::vector<bool> in_val(dataset.size(), false);
    for (std::size_t c = 0; c < k; ++c) {
        const auto& members = by_class[c];
        const std::size_t n = members.size();
        if (n == 0) continue;
        auto n_val = static_cast<std::size_t>(std::lround(static_cast<double>(n) * val_fraction));
        if (n_val > n - 1) n_val = n - 1;
        if (n == 1 && val_fraction > 0.0)
            result.warnings.push_back("class '" + dataset.class_names[c] +
                                      "' has a single sample; it stays in the training split");
        const auto perm = shuffle_indices(rng, n);
        for (std::size_t j = 0; j < n_val; ++j) in_val[members[perm[j]]] = true;
    }

    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < dataset.size(); ++i) (in_val[i] ? val_idx : train_idx).push_back(i);
    result.train = dataset.subset(train_idx);
    result.val = dataset.subset(val_idx);
    return result;
}

}  // namespace signcraft
