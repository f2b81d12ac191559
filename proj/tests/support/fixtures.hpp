#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "signcraft/dataset.hpp"
#include "signcraft/image.hpp"
#include "signcraft/synth.hpp"
#include "support/oracles.hpp"

namespace signcraft::testing {

/// In-memory dataset of uniform-noise 32x32 images with the given labels.
inline Dataset noise_dataset(const std::vector<std::size_t>& labels, std::size_t classes,
                             std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.images = random_tensor<float>({labels.size(), 3, 32, 32}, rng);
    ds.labels = labels;
    for (std::size_t c = 0; c < classes; ++c) ds.class_names.push_back("class_" + std::to_string(c));
    return ds;
}

/// In-memory synthetic signs, `per_class` of each class in class order.
inline Dataset synth_dataset(const std::vector<SynthClass>& classes, std::size_t per_class,
                             std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.images = Tensor({classes.size() * per_class, 3, kImageSide, kImageSide});
    const std::size_t plane = 3 * kImageSide * kImageSide;
    std::size_t i = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        ds.class_names.push_back(synth_class_dir(classes[c]));
        for (std::size_t k = 0; k < per_class; ++k, ++i) {
            const Tensor t = normalize(resize_bilinear(render_synth_image(classes[c], rng)));
            std::copy(t.data().begin(), t.data().end(), ds.images.data().begin() + i * plane);
            ds.labels.push_back(c);
        }
    }
    return ds;
}

}  // namespace signcraft::testing
