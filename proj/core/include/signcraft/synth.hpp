#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "signcraft/image.hpp"
#include "signcraft/rng.hpp"

namespace signcraft {

enum class SynthShape { Circle, Triangle, Square, Octagon, Diamond, Bar };

std::string to_string(SynthShape shape);
/// Throws InvalidArgument for an unknown name.
SynthShape parse_synth_shape(const std::string& name);

using Rgb = std::array<std::uint8_t, 3>;

struct SynthClass {
    SynthShape shape;
    Rgb color;
    std::string name;  ///< directory name; empty means "<shape>_<rrggbb>"
};

inline constexpr std::size_t kSynthSide = 48;

/// Draws one 48x48 sign: uniform-noise background, the shape filled with
/// `color`, centre jittered by up to 4 px and size scaled by up to 15%.
RawImage render_synth_image(const SynthClass& cls, Rng& rng);

/// Writes per_class PPM files for every class under `out`, in class order,
/// as `<out>/<class>/img_NNNN.ppm`. Throws IoError if `out` is unwritable.
void synth_generate(const std::vector<SynthClass>& classes, std::size_t per_class, Rng& rng,
                    const std::filesystem::path& out);

/// Six classes with distinct shapes and colours.
std::vector<SynthClass> synth_preset_a();
/// Four classes sharing no (shape, colour) pair with preset A.
std::vector<SynthClass> synth_preset_b();

std::string synth_class_dir(const SynthClass& cls);

}  // namespace signcraft
