#include "signcraft/synth.hpp"

#include <cmath>
#include <cstdio>
#include <system_error>

#include "signcraft/errors.hpp"

namespace fs = std::filesystem;

namespace signcraft {

namespace {

constexpr double kBaseRadius = 14.0;
constexpr int kMaxShift = 4;
constexpr double kMaxScale = 0.15;

bool inside(SynthShape shape, double dx, double dy, double r) {
    const double ax = std::abs(dx), ay = std::abs(dy);
    switch (shape) {
        case SynthShape::Circle:
            return dx * dx + dy * dy <= r * r;
        case SynthShape::Square:
            return ax <= 0.8 * r && ay <= 0.8 * r;
        case SynthShape::Diamond:
            return ax + ay <= r;
        case SynthShape::Octagon:
            return ax <= 0.92 * r && ay <= 0.92 * r && ax + ay <= 1.3 * r;
        case SynthShape::Bar:
            return ax <= r && ay <= 0.3 * r;
        case SynthShape::Triangle: {
            // apex at dy = -r, base at dy = 0.7r, base half-width r
            if (dy < -r || dy > 0.7 * r) return false;
            return ax <= (dy + r) / 1.7;
        }
    }
    return false;
}

}  // namespace

std::string to_string(SynthShape shape) {
    switch (shape) {
        case SynthShape::Circle: return "circle";
        case SynthShape::Triangle: return "triangle";
        case SynthShape::Square: return "square";
        case SynthShape::Octagon: return "octagon";
        case SynthShape::Diamond: return "diamond";
        case SynthShape::Bar: return "bar";
    }
    return "unknown";
}

SynthShape parse_synth_shape(const std::string& name) {
    for (auto s : {SynthShape::Circle, SynthShape::Triangle, SynthShape::Square, SynthShape::Octagon,
                   SynthShape::Diamond, SynthShape::Bar})
        if (to_string(s) == name) return s;
    throw InvalidArgument("unknown synthetic shape '" + name + "'");
}

std::string synth_class_dir(const SynthClass& cls) {
    if (!cls.name.empty()) return cls.name;
    char hex[8];
    std::snprintf(hex, sizeof hex, "%02x%02x%02x", cls.color[0], cls.color[1], cls.color[2]);
    return to_string(cls.shape) + "_" + hex;
}

RawImage render_synth_image(const SynthClass& cls, Rng& rng) {
    RawImage img{kSynthSide, kSynthSide, std::vector<std::uint8_t>(kSynthSide * kSynthSide * 3)};
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));

    const double cx = kSynthSide / 2.0 + static_cast<double>(static_cast<int>(rng.below(2 * kMaxShift + 1)) - kMaxShift);
    const double cy = kSynthSide / 2.0 + static_cast<double>(static_cast<int>(rng.below(2 * kMaxShift + 1)) - kMaxShift);
    const double r = kBaseRadius * rng.uniform(1.0 - kMaxScale, 1.0 + kMaxScale);

    for (std::size_t y = 0; y < kSynthSide; ++y) {
        for (std::size_t x = 0; x < kSynthSide; ++x) {
            const double dx = static_cast<double>(x) + 0.5 - cx;
            const double dy = static_cast<double>(y) + 0.5 - cy;
            if (!inside(cls.shape, dx, dy, r)) continue;
            for (std::size_t c = 0; c < 3; ++c) img.at(x, y, c) = cls.color[c];
        }
    }
    return img;
}

void synth_generate(const std::vector<SynthClass>& classes, std::size_t per_class, Rng& rng,
                    const fs::path& out) {
    if (per_class < 1) throw InvalidArgument("per_class must be >= 1");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out.string());
    for (const SynthClass& cls : classes) {
        const fs::path dir = out / synth_class_dir(cls);
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
        for (std::size_t i = 0; i < per_class; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "img_%04zu.ppm", i);
            write_ppm(render_synth_image(cls, rng), dir / name);
        }
    }
}

std::vector<SynthClass> synth_preset_a() {
    return {
        {SynthShape::Circle, {220, 30, 30}, ""},   {SynthShape::Triangle, {30, 180, 40}, ""},
        {SynthShape::Square, {40, 60, 220}, ""},   {SynthShape::Octagon, {230, 210, 30}, ""},
        {SynthShape::Diamond, {200, 40, 200}, ""}, {SynthShape::Bar, {30, 200, 210}, ""},
    };
}

std::vector<SynthClass> synth_preset_b() {
    return {
        {SynthShape::Circle, {40, 60, 220}, ""},
        {SynthShape::Square, {220, 30, 30}, ""},
        {SynthShape::Triangle, {230, 210, 30}, ""},
        {SynthShape::Diamond, {30, 180, 40}, ""},
    };
}

}  // namespace signcraft
