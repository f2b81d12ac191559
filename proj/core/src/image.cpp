#include "signcraft/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "signcraft/errors.hpp"

namespace signcraft {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::size_t read_number(const char* what) {
        skip_space_and_comments();
        std::size_t value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > (1u << 24)) throw FormatError(std::string("PPM ") + what + " is too large");
            ++pos_;
            ++digits;
        }
        if (digits == 0) throw FormatError(std::string("PPM header: missing ") + what);
        return value;
    }

    std::size_t pos() const { return pos_; }
    void advance(std::size_t n) { pos_ += n; }
    bool at_end() const { return pos_ >= bytes_.size(); }
    std::uint8_t peek() const { return bytes_[pos_]; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

RawImage decode_ppm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw FormatError("not a binary PPM (expected magic P6)");
    HeaderReader reader(bytes);
    reader.advance(2);
    if (reader.at_end() || !(std::isspace(reader.peek()) || reader.peek() == '#'))
        throw FormatError("PPM header: expected whitespace after magic");
    const std::size_t width = reader.read_number("width");
    const std::size_t height = reader.read_number("height");
    const std::size_t maxval = reader.read_number("maxval");
    if (width == 0 || height == 0) throw FormatError("PPM header: zero image dimension");
    if (maxval != 255)
        throw UnsupportedError("PPM maxval " + std::to_string(maxval) + " is not supported (need 255)");
    if (reader.at_end() || !std::isspace(reader.peek()))
        throw CorruptError("PPM header: missing whitespace before pixel data");
    reader.advance(1);

    const std::size_t need = width * height * 3;
    const std::size_t have = bytes.size() - reader.pos();
    if (have < need)
        throw CorruptError("PPM pixel data truncated: " + std::to_string(have) + " of " +
                           std::to_string(need) + " bytes");
    RawImage image{width, height, {}};
    image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos()),
                        bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos() + need));
    return image;
}

RawImage read_ppm(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_ppm(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    } catch (const UnsupportedError& e) {
        throw UnsupportedError(path.string() + ": " + e.what());
    } catch (const CorruptError& e) {
        throw CorruptError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_ppm(const RawImage& image) {
    if (image.pixels.size() != image.width * image.height * 3)
        throw ShapeError("image pixel buffer does not match its dimensions");
    const std::string header =
        "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    return out;
}

void write_ppm(const RawImage& image, const std::filesystem::path& path) {
    const auto bytes = encode_ppm(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

RawImage resize_bilinear(const RawImage& image, std::size_t out_w, std::size_t out_h) {
    if (image.width == 0 || image.height == 0) throw ShapeError("cannot resize an empty image");
    if (out_w == 0 || out_h == 0) throw ShapeError("resize target must be non-empty");
    if (image.width == out_w && image.height == out_h) return image;

    const double sx = static_cast<double>(image.width) / static_cast<double>(out_w);
    const double sy = static_cast<double>(image.height) / static_cast<double>(out_h);
    const auto max_x = static_cast<double>(image.width - 1);
    const auto max_y = static_cast<double>(image.height - 1);

    RawImage out{out_w, out_h, std::vector<std::uint8_t>(out_w * out_h * 3)};
    for (std::size_t y = 0; y < out_h; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, image.height - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < out_w; ++x) {
            const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, image.width - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < 3; ++c) {
                const double top = image.at(x0, y0, c) * (1.0 - wx) + image.at(x1, y0, c) * wx;
                const double bottom = image.at(x0, y1, c) * (1.0 - wx) + image.at(x1, y1, c) * wx;
                const double v = top * (1.0 - wy) + bottom * wy;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

Tensor normalize(const RawImage& image) {
    if (image.pixels.size() != image.width * image.height * 3)
        throw ShapeError("image pixel buffer does not match its dimensions");
    Tensor t({3, image.height, image.width});
    const std::size_t plane = image.width * image.height;
    for (std::size_t p = 0; p < plane; ++p)
        for (std::size_t c = 0; c < 3; ++c)
            t[c * plane + p] =
                static_cast<float>((static_cast<double>(image.pixels[p * 3 + c]) / 255.0 - 0.5) / 0.5);
    return t;
}

Tensor load_image_tensor(const std::filesystem::path& path) {
    return normalize(resize_bilinear(read_ppm(path)));
}

}  // namespace signcraft
