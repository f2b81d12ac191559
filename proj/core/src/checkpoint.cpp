#include "signcraft/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>

#include <nlohmann/json.hpp>

#include "signcraft/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace signcraft {

namespace {

constexpr std::size_t kPrefixSize = 16;
constexpr std::size_t kCrcSize = 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
    return v;
}

json layer_to_json(const LayerSpec& spec) {
    json j;
    j["kind"] = layer_kind(spec);
    if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
        j["in_channels"] = c->in_channels;
        j["out_channels"] = c->out_channels;
        j["kernel_h"] = c->kernel_h;
        j["kernel_w"] = c->kernel_w;
        j["padding"] = "valid";
    } else if (const auto* d = std::get_if<DenseSpec>(&spec)) {
        j["in_features"] = d->in_features;
        j["out_features"] = d->out_features;
    } else if (const auto* r = std::get_if<DropoutSpec>(&spec)) {
        j["rate"] = r->rate;
    }
    return j;
}

LayerSpec layer_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "conv2d") {
        if (j.value("padding", "valid") != "valid")
            throw CorruptError("unsupported conv padding in checkpoint");
        return Conv2DSpec{j.at("in_channels").get<std::size_t>(), j.at("out_channels").get<std::size_t>(),
                          j.at("kernel_h").get<std::size_t>(), j.at("kernel_w").get<std::size_t>()};
    }
    if (kind == "max_pooling2d") return MaxPool2x2Spec{};
    if (kind == "relu") return ReLUSpec{};
    if (kind == "dropout") return DropoutSpec{j.at("rate").get<double>()};
    if (kind == "flatten") return FlattenSpec{};
    if (kind == "dense")
        return DenseSpec{j.at("in_features").get<std::size_t>(), j.at("out_features").get<std::size_t>()};
    if (kind == "softmax") return SoftmaxSpec{};
    throw CorruptError("unknown layer kind '" + kind + "' in checkpoint");
}

struct ManifestEntry {
    std::string name;
    Shape shape;
};

const char* const kSlotNames[] = {"weight", "bias"};

// params first, then first moments, then second moments, per layer
std::vector<ManifestEntry> expected_manifest(const ModelSpec& spec) {
    std::vector<ManifestEntry> manifest;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto shapes = param_shapes(spec.layers[i]);
        const std::string prefix = "layer" + std::to_string(i) + ".";
        for (const char* suffix : {"", ".adam_m", ".adam_v"})
            for (std::size_t p = 0; p < shapes.size(); ++p)
                manifest.push_back({prefix + kSlotNames[p] + suffix, shapes[p]});
    }
    return manifest;
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = ::crc32(crc, bytes.data() + pos, chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
    const Model& model = ckpt.model;
    const ModelSpec& spec = model.spec();
    if (ckpt.class_names.size() != spec.class_count)
        throw InvalidArgument("checkpoint has " + std::to_string(ckpt.class_names.size()) +
                              " class names for a " + std::to_string(spec.class_count) + "-way head");

    json header;
    json layers = json::array();
    for (const LayerSpec& l : spec.layers) layers.push_back(layer_to_json(l));
    header["model_spec"] = {{"input_shape", spec.input_shape},
                            {"class_count", spec.class_count},
                            {"layers", std::move(layers)}};
    header["class_names"] = ckpt.class_names;
    header["normalization_id"] = ckpt.normalization_id;
    header["step_counter"] = model.step();
    json frozen = json::array();
    for (const LayerState& s : model.states()) frozen.push_back(s.frozen);
    header["frozen"] = std::move(frozen);
    json manifest = json::array();
    for (const auto& e : expected_manifest(spec)) manifest.push_back({{"name", e.name}, {"shape", e.shape}});
    header["tensors"] = std::move(manifest);
    const std::string header_text = header.dump();

    std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out.insert(out.end(), header_text.begin(), header_text.end());

    auto put_tensors = [&](const std::vector<Tensor>& tensors) {
        for (const Tensor& t : tensors)
            for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    };
    for (const LayerState& s : model.states()) {
        put_tensors(s.params);
        put_tensors(s.adam_m);
        put_tensors(s.adam_v);
    }
    put_u32(out, crc32(out));
    return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof kCheckpointMagic ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
        throw FormatError("not a signcraft checkpoint (bad magic)");
    if (bytes.size() < kPrefixSize + kCrcSize) throw CorruptError("checkpoint truncated in prefix");
    const std::uint32_t version = get_u32(bytes, 8);
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t header_len = get_u32(bytes, 12);
    if (header_len > bytes.size() - kPrefixSize - kCrcSize)
        throw CorruptError("checkpoint truncated in header");

    Checkpoint ckpt;
    ModelSpec spec;
    std::vector<ManifestEntry> manifest;
    std::vector<bool> frozen;
    std::uint64_t step = 0;
    try {
        const auto* first = reinterpret_cast<const char*>(bytes.data() + kPrefixSize);
        const json header = json::parse(first, first + header_len);
        const json& ms = header.at("model_spec");
        spec.input_shape = ms.at("input_shape").get<Shape>();
        spec.class_count = ms.at("class_count").get<std::size_t>();
        for (const json& l : ms.at("layers")) spec.layers.push_back(layer_from_json(l));
        ckpt.class_names = header.at("class_names").get<std::vector<std::string>>();
        ckpt.normalization_id = header.at("normalization_id").get<std::string>();
        step = header.at("step_counter").get<std::uint64_t>();
        frozen = header.at("frozen").get<std::vector<bool>>();
        for (const json& t : header.at("tensors"))
            manifest.push_back({t.at("name").get<std::string>(), t.at("shape").get<Shape>()});
    } catch (const json::exception& e) {
        throw CorruptError(std::string("checkpoint header is unreadable: ") + e.what());
    }

    try {
        validate_model_spec(spec);
    } catch (const Error& e) {
        throw CorruptError(std::string("checkpoint architecture is invalid: ") + e.what());
    }
    if (ckpt.class_names.size() != spec.class_count)
        throw CorruptError("checkpoint class names do not match the head size");
    if (frozen.size() != spec.layers.size())
        throw CorruptError("checkpoint frozen flags do not match the layer count");

    const auto expected = expected_manifest(spec);
    if (manifest.size() != expected.size())
        throw CorruptError("checkpoint tensor manifest lists " + std::to_string(manifest.size()) +
                           " tensors, architecture needs " + std::to_string(expected.size()));
    std::size_t payload_floats = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (manifest[i].name != expected[i].name || manifest[i].shape != expected[i].shape)
            throw CorruptError("checkpoint tensor '" + manifest[i].name + "' " +
                               shape_to_string(manifest[i].shape) + " does not match architecture (" +
                               expected[i].name + " " + shape_to_string(expected[i].shape) + ")");
        payload_floats += shape_size(expected[i].shape);
    }

    const std::size_t payload_start = kPrefixSize + header_len;
    const std::size_t expected_size = payload_start + payload_floats * 4 + kCrcSize;
    if (bytes.size() < expected_size)
        throw CorruptError("checkpoint payload truncated: " + std::to_string(bytes.size()) + " of " +
                           std::to_string(expected_size) + " bytes");
    if (bytes.size() > expected_size)
        throw CorruptError("checkpoint has " + std::to_string(bytes.size() - expected_size) +
                           " unexpected trailing bytes");
    const std::uint32_t stored_crc = get_u32(bytes, expected_size - kCrcSize);
    if (crc32(bytes.first(expected_size - kCrcSize)) != stored_crc)
        throw ChecksumError("checkpoint CRC32 mismatch");

    std::size_t cursor = payload_start;
    auto take = [&](const Shape& shape) {
        Tensor t(shape);
        for (float& v : t.data()) {
            v = std::bit_cast<float>(get_u32(bytes, cursor));
            cursor += 4;
        }
        return t;
    };
    std::vector<LayerState> states;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto shapes = param_shapes(spec.layers[i]);
        LayerState st;
        for (const auto& s : shapes) st.params.push_back(take(s));
        for (const auto& s : shapes) st.adam_m.push_back(take(s));
        for (const auto& s : shapes) st.adam_v.push_back(take(s));
        st.frozen = frozen[i];
        states.push_back(std::move(st));
    }
    ckpt.model = Model(std::move(spec), std::move(states), step);
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
    const auto bytes = encode_checkpoint(ckpt);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write checkpoint " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move checkpoint into place at " + path.string());
    }
}

Checkpoint load_checkpoint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                          std::istreambuf_iterator<char>()};
    return decode_checkpoint(bytes);
}

}  // namespace signcraft
