#include "nsmi/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "nsmi/errors.hpp"

namespace nsmi::io {

static_assert(std::endian::native == std::endian::little, "f32le files assume a little-endian host");

namespace {

void write_f32(const std::filesystem::path& path, std::span<const double> values) {
    std::vector<float> buf(values.begin(), values.end());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<double> read_f32(const std::filesystem::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<float> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(float))) {
        throw IoError(path.string() + " holds fewer than " + std::to_string(count) + " float32 values");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw IoError(path.string() + " holds more data than its sidecar shape");
    }
    return {buf.begin(), buf.end()};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("missing sidecar " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed sidecar " + path.string() + ": " + e.what());
    }
}

std::pair<std::size_t, std::size_t> read_shape(const nlohmann::json& j, const std::string& where) {
    try {
        const auto& s = j.at("shape");
        if (!s.is_array() || s.size() != 2) throw IoError(where + ": shape must be [rows, cols]");
        return {s[0].get<std::size_t>(), s[1].get<std::size_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw IoError(where + ": " + e.what());
    }
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& data_path) {
    return std::filesystem::path(data_path.string() + ".json");
}

void write_image(const std::filesystem::path& path, const Image& img, const nlohmann::json& meta) {
    write_f32(path, img.data());
    nlohmann::json j = {{"kind", "image"},
                        {"shape", {img.height(), img.width()}},
                        {"range", to_string(img.range())},
                        {"dtype", "f32le"}};
    if (!meta.is_null()) j["meta"] = meta;
    write_json(sidecar_path(path), j);
}

Image read_image(const std::filesystem::path& path) {
    const auto j = read_json(sidecar_path(path));
    if (j.value("kind", "") != "image") throw IoError(path.string() + " is not an image file");
    const auto [h, w] = read_shape(j, path.string());
    ValueRange range = ValueRange::Unit;
    try {
        range = value_range_from_string(j.value("range", "unit"));
    } catch (const ParameterError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return Image(h, w, read_f32(path, h * w), range);
}

void write_sinogram(const std::filesystem::path& path, const Sinogram& sino,
                    std::size_t image_size, const nlohmann::json& meta) {
    write_f32(path, sino.data());
    nlohmann::json j = {{"kind", "sinogram"},
                        {"shape", {sino.n_angles(), sino.n_detectors()}},
                        {"angles", sino.angles()},
                        {"image_shape", {image_size, image_size}},
                        {"range", "unit"},
                        {"dtype", "f32le"}};
    if (!meta.is_null()) j["meta"] = meta;
    write_json(sidecar_path(path), j);
}

SinogramFile read_sinogram(const std::filesystem::path& path) {
    const auto j = read_json(sidecar_path(path));
    if (j.value("kind", "") != "sinogram") throw IoError(path.string() + " is not a sinogram file");
    const auto [a, d] = read_shape(j, path.string());
    SinogramFile f;
    try {
        auto angles = j.at("angles").get<std::vector<double>>();
        const auto& is = j.at("image_shape");
        f.image_size = is.at(0).get<std::size_t>();
        f.sinogram = Sinogram(a, d, read_f32(path, a * d), std::move(angles));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    f.meta = j.value("meta", nlohmann::json());
    return f;
}

}  // namespace nsmi::io
