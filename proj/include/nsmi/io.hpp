#pragma once

#include <filesystem>

#include "json.hpp"

#include "nsmi/image.hpp"

namespace nsmi::io {

// On-disk arrays are raw little-endian float32 in row-major order, with a
// JSON sidecar at "<path>.json":
//   {"kind": "image", "shape": [H, W], "range": "unit", "dtype": "f32le"}
//   {"kind": "sinogram", "shape": [A, D], "angles": [...], "image_shape": [n, n], ...}
// An optional "meta" object carries free-form provenance.

std::filesystem::path sidecar_path(const std::filesystem::path& data_path);

void write_image(const std::filesystem::path& path, const Image& img,
                 const nlohmann::json& meta = nullptr);
Image read_image(const std::filesystem::path& path);

/// `image_size` records the reconstruction grid the sinogram was simulated for.
void write_sinogram(const std::filesystem::path& path, const Sinogram& sino,
                    std::size_t image_size, const nlohmann::json& meta = nullptr);

struct SinogramFile {
    Sinogram sinogram;
    std::size_t image_size = 0;
    nlohmann::json meta;
};
SinogramFile read_sinogram(const std::filesystem::path& path);

}  // namespace nsmi::io
