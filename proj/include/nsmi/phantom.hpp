#pragma once

#include <cstdint>
#include <vector>

#include "nsmi/image.hpp"

namespace nsmi {

/// Ellipse on the [-1, 1]^2 field of view. `angle_deg` rotates the x semi-axis
/// counter-clockwise; `intensity` is added to every point inside.
struct Ellipse {
    double intensity;
    double semi_x;
    double semi_y;
    double center_x;
    double center_y;
    double angle_deg;
};

/// Modified (high-contrast) Shepp-Logan ellipse table.
std::vector<Ellipse> shepp_logan_ellipses();

struct PhantomSpec {
    std::size_t size = 64;
    std::vector<Ellipse> ellipses = shepp_logan_ellipses();
    std::uint64_t seed = 0;
    /// Scale of the random perturbation; 0 renders the ellipses unchanged.
    double jitter = 1.0;
};

/// Renders ellipses with 4x4 supersampling per pixel, clamping each
/// subsample to [0, 1].
Image render_ellipses(std::size_t n, const std::vector<Ellipse>& ellipses);

Image shepp_logan(std::size_t n);

/// Deterministic perturbation of spec.ellipses driven by spec.seed.
Image random_phantom(const PhantomSpec& spec);

/// `count` random phantoms with seeds first_seed, first_seed + 1, ...
std::vector<Image> phantom_family(std::size_t size, int count, std::uint64_t first_seed);

/// Synthetic guidance image for x: non-monotone intensity remap
/// r(v) = 1.8 v - 1.2 v^2 followed by a smooth seeded displacement field of
/// about one pixel per 64 pixels of image size.
Image make_condition_pair(const Image& x, std::uint64_t seed);

}  // namespace nsmi
