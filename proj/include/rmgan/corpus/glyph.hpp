#pragma once

#include <cstdint>

#include "rmgan/autodiff/tensor.hpp"

namespace rmgan::corpus {

inline constexpr std::size_t kImageSize = 32;

struct GlyphStyle {
    double stroke_width = 2.2;  // pixels
    double scale = 0.92;        // fraction of the nominal glyph box
    double rotation_deg = 0.0;  // within [-10, 10]
    double offset_x = 0.0;      // pixels
    double offset_y = 0.0;
    double paint = 0.9;         // marking intensity
    double background = 0.3;    // mean road intensity

    // Draws every field from its documented range.
    static GlyphStyle sample(std::uint64_t seed);
    // Throws invalid_argument for values outside the ranges.
    void validate() const;
};

struct GlyphSpec {
    std::size_t class_id = 0;
    std::uint64_t seed = 0;
    GlyphStyle style;

    // Style drawn from the seed.
    static GlyphSpec from_seed(std::size_t class_id, std::uint64_t seed);
};

/// Renders a [1,32,32] image in [0,1]: stroke-font polylines and filled
/// arrowheads painted over a road texture. The background class gets a
/// rougher texture with stains and cracks and no marking. RIGHT is the
/// mirror image of LEFT rendered from the same spec.
ad::Tensor render_glyph(const GlyphSpec& spec);

}  // namespace rmgan::corpus
