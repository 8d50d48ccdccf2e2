#include "rmgan/corpus/glyph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "rmgan/common/error.hpp"
#include "rmgan/common/rng.hpp"
#include "rmgan/corpus/labels.hpp"

namespace rmgan::corpus {

namespace {

struct Point {
    double x;
    double y;
};

struct Stroke {
    std::vector<Point> points;
    bool filled = false;  // closed polygon painted solid
};

using Strokes = std::vector<Stroke>;

// Stroke font in a unit cell, x right and y down.
Strokes letter(char c) {
    switch (c) {
        case 'S':
            return {{{{1, .1}, {.8, 0}, {.2, 0}, {0, .15}, {0, .35}, {.2, .5}, {.8, .5}, {1, .65}, {1, .85}, {.8, 1},
                      {.2, 1}, {0, .9}}}};
        case 'T':
            return {{{{0, 0}, {1, 0}}}, {{{.5, 0}, {.5, 1}}}};
        case 'O':
        case '0':
            return {{{{.2, 0}, {.8, 0}, {1, .2}, {1, .8}, {.8, 1}, {.2, 1}, {0, .8}, {0, .2}, {.2, 0}}}};
        case 'P':
            return {{{{0, 1}, {0, 0}, {.8, 0}, {1, .15}, {1, .4}, {.8, .55}, {0, .55}}}};
        case 'E':
            return {{{{1, 0}, {0, 0}, {0, 1}, {1, 1}}}, {{{0, .5}, {.75, .5}}}};
        case 'D':
            return {{{{0, 0}, {0, 1}, {.6, 1}, {1, .7}, {1, .3}, {.6, 0}, {0, 0}}}};
        case 'X':
            return {{{{0, 0}, {1, 1}}}, {{{1, 0}, {0, 1}}}};
        case 'I':
            return {{{{.5, 0}, {.5, 1}}}, {{{.2, 0}, {.8, 0}}}, {{{.2, 1}, {.8, 1}}}};
        case 'N':
            return {{{{0, 1}, {0, 0}, {1, 1}, {1, 0}}}};
        case 'G':
            return {{{{1, .15}, {.8, 0}, {.2, 0}, {0, .2}, {0, .8}, {.2, 1}, {.8, 1}, {1, .8}, {1, .55}, {.55, .55}}}};
        case 'R':
            return {{{{0, 1}, {0, 0}, {.8, 0}, {1, .15}, {1, .4}, {.8, .55}, {0, .55}}}, {{{.45, .55}, {1, 1}}}};
        case 'A':
            return {{{{0, 1}, {.5, 0}, {1, 1}}}, {{{.25, .55}, {.75, .55}}}};
        case 'L':
            return {{{{0, 0}, {0, 1}, {1, 1}}}};
        case '3':
            return {{{{0, .1}, {.2, 0}, {.8, 0}, {1, .15}, {1, .35}, {.8, .5}, {.35, .5}}},
                    {{{.8, .5}, {1, .65}, {1, .85}, {.8, 1}, {.2, 1}, {0, .9}}}};
        case '5':
            return {{{{1, 0}, {0, 0}, {0, .45}, {.75, .45}, {1, .62}, {1, .85}, {.8, 1}, {.2, 1}, {0, .9}}}};
        case '4':
            return {{{{.75, 1}, {.75, 0}, {0, .65}, {1, .65}}}};
        default:
            throw Error(ErrorCode::invalid_argument, std::string("no stroke for character ") + c);
    }
}

// Places a unit-cell letter into the box [x0,x1] x [y0,y1] of glyph space.
void place(Strokes& out, char c, double x0, double y0, double x1, double y1) {
    for (Stroke s : letter(c)) {
        for (Point& p : s.points) {
            p = {x0 + p.x * (x1 - x0), y0 + p.y * (y1 - y0)};
        }
        out.push_back(std::move(s));
    }
}

// Two letters over two, in glyph space [-1,1]^2.
Strokes two_by_two(const char* word) {
    Strokes s;
    place(s, word[0], -.85, -.9, -.12, -.1);
    place(s, word[1], .12, -.9, .85, -.1);
    place(s, word[2], -.85, .1, -.12, .9);
    place(s, word[3], .12, .1, .85, .9);
    return s;
}

Strokes glyph_strokes(std::size_t class_id) {
    Strokes s;
    switch (class_id) {
        case 0:  // 35
            place(s, '3', -.85, -.9, -.1, .9);
            place(s, '5', .1, -.9, .85, .9);
            return s;
        case 1:  // 40
            place(s, '4', -.85, -.9, -.1, .9);
            place(s, '0', .1, -.9, .85, .9);
            return s;
        case 2:  // FORWARD
            s.push_back({{{0, .95}, {0, -.2}}});
            s.push_back({{{-.5, -.2}, {0, -.95}, {.5, -.2}, {-.5, -.2}}, true});
            return s;
        case 3:  // LEFT; RIGHT is rendered as its mirror image
            s.push_back({{{.4, .95}, {.4, .05}, {.3, -.25}, {.05, -.4}, {-.25, -.4}}});
            s.push_back({{{-.25, -.8}, {-.9, -.4}, {-.25, 0}, {-.25, -.8}}, true});
            return s;
        case 4:  // PED
            place(s, 'P', -.85, -.9, -.12, -.1);
            place(s, 'E', .12, -.9, .85, -.1);
            place(s, 'D', -.36, .1, .36, .9);
            return s;
        case 5:
            return two_by_two("RAIL");
        case 7:
            return two_by_two("STOP");
        case 8:
            return two_by_two("XING");
        default:
            throw Error(ErrorCode::invalid_argument, "no strokes for class " + std::to_string(class_id));
    }
}

double segment_distance(Point p, Point a, Point b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
    return std::sqrt(ex * ex + ey * ey);
}

bool inside(Point p, const std::vector<Point>& poly) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Point a = poly[i], b = poly[j];
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
            in = !in;
        }
    }
    return in;
}

// Smooth road surface shared by a glyph and its background counterpart.
std::vector<double> road(const GlyphStyle& style, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x726f6164}));
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double tilt = rng.uniform(0.0, 0.03);
    const double c = std::cos(angle), s = std::sin(angle);
    std::vector<double> img(kImageSize * kImageSize);
    const double half = kImageSize / 2.0;
    for (std::size_t y = 0; y < kImageSize; ++y) {
        for (std::size_t x = 0; x < kImageSize; ++x) {
            const double u = ((x + 0.5 - half) * c + (y + 0.5 - half) * s) / half;
            img[y * kImageSize + x] = style.background + tilt * u + rng.normal(0.0, 0.01);
        }
    }
    return img;
}

// Stains, cracks and coarse grain: darkening only, so a background patch is
// never brighter on average than the marking drawn over the same road.
void add_clutter(std::vector<double>& img, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x636c7574}));
    const std::size_t n = kImageSize;
    const std::size_t stains = 2 + rng.below(4);
    for (std::size_t k = 0; k < stains; ++k) {
        const double cx = rng.uniform(0, n), cy = rng.uniform(0, n);
        const double r = rng.uniform(2.0, 6.0), depth = rng.uniform(0.05, 0.15);
        for (std::size_t y = 0; y < n; ++y) {
            for (std::size_t x = 0; x < n; ++x) {
                const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
                img[y * n + x] -= depth * std::exp(-(dx * dx + dy * dy) / (2 * r * r));
            }
        }
    }
    const std::size_t cracks = 1 + rng.below(3);
    for (std::size_t k = 0; k < cracks; ++k) {
        double x = rng.uniform(0, n), y = rng.uniform(0, n);
        double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double depth = rng.uniform(0.1, 0.2);
        const std::size_t steps = 12 + rng.below(19);
        for (std::size_t i = 0; i < steps; ++i) {
            if (x >= 0 && y >= 0 && x < n && y < n) {
                img[static_cast<std::size_t>(y) * n + static_cast<std::size_t>(x)] -= depth;
            }
            heading += rng.normal(0.0, 0.35);
            x += std::cos(heading);
            y += std::sin(heading);
        }
    }
    for (double& v : img) {
        v += rng.normal(0.0, 0.04);
    }
}

ad::Tensor finish(std::vector<double> img) {
    for (double& v : img) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return ad::Tensor({1, kImageSize, kImageSize}, std::move(img));
}

ad::Tensor mirror(const ad::Tensor& img) {
    std::vector<double> out(img.numel());
    const auto d = img.data();
    for (std::size_t y = 0; y < kImageSize; ++y) {
        for (std::size_t x = 0; x < kImageSize; ++x) {
            out[y * kImageSize + x] = d[y * kImageSize + (kImageSize - 1 - x)];
        }
    }
    return ad::Tensor({1, kImageSize, kImageSize}, std::move(out));
}

}  // namespace

GlyphStyle GlyphStyle::sample(std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x7374796c}));
    GlyphStyle s;
    s.stroke_width = rng.uniform(1.8, 2.6);
    s.scale = rng.uniform(0.85, 1.0);
    s.rotation_deg = rng.uniform(-10.0, 10.0);
    s.offset_x = rng.uniform(-1.5, 1.5);
    s.offset_y = rng.uniform(-1.5, 1.5);
    s.paint = rng.uniform(0.75, 0.95);
    s.background = rng.uniform(0.15, 0.4);
    return s;
}

void GlyphStyle::validate() const {
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in(stroke_width, 0.5, 6.0) || !in(scale, 0.3, 1.2) || !in(rotation_deg, -10.0, 10.0) ||
        !in(offset_x, -4.0, 4.0) || !in(offset_y, -4.0, 4.0) || !in(paint, 0.0, 1.0) || !in(background, 0.0, 1.0) ||
        !(paint > background)) {
        throw Error(ErrorCode::invalid_argument, "glyph style out of range");
    }
}

GlyphSpec GlyphSpec::from_seed(std::size_t class_id, std::uint64_t seed) {
    return GlyphSpec{class_id, seed, GlyphStyle::sample(seed)};
}

ad::Tensor render_glyph(const GlyphSpec& spec) {
    if (spec.class_id >= kNumClasses) {
        throw Error(ErrorCode::label_out_of_range, "class " + std::to_string(spec.class_id));
    }
    const GlyphStyle& st = spec.style;
    st.validate();
    if (spec.class_id == 6) {  // RIGHT
        GlyphSpec left = spec;
        left.class_id = 3;
        return mirror(render_glyph(left));
    }
    std::vector<double> img = road(st, spec.seed);
    if (spec.class_id == kNullClass) {
        add_clutter(img, spec.seed);
        return finish(std::move(img));
    }

    const Strokes strokes = glyph_strokes(spec.class_id);
    const double half = 14.0 * st.scale;  // pixels per glyph unit
    const double theta = st.rotation_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double centre = kImageSize / 2.0;
    for (std::size_t y = 0; y < kImageSize; ++y) {
        for (std::size_t x = 0; x < kImageSize; ++x) {
            // Pixel centre back to glyph space.
            const double px = x + 0.5 - centre - st.offset_x;
            const double py = y + 0.5 - centre - st.offset_y;
            const Point g{(c * px + s * py) / half, (-s * px + c * py) / half};
            double coverage = 0.0;
            for (const Stroke& stroke : strokes) {
                if (stroke.filled && inside(g, stroke.points)) {
                    coverage = 1.0;
                    break;
                }
                double d = 1e9;
                for (std::size_t i = 0; i + 1 < stroke.points.size(); ++i) {
                    d = std::min(d, segment_distance(g, stroke.points[i], stroke.points[i + 1]));
                }
                coverage = std::max(coverage, std::clamp(st.stroke_width / 2 + 0.5 - d * half, 0.0, 1.0));
            }
            double& v = img[y * kImageSize + x];
            v = v * (1.0 - coverage) + st.paint * coverage;
        }
    }
    return finish(std::move(img));
}

}  // namespace rmgan::corpus
