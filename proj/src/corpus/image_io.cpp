#include "rmgan/corpus/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "rmgan/common/error.hpp"

namespace rmgan::corpus {

namespace {

std::pair<std::size_t, std::size_t> image_hw(const ad::Tensor& image) {
    if (image.rank() == 3 && image.dim(0) == 1) {
        return {image.dim(1), image.dim(2)};
    }
    if (image.rank() == 2) {
        return {image.dim(0), image.dim(1)};
    }
    throw Error(ErrorCode::shape_mismatch, "expected a [1,H,W] image, got " + ad::shape_to_string(image.shape()));
}

// Next header token, skipping whitespace and # comments.
std::string next_token(std::istream& in, const std::string& where) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) {
                return tok;
            }
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) {
        throw Error(ErrorCode::corrupt_file, where + ": truncated PGM header");
    }
    return tok;
}

std::size_t header_number(std::istream& in, const std::string& where) {
    const std::string tok = next_token(in, where);
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
        tok.size() > 9) {
        throw Error(ErrorCode::corrupt_file, where + ": bad PGM header field '" + tok + "'");
    }
    return std::stoul(tok);
}

}  // namespace

std::vector<std::uint8_t> quantize(const ad::Tensor& image) {
    std::vector<std::uint8_t> out(image.numel());
    const auto d = image.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(d[i], 0.0, 1.0) * 255.0));
    }
    return out;
}

ad::Tensor quantized(const ad::Tensor& image) {
    const auto bytes = quantize(image);
    std::vector<double> v(bytes.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = bytes[i] / 255.0;
    }
    return ad::Tensor(image.shape(), std::move(v));
}

void write_pgm(const std::filesystem::path& path, const ad::Tensor& image) {
    const auto [h, w] = image_hw(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::unwritable_directory, "cannot create " + path.string());
    }
    out << "P5\n" << w << " " << h << "\n255\n";
    const auto bytes = quantize(image);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorCode::unwritable_directory, "write failed for " + path.string());
    }
}

ad::Tensor read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::missing_file, "cannot open " + path.string());
    }
    const std::string where = path.string();
    const std::string magic = next_token(in, where);
    if (magic != "P5" && magic != "P2") {
        throw Error(ErrorCode::corrupt_file, where + ": not a PGM file (magic '" + magic + "')");
    }
    const std::size_t w = header_number(in, where);
    const std::size_t h = header_number(in, where);
    const std::size_t maxval = header_number(in, where);
    if (w == 0 || h == 0 || w > 1 << 14 || h > 1 << 14 || maxval == 0 || maxval > 65535) {
        throw Error(ErrorCode::corrupt_file, where + ": bad PGM dimensions or maxval");
    }
    std::vector<double> v(w * h);
    if (magic == "P2") {
        for (double& x : v) {
            const std::size_t level = header_number(in, where);
            if (level > maxval) {
                throw Error(ErrorCode::corrupt_file, where + ": sample exceeds maxval");
            }
            x = static_cast<double>(level) / static_cast<double>(maxval);
        }
    } else {
        const std::size_t bpp = maxval < 256 ? 1 : 2;
        std::vector<unsigned char> raw(w * h * bpp);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
            throw Error(ErrorCode::corrupt_file, where + ": truncated pixel data");
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::size_t level = bpp == 1 ? raw[i] : (std::size_t{raw[2 * i]} << 8) | raw[2 * i + 1];
            if (level > maxval) {
                throw Error(ErrorCode::corrupt_file, where + ": sample exceeds maxval");
            }
            v[i] = static_cast<double>(level) / static_cast<double>(maxval);
        }
    }
    return ad::Tensor({1, h, w}, std::move(v));
}

ad::Tensor resize_bilinear(const ad::Tensor& image, std::size_t size) {
    const auto [h, w] = image_hw(image);
    if (h == size && w == size) {
        return ad::Tensor({1, size, size}, std::vector<double>(image.data().begin(), image.data().end()));
    }
    const auto d = image.data();
    std::vector<double> out(size * size);
    const double sy = static_cast<double>(h) / size, sx = static_cast<double>(w) / size;
    for (std::size_t y = 0; y < size; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
        const std::size_t y0 = static_cast<std::size_t>(fy), y1 = std::min(y0 + 1, h - 1);
        const double ty = fy - y0;
        for (std::size_t x = 0; x < size; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
            const std::size_t x0 = static_cast<std::size_t>(fx), x1 = std::min(x0 + 1, w - 1);
            const double tx = fx - x0;
            const double top = d[y0 * w + x0] * (1 - tx) + d[y0 * w + x1] * tx;
            const double bottom = d[y1 * w + x0] * (1 - tx) + d[y1 * w + x1] * tx;
            out[y * size + x] = top * (1 - ty) + bottom * ty;
        }
    }
    return ad::Tensor({1, size, size}, std::move(out));
}

ad::Tensor hstack(std::span<const ad::Tensor> panels) {
    if (panels.empty()) {
        throw Error(ErrorCode::invalid_argument, "hstack: no panels");
    }
    const std::size_t h = image_hw(panels[0]).first;
    std::size_t total_w = 0;
    for (const auto& p : panels) {
        const auto [ph, pw] = image_hw(p);
        if (ph != h) {
            throw Error(ErrorCode::shape_mismatch, "hstack: panel heights differ");
        }
        total_w += pw;
    }
    total_w += panels.size() - 1;
    std::vector<double> out(h * total_w, 1.0);
    std::size_t x0 = 0;
    for (const auto& p : panels) {
        const std::size_t pw = image_hw(p).second;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < pw; ++x) {
                out[y * total_w + x0 + x] = p.data()[y * pw + x];
            }
        }
        x0 += pw + 1;
    }
    return ad::Tensor({1, h, total_w}, std::move(out));
}

}  // namespace rmgan::corpus
