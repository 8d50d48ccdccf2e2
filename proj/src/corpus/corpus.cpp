#include "rmgan/corpus/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "rmgan/common/error.hpp"
#include "rmgan/common/rng.hpp"
#include "rmgan/corpus/glyph.hpp"
#include "rmgan/corpus/image_io.hpp"

namespace fs = std::filesystem;

namespace rmgan::corpus {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) {
            return out;
        }
        start = tab + 1;
    }
}

[[noreturn]] void row_error(ErrorCode code, const fs::path& file, std::size_t line, const std::string& what) {
    throw Error(code, file.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& text, const fs::path& file, std::size_t line, const char* column) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        row_error(ErrorCode::malformed_row, file, line, std::string("bad ") + column + " '" + text + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& text, const fs::path& file, std::size_t line) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        row_error(ErrorCode::malformed_row, file, line, "bad seed '" + text + "'");
    }
    return v;
}

}  // namespace

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

std::optional<Split> parse_split(std::string_view text) {
    if (text == "train") {
        return Split::train;
    }
    if (text == "test") {
        return Split::test;
    }
    return std::nullopt;
}

ClassCounts CorpusIndex::counts() const {
    ClassCounts c{};
    for (const auto& r : rows) {
        ++c[r.label];
    }
    return c;
}

ClassCounts CorpusIndex::counts(Split split) const {
    ClassCounts c{};
    for (const auto& r : rows) {
        if (r.split == split) {
            ++c[r.label];
        }
    }
    return c;
}

std::vector<Split> stratified_split(std::span<const std::size_t> labels, std::uint64_t seed) {
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[labels[i]].push_back(i);
    }
    std::vector<Split> out(labels.size(), Split::test);
    for (auto& [label, rows] : by_class) {
        Rng rng(derive_seed(seed, {0x73706c74, label}));
        for (std::size_t i = rows.size(); i > 1; --i) {
            std::swap(rows[i - 1], rows[rng.below(i)]);
        }
        const auto n_train = static_cast<std::size_t>(std::lround(kTrainFraction * static_cast<double>(rows.size())));
        for (std::size_t i = 0; i < n_train; ++i) {
            out[rows[i]] = Split::train;
        }
    }
    return out;
}

CorpusIndex make_corpus(const ClassCounts& counts, const CorruptionParams& corruption, std::uint64_t seed,
                        const fs::path& out_dir) {
    corruption.validate();
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    if (ec || !fs::is_directory(out_dir / "images")) {
        throw Error(ErrorCode::unwritable_directory, "cannot create " + (out_dir / "images").string());
    }
    CorpusIndex index;
    index.root = out_dir;
    std::vector<std::size_t> labels;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        for (std::size_t i = 0; i < counts[k]; ++i) {
            char id[64];
            std::snprintf(id, sizeof id, "%s_%05zu", std::string(kClassNames[k]).c_str(), i);
            ManifestRow row;
            row.id = id;
            row.path = "images/" + row.id + ".pgm";
            row.label = k;
            row.corruption = corruption;
            row.seed = derive_seed(seed, {k, i});
            index.rows.push_back(std::move(row));
            labels.push_back(k);
        }
    }
    const auto splits = stratified_split(labels, seed);
    for (std::size_t i = 0; i < index.rows.size(); ++i) {
        auto& row = index.rows[i];
        row.split = splits[i];
        write_pgm(out_dir / row.path, render_glyph(GlyphSpec::from_seed(row.label, row.seed)));
    }
    write_manifest(index, out_dir / kManifestName);
    return index;
}

void write_manifest(const CorpusIndex& index, const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::unwritable_directory, "cannot create " + file.string());
    }
    out << kManifestHeader << '\n';
    for (const auto& r : index.rows) {
        out << r.id << '\t' << r.path << '\t' << kClassNames[r.label] << '\t' << to_string(r.split) << '\t'
            << format_double(r.corruption.blur_sigma) << '\t' << format_double(r.corruption.noise_sigma) << '\t'
            << format_double(r.corruption.perspective_strength) << '\t' << r.seed << '\n';
    }
    if (!out) {
        throw Error(ErrorCode::unwritable_directory, "write failed for " + file.string());
    }
}

CorpusIndex ingest_external(const fs::path& dir, const fs::path& manifest_file) {
    const fs::path file = manifest_file.is_absolute() ? manifest_file : dir / manifest_file;
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::missing_file, "cannot open manifest " + file.string());
    }
    CorpusIndex index;
    index.root = dir;
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> columns;
    std::size_t n_columns = 0;
    std::set<std::string> seen;
    bool have_split = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_tabs(line);
        if (columns.empty()) {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (!columns.emplace(fields[i], i).second) {
                    row_error(ErrorCode::malformed_row, file, line_no, "duplicate column '" + fields[i] + "'");
                }
            }
            for (const char* required : {"id", "path", "label"}) {
                if (!columns.count(required)) {
                    row_error(ErrorCode::malformed_row, file, line_no,
                              std::string("header lacks column '") + required + "'");
                }
            }
            n_columns = fields.size();
            have_split = columns.count("split") > 0;
            continue;
        }
        if (fields.size() != n_columns) {
            row_error(ErrorCode::malformed_row, file, line_no,
                      "expected " + std::to_string(n_columns) + " fields, got " + std::to_string(fields.size()));
        }
        auto field = [&](const char* name) -> const std::string* {
            const auto it = columns.find(name);
            return it == columns.end() ? nullptr : &fields[it->second];
        };
        ManifestRow row;
        row.id = *field("id");
        row.path = *field("path");
        if (row.id.empty() || row.path.empty()) {
            row_error(ErrorCode::malformed_row, file, line_no, "empty id or path");
        }
        if (!seen.insert(row.id).second) {
            row_error(ErrorCode::malformed_row, file, line_no, "duplicate id '" + row.id + "'");
        }
        const auto label = parse_label(*field("label"));
        if (!label) {
            row_error(ErrorCode::bad_label, file, line_no, "unknown label '" + *field("label") + "'");
        }
        row.label = *label;
        if (have_split) {
            const auto split = parse_split(*field("split"));
            if (!split) {
                row_error(ErrorCode::malformed_row, file, line_no, "bad split '" + *field("split") + "'");
            }
            row.split = *split;
        }
        if (const auto* v = field("blur_sigma")) row.corruption.blur_sigma = parse_double(*v, file, line_no, "blur_sigma");
        if (const auto* v = field("noise_sigma")) row.corruption.noise_sigma = parse_double(*v, file, line_no, "noise_sigma");
        if (const auto* v = field("perspective_strength")) {
            row.corruption.perspective_strength = parse_double(*v, file, line_no, "perspective_strength");
        }
        try {
            row.corruption.validate();
        } catch (const Error& e) {
            row_error(ErrorCode::malformed_row, file, line_no, e.what());
        }
        row.seed = field("seed") ? parse_u64(*field("seed"), file, line_no) : fnv1a(row.id);
        const fs::path image = dir / row.path;
        if (!fs::is_regular_file(image)) {
            row_error(ErrorCode::missing_file, file, line_no, "image " + image.string() + " not found");
        }
        index.rows.push_back(std::move(row));
    }
    if (!have_split && !index.rows.empty()) {
        std::vector<std::size_t> labels;
        for (const auto& r : index.rows) labels.push_back(r.label);
        const auto splits = stratified_split(labels, 0);
        for (std::size_t i = 0; i < splits.size(); ++i) index.rows[i].split = splits[i];
    }
    return index;
}

LabeledSample load_sample(const CorpusIndex& index, const ManifestRow& row) {
    const ad::Tensor clean = resize_bilinear(read_pgm(index.root / row.path), kImageSize);
    return LabeledSample{row.id, clean, corrupt(clean, row.corruption, row.seed), row.label, is_positive(row.label)};
}

std::vector<LabeledSample> load_samples(const CorpusIndex& index, std::optional<Split> split) {
    std::vector<LabeledSample> out;
    for (const auto& row : index.rows) {
        if (!split || row.split == *split) {
            out.push_back(load_sample(index, row));
        }
    }
    return out;
}

ad::Tensor stack_images(std::span<const LabeledSample> samples, std::span<const std::size_t> rows, View view) {
    ad::Shape shape{rows.size()};
    std::vector<double> data;
    for (std::size_t r : rows) {
        const auto& t = view == View::clean ? samples[r].clean : samples[r].corrupted;
        if (shape.size() == 1) {
            shape.insert(shape.end(), t.shape().begin(), t.shape().end());
        } else if (!std::equal(shape.begin() + 1, shape.end(), t.shape().begin(), t.shape().end())) {
            throw Error(ErrorCode::shape_mismatch, "sample " + samples[r].id + " is " + ad::shape_to_string(t.shape()));
        }
        data.insert(data.end(), t.data().begin(), t.data().end());
    }
    return ad::Tensor(std::move(shape), std::move(data));
}

}  // namespace rmgan::corpus
