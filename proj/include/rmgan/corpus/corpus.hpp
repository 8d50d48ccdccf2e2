#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmgan/autodiff/tensor.hpp"
#include "rmgan/corpus/corrupt.hpp"
#include "rmgan/corpus/labels.hpp"

namespace rmgan::corpus {

enum class Split { train, test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

inline constexpr double kTrainFraction = 0.6;
inline constexpr const char* kManifestName = "manifest.tsv";
inline constexpr const char* kManifestHeader =
    "id\tpath\tlabel\tsplit\tblur_sigma\tnoise_sigma\tperspective_strength\tseed";

struct ManifestRow {
    std::string id;
    std::string path;  // relative to the corpus root
    std::size_t label = 0;
    Split split = Split::train;
    CorruptionParams corruption;
    std::uint64_t seed = 0;  // drives rendering and corruption
};

struct CorpusIndex {
    std::filesystem::path root;
    std::vector<ManifestRow> rows;

    ClassCounts counts() const;
    ClassCounts counts(Split split) const;
};

/// One training/evaluation example: clean X, corrupted X~ and the label.
struct LabeledSample {
    std::string id;
    ad::Tensor clean;      // [1,32,32] in [0,1]
    ad::Tensor corrupted;  // [1,32,32] in [0,1]
    std::size_t label = 0;
    bool is_positive = true;
};

// Per-class shuffled 60/40 split: the first round(0.6 n) of each class's
// shuffled rows go to train. Rows are indexed into `labels`.
std::vector<Split> stratified_split(std::span<const std::size_t> labels, std::uint64_t seed);

/// Renders counts[k] glyphs of every class, writes the clean images as PGM
/// under <out_dir>/images and the manifest as <out_dir>/manifest.tsv.
/// Corrupted inputs are not stored; they are regenerated from the recorded
/// parameters and seed. Throws unwritable_directory.
CorpusIndex make_corpus(const ClassCounts& counts, const CorruptionParams& corruption, std::uint64_t seed,
                        const std::filesystem::path& out_dir);

void write_manifest(const CorpusIndex& index, const std::filesystem::path& file);

/// Reads a manifest in the corpus layout. Required columns: id, path, label;
/// split, the corruption columns and seed are optional (defaults: stratified
/// split, default corruption, seed hashed from the id). Paths resolve
/// against `dir`, as does a relative manifest_file. Errors name the manifest line: malformed_row, bad_label,
/// missing_file.
CorpusIndex ingest_external(const std::filesystem::path& dir, const std::filesystem::path& manifest_file);

// Loads and corrupts rows (optionally one split only) in manifest order.
// Images of other sizes are resized bilinearly to 32x32.
std::vector<LabeledSample> load_samples(const CorpusIndex& index, std::optional<Split> split = std::nullopt);

LabeledSample load_sample(const CorpusIndex& index, const ManifestRow& row);

enum class View { clean, corrupted };

// Stacks one image of each listed sample into [n, 1, H, W]. Throws
// shape_mismatch when the samples differ in size.
ad::Tensor stack_images(std::span<const LabeledSample> samples, std::span<const std::size_t> rows, View view);

}  // namespace rmgan::corpus
