#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rmgan/corpus/corpus.hpp"
#include "rmgan/pipeline/checkpoint.hpp"
#include "rmgan/pipeline/config.hpp"

namespace rmgan::eval {

inline constexpr std::size_t kEvalBatch = 64;

// What the classifier sees: the clean image, the corrupted input as is, or
// the generator's restoration of the corrupted input.
enum class InputMode { clean, corrupted, restored };

std::string_view to_string(InputMode mode);

// Restored when the checkpoint has a generator, corrupted otherwise.
InputMode pipeline_mode(const pipeline::Checkpoint& checkpoint);

struct AccuracyReport {
    corpus::ClassCounts correct{};
    corpus::ClassCounts total{};
    double overall = 0.0;

    // NaN for classes absent from the split.
    double per_class(std::size_t k) const;
};

/// Argmax of the class head in evaluation mode. Throws split_empty, or
/// invalid_argument when `restored` is asked of a checkpoint without a
/// generator.
AccuracyReport classify_accuracy(const pipeline::Checkpoint& checkpoint, std::span<const corpus::LabeledSample> samples,
                                 InputMode mode);

// Maps a [N,1,S,S] batch of corrupted inputs to restorations.
using RestoreFn = std::function<ad::Tensor(const ad::Tensor&)>;

RestoreFn generator_restore(const models::GeneratorNet& generator);

struct DeblurReport {
    std::size_t positives = 0;
    std::size_t negatives = 0;
    double corrupted_mse = 0.0;  // positives: mean per-pixel error of x~ against x
    double restored_mse = 0.0;   // positives: G(x~) against x
    double delta_pos = 0.0;      // corrupted_mse - restored_mse
    double delta_neg = 0.0;      // negatives: G(n) against n
    double psnr_corrupted = 0.0;  // mean over positives, peak 1
    double psnr_restored = 0.0;
};

/// Errors are mean squared pixel differences per image, averaged over
/// images. Throws split_empty unless the samples hold both positives and
/// negatives.
DeblurReport deblur_decimate_report(const RestoreFn& restore, std::span<const corpus::LabeledSample> samples);
DeblurReport deblur_decimate_report(const pipeline::Checkpoint& checkpoint,
                                    std::span<const corpus::LabeledSample> samples);

double mse(std::span<const double> a, std::span<const double> b);
// 10 log10(1 / mse); infinite for identical images.
double psnr(double mse);

struct ConsistencyReport {
    corpus::ClassCounts matched{};
    corpus::ClassCounts total{};
    double overall = 0.0;
    double per_class(std::size_t k) const;
    double min_per_class() const;
};

/// Fraction of generated clean images the reference classifier assigns to
/// their intended class. Throws class_absent when a class has no samples.
ConsistencyReport augmentation_consistency(std::span<const corpus::LabeledSample> generated,
                                           const pipeline::Checkpoint& reference);

struct AblationRow {
    std::string variant;
    double pipeline_accuracy = 0.0;
    InputMode mode = InputMode::restored;
    std::size_t train_samples = 0;
};

/// Trains and scores the four variants on the same splits: full (generator,
/// class term, augmented data), no_generator, no_classification_loss and
/// no_augmentation. Rows come back sorted by pipeline accuracy, best first.
std::vector<AblationRow> run_ablation(std::span<const corpus::LabeledSample> train,
                                      std::span<const corpus::LabeledSample> test,
                                      std::span<const corpus::LabeledSample> augmented,
                                      const pipeline::TrainConfig& config);

std::string ablation_tsv(std::span<const AblationRow> rows);

/// Writes a side-by-side corrupted | restored | clean PGM per sample under
/// <out_dir>/triptychs and values.tsv holding every pixel at full precision
/// (columns id, label, panel, then one value per pixel).
void dump_triptychs(const RestoreFn& restore, std::span<const corpus::LabeledSample> samples,
                    const std::filesystem::path& out_dir);

std::string report_tsv(const AccuracyReport& accuracy, const DeblurReport* deblur);

}  // namespace rmgan::eval
