#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rmgan/corpus/corpus.hpp"
#include "rmgan/pipeline/checkpoint.hpp"
#include "rmgan/pipeline/config.hpp"

namespace rmgan::pipeline {

struct EpochMetrics {
    int epoch = 0;
    std::int64_t step = 0;  // discriminator steps taken so far in the run
    double loss_gd = 0.0;   // adversarial term of the discriminator updates
    double loss_mse = 0.0;  // mean pixel error of G(X~) against X over the epoch's positives
    double loss_clc = 0.0;  // classification term of the discriminator updates
    double loss_mi = 0.0;   // mutual-information bound on generated samples
    double lr_g = 0.0;
    double lr_d = 0.0;

    // Bookkeeping kept out of the TSV.
    std::int64_t d_steps = 0;  // this epoch
    std::int64_t g_steps = 0;
    double code_entropy = 0.0;  // entropy of all codes drawn this epoch
};

struct MetricLog {
    std::vector<EpochMetrics> epochs;
    bool stopped_early = false;

    // Header `epoch step loss_gd loss_mse loss_clc loss_mi lr_g lr_d`, one
    // row per epoch, values printed round-trip exact.
    std::string to_tsv() const;
    void write_tsv(const std::filesystem::path& path) const;
};

// True iff the mean positive-sample reconstruction error is strictly below rho.
bool should_stop(double mean_recon_error, const TrainConfig& config);

/// Fresh state for the adversarial deblur-and-classify loop: a generator
/// (unless config.use_generator is false) and a discriminator with its
/// latent-code head, seeded from config.seed.
Checkpoint new_main_checkpoint(const TrainConfig& config, models::GeneratorArch g = {},
                               models::DiscriminatorArch d = {});

using EpochCallback = std::function<void(const EpochMetrics&, const Checkpoint&)>;

/// Runs epochs state.epoch .. state.config.epochs - 1 over the training
/// samples. Each epoch shuffles with a stream derived from (seed, epoch),
/// so resuming from a saved checkpoint replays the uninterrupted run.
///
/// Per batch: one discriminator update (real/fake on positives, class
/// cross-entropy on real and restored inputs of every sample with NULL for
/// negatives, latent-code bound on restored positives), then
/// g_steps_per_d_step generator updates on the batch's positives
/// (non-saturating adversarial term + lambda_mse MSE + class term -
/// lambda_mi bound). Without a generator only the class head is trained,
/// on clean inputs. Throws empty_corpus, non_finite (with epoch and step).
void train_main(std::span<const corpus::LabeledSample> samples, Checkpoint& state, MetricLog& log,
                const EpochCallback& on_epoch = {});

/// Fresh state for the class-conditional augmentation sampler and its critic.
Checkpoint new_augmenter_checkpoint(const TrainConfig& config, models::AugmenterArch a = {},
                                    models::DiscriminatorArch d = {});

/// Trains the augmenter against its critic's real/fake head. Codes are drawn
/// uniformly and each is paired with a real sample of the same class. The
/// critic's latent-code head learns real labels and the bound on generated
/// samples; the augmenter maximises the bound (weight lambda_mi). Throws
/// class_absent when a class has no training sample.
void train_augmenter(std::span<const corpus::LabeledSample> samples, Checkpoint& state, MetricLog& log,
                     const EpochCallback& on_epoch = {});

/// Samples counts[k] images with code k, writes them in the corpus layout
/// (all in the train split, corrupted on load with `corruption`) and returns
/// the index.
corpus::CorpusIndex produce_augmented_set(const Checkpoint& augmenter, const corpus::ClassCounts& counts,
                                          std::uint64_t seed, const std::filesystem::path& out_dir,
                                          const corpus::CorruptionParams& corruption = {});

}  // namespace rmgan::pipeline
