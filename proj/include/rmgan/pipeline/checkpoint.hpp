#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "rmgan/models/networks.hpp"
#include "rmgan/nn/optim.hpp"
#include "rmgan/pipeline/config.hpp"

namespace rmgan::pipeline {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Model, optimizer and schedule state of a training run. Networks that a
/// run does not use stay null and are not written.
struct Checkpoint {
    std::string kind;  // "main", "augmenter" or "classifier"
    TrainConfig config;
    std::int64_t epoch = 0;  // completed epochs

    models::GeneratorArch generator_arch;
    models::DiscriminatorArch discriminator_arch;
    models::AugmenterArch augmenter_arch;

    std::unique_ptr<models::GeneratorNet> generator;
    std::unique_ptr<models::DiscriminatorNet> discriminator;
    std::unique_ptr<models::AugmentGeneratorNet> augmenter;
    // The augmenter's own adversary; shares the discriminator architecture.
    std::unique_ptr<models::DiscriminatorNet> critic;

    // Keyed by parameter-set name (see param_sets()).
    std::map<std::string, nn::AdamState> optimizers;

    // Every present parameter set by its record prefix: generator,
    // discriminator, mi_head, augmenter, critic, critic_mi_head.
    std::map<std::string, nn::ParamSet*> param_sets();
    std::map<std::string, const nn::ParamSet*> param_sets() const;

    // Fresh optimizer state for every present set that has none.
    void ensure_optimizers();
};

/// Little-endian: "AMK1", version, config echo (key = value text), then
/// per-tensor records (name length, name, rank, dims, raw doubles) for
/// parameters, batch-norm buffers and Adam moments, then a CRC32 of all
/// preceding bytes.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

// Throws missing_file, corrupt_file (bad magic, checksum, truncation or
// missing records) or version_mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rmgan::pipeline
