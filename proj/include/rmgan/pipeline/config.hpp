#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rmgan/losses/losses.hpp"
#include "rmgan/nn/optim.hpp"

namespace rmgan::pipeline {

struct TrainConfig {
    int epochs = 30;
    std::size_t batch_size = 32;
    int g_steps_per_d_step = 2;
    double g_lr_multiplier = 2.0;
    losses::LossWeights loss_weights;
    double rho = 1e-3;  // stop once the epoch's mean positive reconstruction error drops below
    std::uint64_t seed = 0;
    nn::LrSchedule schedule;

    // Ablation switches.
    bool use_generator = true;            // false: the classifier sees inputs directly
    bool use_classification_loss = true;  // false: no class term in generator updates

    // Throws invalid_argument naming the first bad field.
    void validate() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// `key = value` lines; blank lines and `#` comments ignored. Throws
// missing_file or invalid_argument with the line number.
KeyValues read_key_values(const std::filesystem::path& file);

// Applies a recognised key; returns false for keys the config does not own.
// Throws invalid_argument for unparsable values.
bool apply_setting(TrainConfig& config, const std::string& key, const std::string& value);

// Every field as `key = value` lines, floats printed round-trip exact.
std::string to_key_values(const TrainConfig& config);

// Inverse of to_key_values; unknown keys throw invalid_argument.
TrainConfig config_from_key_values(const KeyValues& values);

// Parses a decimal double / integer / bool, throwing invalid_argument naming `key`.
double parse_number(const std::string& key, const std::string& value);
std::int64_t parse_integer(const std::string& key, const std::string& value);
std::uint64_t parse_seed(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

std::string format_double(double v);

}  // namespace rmgan::pipeline
