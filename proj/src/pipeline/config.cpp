#include "rmgan/pipeline/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rmgan/common/error.hpp"

namespace rmgan::pipeline {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_number(const std::string& key, const std::string& value) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty() || !std::isfinite(v)) {
        throw Error(ErrorCode::invalid_argument, key + ": '" + value + "' is not a number");
    }
    return v;
}

std::int64_t parse_integer(const std::string& key, const std::string& value) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
        throw Error(ErrorCode::invalid_argument, key + ": '" + value + "' is not an integer");
    }
    return v;
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
        throw Error(ErrorCode::invalid_argument, key + ": '" + value + "' is not a non-negative integer");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw Error(ErrorCode::invalid_argument, key + ": '" + value + "' is not a boolean");
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_argument, what); };
    if (epochs < 1) fail("epochs must be positive");
    if (batch_size < 2) fail("batch_size must be at least 2");
    if (g_steps_per_d_step < 1) fail("g_steps_per_d_step must be positive");
    if (!(g_lr_multiplier > 0.0)) fail("g_lr_multiplier must be positive");
    if (!(rho > 0.0)) fail("rho must be positive");
    if (!(schedule.initial > 0.0) || !(schedule.reduced > 0.0) || schedule.switch_epoch < 0) {
        fail("learning-rate schedule must be positive");
    }
    loss_weights.validate();
}

KeyValues read_key_values(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw Error(ErrorCode::missing_file, "cannot open config " + file.string());
    }
    KeyValues out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::invalid_argument,
                        file.string() + ":" + std::to_string(n) + ": expected 'key = value'");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw Error(ErrorCode::invalid_argument, file.string() + ":" + std::to_string(n) + ": empty key");
        }
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

bool apply_setting(TrainConfig& c, const std::string& key, const std::string& value) {
    if (key == "epochs") c.epochs = static_cast<int>(parse_integer(key, value));
    else if (key == "batch_size") c.batch_size = static_cast<std::size_t>(parse_integer(key, value));
    else if (key == "g_steps_per_d_step") c.g_steps_per_d_step = static_cast<int>(parse_integer(key, value));
    else if (key == "g_lr_multiplier") c.g_lr_multiplier = parse_number(key, value);
    else if (key == "lambda_mse") c.loss_weights.lambda_mse = parse_number(key, value);
    else if (key == "lambda_mi") c.loss_weights.lambda_mi = parse_number(key, value);
    else if (key == "rho") c.rho = parse_number(key, value);
    else if (key == "seed") c.seed = parse_seed(key, value);
    else if (key == "lr_initial") c.schedule.initial = parse_number(key, value);
    else if (key == "lr_reduced") c.schedule.reduced = parse_number(key, value);
    else if (key == "lr_switch_epoch") c.schedule.switch_epoch = static_cast<int>(parse_integer(key, value));
    else if (key == "use_generator") c.use_generator = parse_bool(key, value);
    else if (key == "use_classification_loss") c.use_classification_loss = parse_bool(key, value);
    else return false;
    return true;
}

std::string to_key_values(const TrainConfig& c) {
    std::ostringstream out;
    out << "epochs = " << c.epochs << "\n"
        << "batch_size = " << c.batch_size << "\n"
        << "g_steps_per_d_step = " << c.g_steps_per_d_step << "\n"
        << "g_lr_multiplier = " << format_double(c.g_lr_multiplier) << "\n"
        << "lambda_mse = " << format_double(c.loss_weights.lambda_mse) << "\n"
        << "lambda_mi = " << format_double(c.loss_weights.lambda_mi) << "\n"
        << "rho = " << format_double(c.rho) << "\n"
        << "seed = " << c.seed << "\n"
        << "lr_initial = " << format_double(c.schedule.initial) << "\n"
        << "lr_reduced = " << format_double(c.schedule.reduced) << "\n"
        << "lr_switch_epoch = " << c.schedule.switch_epoch << "\n"
        << "use_generator = " << (c.use_generator ? "true" : "false") << "\n"
        << "use_classification_loss = " << (c.use_classification_loss ? "true" : "false") << "\n";
    return out.str();
}

TrainConfig config_from_key_values(const KeyValues& values) {
    TrainConfig c;
    for (const auto& [k, v] : values) {
        if (!apply_setting(c, k, v)) {
            throw Error(ErrorCode::invalid_argument, "unknown setting '" + k + "'");
        }
    }
    return c;
}

}  // namespace rmgan::pipeline
