#include "rmgan/cli/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rmgan/common/error.hpp"
#include "rmgan/corpus/corpus.hpp"
#include "rmgan/eval/eval.hpp"
#include "rmgan/pipeline/checkpoint.hpp"
#include "rmgan/pipeline/config.hpp"
#include "rmgan/pipeline/gradcheck_suite.hpp"
#include "rmgan/pipeline/train.hpp"

namespace fs = std::filesystem;

namespace rmgan::cli {

namespace {

constexpr const char* kCheckpointFile = "checkpoint.bin";
constexpr const char* kMetricsFile = "metrics.tsv";

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

// Settings that are not part of TrainConfig but may appear in a config file.
struct Extras {
    corpus::CorruptionParams corruption;
    double count_scale = 1.0;
};

void add_common(CLI::App* sub, Common& c, bool out_required) {
    sub->add_option("--config", c.config, "key = value settings file")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "random seed (overrides the config)");
    auto* out = sub->add_option("--out", c.out, "output directory");
    if (out_required) out->required();
}

void load_settings(const Common& c, pipeline::TrainConfig& cfg, Extras& extras) {
    if (!c.config.empty()) {
        for (const auto& [key, value] : pipeline::read_key_values(c.config)) {
            if (pipeline::apply_setting(cfg, key, value)) continue;
            if (key == "blur_sigma") extras.corruption.blur_sigma = pipeline::parse_number(key, value);
            else if (key == "noise_sigma") extras.corruption.noise_sigma = pipeline::parse_number(key, value);
            else if (key == "perspective_strength")
                extras.corruption.perspective_strength = pipeline::parse_number(key, value);
            else if (key == "count_scale") extras.count_scale = pipeline::parse_number(key, value);
            else throw Error(ErrorCode::invalid_argument, c.config + ": unknown setting '" + key + "'");
        }
    }
    if (c.seed) cfg.seed = *c.seed;
    cfg.validate();
    extras.corruption.validate();
}

fs::path make_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) {
        throw Error(ErrorCode::unwritable_directory, "cannot create " + out);
    }
    return out;
}

corpus::CorpusIndex open_corpus(const std::string& dir) {
    return corpus::ingest_external(dir, corpus::kManifestName);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) {
        throw Error(ErrorCode::unwritable_directory, "cannot write " + path.string());
    }
}

void print_epoch(std::ostream& out, const pipeline::EpochMetrics& m) {
    char line[200];
    std::snprintf(line, sizeof line, "epoch %3d  step %6lld  gd %.4f  mse %.5f  clc %.4f  mi %.4f  lr_g %.1e  lr_d %.1e\n",
                  m.epoch, static_cast<long long>(m.step), m.loss_gd, m.loss_mse, m.loss_clc, m.loss_mi, m.lr_g,
                  m.lr_d);
    out << line << std::flush;
}

// Up to n samples, taking classes in turn so every class shows up.
std::vector<corpus::LabeledSample> spread_over_classes(const std::vector<corpus::LabeledSample>& samples,
                                                       std::size_t n) {
    std::vector<std::vector<const corpus::LabeledSample*>> by_class(corpus::kNumClasses);
    for (const auto& s : samples) by_class.at(s.label).push_back(&s);
    std::vector<corpus::LabeledSample> out;
    for (std::size_t round = 0; out.size() < std::min(n, samples.size()); ++round) {
        for (const auto& bucket : by_class) {
            if (round < bucket.size() && out.size() < n) out.push_back(*bucket[round]);
        }
    }
    return out;
}

std::optional<eval::InputMode> parse_mode(const std::string& s) {
    for (auto m : {eval::InputMode::clean, eval::InputMode::corrupted, eval::InputMode::restored}) {
        if (eval::to_string(m) == s) return m;
    }
    return std::nullopt;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Road-marking restoration and classification with adversarial networks"};
    app.name("rmgan");
    app.require_subcommand(1);

    Common gen_c, train_c, aug_c, sample_c, eval_c, ablate_c, grad_c;

    auto* gen = app.add_subcommand("gen-data", "render the synthetic corpus");
    add_common(gen, gen_c, true);
    double gen_scale = -1.0;
    gen->add_option("--scale", gen_scale, "multiply the default per-class counts");

    auto* train = app.add_subcommand("train", "train the restoration generator and discriminator");
    add_common(train, train_c, true);
    std::string train_data, train_aug, train_resume;
    std::optional<int> train_epochs;
    train->add_option("--data", train_data, "corpus directory")->required();
    train->add_option("--aug", train_aug, "augmented corpus added to the training split");
    train->add_option("--resume", train_resume, "continue from a checkpoint")->check(CLI::ExistingFile);
    train->add_option("--epochs", train_epochs, "number of epochs (overrides the config)");

    auto* train_aug_cmd = app.add_subcommand("train-aug", "train the class-conditional augmenter");
    add_common(train_aug_cmd, aug_c, true);
    std::string aug_data;
    std::optional<int> aug_epochs;
    train_aug_cmd->add_option("--data", aug_data, "corpus directory")->required();
    train_aug_cmd->add_option("--epochs", aug_epochs, "number of epochs (overrides the config)");

    auto* augment = app.add_subcommand("augment", "sample an augmented corpus from a trained augmenter");
    add_common(augment, sample_c, true);
    std::string augment_ckpt;
    double augment_scale = -1.0;
    augment->add_option("--checkpoint", augment_ckpt, "augmenter checkpoint")->required()->check(CLI::ExistingFile);
    augment->add_option("--scale", augment_scale, "multiply the default augmented counts");

    auto* ev = app.add_subcommand("eval", "accuracy, deblur and decimation report");
    add_common(ev, eval_c, false);
    std::string eval_ckpt, eval_data, eval_split = "test", eval_mode = "pipeline", eval_ref, eval_aug;
    std::size_t eval_dump = 16;
    ev->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required()->check(CLI::ExistingFile);
    ev->add_option("--data", eval_data, "corpus directory")->required();
    ev->add_option("--split", eval_split, "train or test")->check(CLI::IsMember({"train", "test"}));
    ev->add_option("--input", eval_mode, "clean, corrupted, restored or pipeline")
        ->check(CLI::IsMember({"clean", "corrupted", "restored", "pipeline"}));
    ev->add_option("--dump", eval_dump, "triptychs to write under --out");
    ev->add_option("--reference", eval_ref, "reference classifier for augmentation consistency")
        ->check(CLI::ExistingFile);
    ev->add_option("--aug", eval_aug, "augmented corpus scored with --reference");

    auto* ablate = app.add_subcommand("ablate", "train and rank the ablation variants");
    add_common(ablate, ablate_c, true);
    std::string ablate_data, ablate_aug;
    ablate->add_option("--data", ablate_data, "corpus directory")->required();
    ablate->add_option("--aug", ablate_aug, "augmented corpus for the variants that use one")->required();

    auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every network gradient");
    add_common(grad, grad_c, false);
    std::size_t grad_entries = pipeline::GradcheckSuiteOptions{}.full_size_entries;
    grad->add_option("--entries", grad_entries, "entries sampled per full-size tensor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "rmgan: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        pipeline::TrainConfig cfg;
        Extras extras;
        const auto started = std::chrono::steady_clock::now();
        const auto elapsed = [&] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        };

        if (gen->parsed()) {
            load_settings(gen_c, cfg, extras);
            const double scale = gen_scale >= 0.0 ? gen_scale : extras.count_scale;
            const auto counts = corpus::scale_counts(corpus::kDefaultCounts, scale);
            const auto index = corpus::make_corpus(counts, extras.corruption, cfg.seed, gen_c.out);
            out << "wrote " << index.rows.size() << " samples to " << gen_c.out << "\n";
        } else if (train->parsed()) {
            load_settings(train_c, cfg, extras);
            if (train_epochs) cfg.epochs = *train_epochs;
            const fs::path dir = make_out_dir(train_c.out);
            auto samples = corpus::load_samples(open_corpus(train_data), corpus::Split::train);
            if (!train_aug.empty()) {
                const auto extra = corpus::load_samples(open_corpus(train_aug), corpus::Split::train);
                samples.insert(samples.end(), extra.begin(), extra.end());
            }
            pipeline::Checkpoint state;
            if (!train_resume.empty()) {
                state = pipeline::load_checkpoint(train_resume);
                state.config.epochs = cfg.epochs;
            } else {
                state = pipeline::new_main_checkpoint(cfg);
            }
            pipeline::MetricLog log;
            pipeline::train_main(samples, state, log, [&](const auto& m, const auto& c) {
                print_epoch(out, m);
                pipeline::save_checkpoint(c, dir / kCheckpointFile);
            });
            pipeline::save_checkpoint(state, dir / kCheckpointFile);
            log.write_tsv(dir / kMetricsFile);
            write_text(dir / "config.txt", pipeline::to_key_values(state.config));
            out << (log.stopped_early ? "stopped early" : "finished") << " after " << state.epoch << " epochs in "
                << elapsed() << " s\n";
        } else if (train_aug_cmd->parsed()) {
            load_settings(aug_c, cfg, extras);
            if (aug_epochs) cfg.epochs = *aug_epochs;
            const fs::path dir = make_out_dir(aug_c.out);
            const auto samples = corpus::load_samples(open_corpus(aug_data), corpus::Split::train);
            auto state = pipeline::new_augmenter_checkpoint(cfg);
            pipeline::MetricLog log;
            pipeline::train_augmenter(samples, state, log, [&](const auto& m, const auto&) {
                print_epoch(out, m);
            });
            pipeline::save_checkpoint(state, dir / kCheckpointFile);
            log.write_tsv(dir / kMetricsFile);
            out << "finished after " << state.epoch << " epochs in " << elapsed() << " s\n";
        } else if (augment->parsed()) {
            load_settings(sample_c, cfg, extras);
            const auto state = pipeline::load_checkpoint(augment_ckpt);
            const double scale = augment_scale >= 0.0 ? augment_scale : extras.count_scale;
            const auto index = pipeline::produce_augmented_set(
                state, corpus::scale_counts(corpus::kAugmentedCounts, scale), cfg.seed, sample_c.out,
                extras.corruption);
            out << "wrote " << index.rows.size() << " samples to " << sample_c.out << "\n";
        } else if (ev->parsed()) {
            load_settings(eval_c, cfg, extras);
            const auto state = pipeline::load_checkpoint(eval_ckpt);
            const auto split = *corpus::parse_split(eval_split);
            const auto samples = corpus::load_samples(open_corpus(eval_data), split);
            const auto mode = eval_mode == "pipeline" ? eval::pipeline_mode(state) : *parse_mode(eval_mode);
            const auto accuracy = eval::classify_accuracy(state, samples, mode);
            std::optional<eval::DeblurReport> deblur;
            if (state.generator) {
                deblur = eval::deblur_decimate_report(state, samples);
            }
            std::string report = eval::report_tsv(accuracy, deblur ? &*deblur : nullptr);
            if (!eval_ref.empty() || !eval_aug.empty()) {
                if (eval_ref.empty() || eval_aug.empty()) {
                    throw Error(ErrorCode::invalid_argument, "--reference and --aug go together");
                }
                const auto reference = pipeline::load_checkpoint(eval_ref);
                const auto generated = corpus::load_samples(open_corpus(eval_aug));
                const auto c = eval::augmentation_consistency(generated, reference);
                report += "consistency_overall\t" + pipeline::format_double(c.overall) + "\n";
                for (std::size_t k = 0; k < corpus::kNumClasses; ++k) {
                    report += "consistency_" + std::string(corpus::label_name(k)) + "\t" +
                              pipeline::format_double(c.per_class(k)) + "\n";
                }
            }
            out << "input\t" << eval::to_string(mode) << "\n" << report;
            if (!eval_c.out.empty()) {
                const fs::path dir = make_out_dir(eval_c.out);
                write_text(dir / "report.tsv", report);
                if (state.generator && eval_dump > 0) {
                    eval::dump_triptychs(eval::generator_restore(*state.generator),
                                         spread_over_classes(samples, eval_dump), dir / "dumps");
                }
            }
        } else if (ablate->parsed()) {
            load_settings(ablate_c, cfg, extras);
            const fs::path dir = make_out_dir(ablate_c.out);
            const auto index = open_corpus(ablate_data);
            const auto train_set = corpus::load_samples(index, corpus::Split::train);
            const auto test_set = corpus::load_samples(index, corpus::Split::test);
            const auto aug = corpus::load_samples(open_corpus(ablate_aug));
            const auto rows = eval::run_ablation(train_set, test_set, aug, cfg);
            const std::string tsv = eval::ablation_tsv(rows);
            write_text(dir / "ablation.tsv", tsv);
            out << tsv;
        } else if (grad->parsed()) {
            load_settings(grad_c, cfg, extras);
            pipeline::GradcheckSuiteOptions options;
            options.seed = cfg.seed;
            options.full_size_entries = grad_entries;
            const auto report = pipeline::run_gradcheck_suite(options);
            out << report.to_text() << "elapsed " << elapsed() << " s\n";
            if (!grad_c.out.empty()) {
                write_text(make_out_dir(grad_c.out) / "gradcheck.txt", report.to_text());
            }
            if (!report.passed) {
                err << "rmgan: gradient check failed\n";
                return 2;
            }
        }
    } catch (const std::exception& e) {
        err << "rmgan: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace rmgan::cli
