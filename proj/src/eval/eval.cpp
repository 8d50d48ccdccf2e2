#include "rmgan/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "rmgan/autodiff/ops.hpp"
#include "rmgan/autodiff/tape.hpp"
#include "rmgan/common/error.hpp"
#include "rmgan/corpus/image_io.hpp"
#include "rmgan/pipeline/train.hpp"

namespace fs = std::filesystem;

namespace rmgan::eval {

namespace {

using corpus::LabeledSample;
using nn::Mode;

// Calls fn(first_row, batch_rows) over consecutive batches of kEvalBatch.
template <class Fn>
void for_batches(std::size_t n, Fn&& fn) {
    for (std::size_t start = 0; start < n; start += kEvalBatch) {
        std::vector<std::size_t> rows(std::min(kEvalBatch, n - start));
        std::iota(rows.begin(), rows.end(), start);
        fn(start, std::span<const std::size_t>(rows));
    }
}

std::vector<std::size_t> argmax_rows(const ad::Tensor& logits) {
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    const auto d = logits.data();
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = static_cast<std::size_t>(std::max_element(d.begin() + i * k, d.begin() + (i + 1) * k) -
                                          (d.begin() + i * k));
    }
    return out;
}

double ratio(std::size_t a, std::size_t b) {
    return b == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(a) / static_cast<double>(b);
}

const models::DiscriminatorNet& classifier_of(const pipeline::Checkpoint& c) {
    if (!c.discriminator) {
        throw Error(ErrorCode::invalid_argument, "checkpoint holds no classifier");
    }
    return *c.discriminator;
}

}  // namespace

std::string_view to_string(InputMode mode) {
    switch (mode) {
        case InputMode::clean: return "clean";
        case InputMode::corrupted: return "corrupted";
        case InputMode::restored: return "restored";
    }
    return "?";
}

InputMode pipeline_mode(const pipeline::Checkpoint& checkpoint) {
    return checkpoint.generator ? InputMode::restored : InputMode::corrupted;
}

double AccuracyReport::per_class(std::size_t k) const { return ratio(correct.at(k), total.at(k)); }

AccuracyReport classify_accuracy(const pipeline::Checkpoint& checkpoint, std::span<const LabeledSample> samples,
                                 InputMode mode) {
    if (samples.empty()) {
        throw Error(ErrorCode::split_empty, "no samples to classify");
    }
    const auto& d = classifier_of(checkpoint);
    if (mode == InputMode::restored && !checkpoint.generator) {
        throw Error(ErrorCode::invalid_argument, "restored inputs need a generator");
    }
    ad::NoGradGuard no_grad;
    AccuracyReport r;
    for_batches(samples.size(), [&](std::size_t, std::span<const std::size_t> rows) {
        ad::Tensor x = corpus::stack_images(samples, rows,
                                            mode == InputMode::clean ? corpus::View::clean : corpus::View::corrupted);
        if (mode == InputMode::restored) {
            x = checkpoint.generator->forward(x, Mode::eval());
        }
        const auto predicted = argmax_rows(d.forward(x, Mode::eval()).class_logits);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::size_t label = samples[rows[i]].label;
            ++r.total.at(label);
            if (predicted[i] == label) ++r.correct[label];
        }
    });
    r.overall = ratio(corpus::total(r.correct), corpus::total(r.total));
    return r;
}

RestoreFn generator_restore(const models::GeneratorNet& generator) {
    return [&generator](const ad::Tensor& x) {
        ad::NoGradGuard no_grad;
        return generator.forward(x, Mode::eval());
    };
}

double mse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        throw Error(ErrorCode::shape_mismatch, "images differ in size");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr(double mse) {
    return mse == 0.0 ? std::numeric_limits<double>::infinity() : -10.0 * std::log10(mse);
}

DeblurReport deblur_decimate_report(const RestoreFn& restore, std::span<const LabeledSample> samples) {
    DeblurReport r;
    for (const auto& s : samples) (s.is_positive ? r.positives : r.negatives)++;
    if (r.positives == 0 || r.negatives == 0) {
        throw Error(ErrorCode::split_empty, "report needs positive and negative samples (have " +
                                                std::to_string(r.positives) + " and " + std::to_string(r.negatives) +
                                                ")");
    }
    for_batches(samples.size(), [&](std::size_t, std::span<const std::size_t> rows) {
        const ad::Tensor out = restore(corpus::stack_images(samples, rows, corpus::View::corrupted));
        const std::size_t pixels = out.numel() / rows.size();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& s = samples[rows[i]];
            const auto restored = out.data().subspan(i * pixels, pixels);
            if (s.is_positive) {
                const double before = mse(s.corrupted.data(), s.clean.data());
                const double after = mse(restored, s.clean.data());
                r.corrupted_mse += before;
                r.restored_mse += after;
                r.psnr_corrupted += psnr(before);
                r.psnr_restored += psnr(after);
            } else {
                r.delta_neg += mse(restored, s.corrupted.data());
            }
        }
    });
    const double np = static_cast<double>(r.positives);
    r.corrupted_mse /= np;
    r.restored_mse /= np;
    r.psnr_corrupted /= np;
    r.psnr_restored /= np;
    r.delta_neg /= static_cast<double>(r.negatives);
    r.delta_pos = r.corrupted_mse - r.restored_mse;
    return r;
}

DeblurReport deblur_decimate_report(const pipeline::Checkpoint& checkpoint, std::span<const LabeledSample> samples) {
    if (!checkpoint.generator) {
        throw Error(ErrorCode::invalid_argument, "checkpoint holds no generator");
    }
    return deblur_decimate_report(generator_restore(*checkpoint.generator), samples);
}

double ConsistencyReport::per_class(std::size_t k) const { return ratio(matched.at(k), total.at(k)); }

double ConsistencyReport::min_per_class() const {
    double m = 1.0;
    for (std::size_t k = 0; k < corpus::kNumClasses; ++k) m = std::min(m, per_class(k));
    return m;
}

ConsistencyReport augmentation_consistency(std::span<const LabeledSample> generated,
                                           const pipeline::Checkpoint& reference) {
    ConsistencyReport r;
    for (const auto& s : generated) {
        if (s.label >= corpus::kNumClasses) {
            throw Error(ErrorCode::label_out_of_range, "sample " + s.id);
        }
        ++r.total[s.label];
    }
    for (std::size_t k = 0; k < corpus::kNumClasses; ++k) {
        if (r.total[k] == 0) {
            throw Error(ErrorCode::class_absent, "no generated sample of class " + std::string(corpus::label_name(k)));
        }
    }
    const auto acc = classify_accuracy(reference, generated, InputMode::clean);
    r.matched = acc.correct;
    r.overall = acc.overall;
    return r;
}

std::vector<AblationRow> run_ablation(std::span<const LabeledSample> train, std::span<const LabeledSample> test,
                                      std::span<const LabeledSample> augmented, const pipeline::TrainConfig& config) {
    std::vector<LabeledSample> with_aug(train.begin(), train.end());
    with_aug.insert(with_aug.end(), augmented.begin(), augmented.end());

    struct Variant {
        const char* name;
        bool use_generator;
        bool use_classification_loss;
        bool augmented;
    };
    const Variant variants[] = {
        {"full", true, true, true},
        {"no_generator", false, true, true},
        {"no_classification_loss", true, false, true},
        {"no_augmentation", true, true, false},
    };
    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        pipeline::TrainConfig cfg = config;
        cfg.use_generator = v.use_generator;
        cfg.use_classification_loss = v.use_classification_loss;
        auto state = pipeline::new_main_checkpoint(cfg);
        pipeline::MetricLog log;
        const std::span<const LabeledSample> data = v.augmented ? std::span<const LabeledSample>(with_aug) : train;
        pipeline::train_main(data, state, log);
        AblationRow row;
        row.variant = v.name;
        row.mode = pipeline_mode(state);
        row.pipeline_accuracy = classify_accuracy(state, test, row.mode).overall;
        row.train_samples = data.size();
        rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.pipeline_accuracy > b.pipeline_accuracy; });
    return rows;
}

std::string ablation_tsv(std::span<const AblationRow> rows) {
    std::ostringstream out;
    out << "variant\tpipeline_accuracy\tinput\ttrain_samples\n";
    for (const auto& r : rows) {
        out << r.variant << '\t' << pipeline::format_double(r.pipeline_accuracy) << '\t' << to_string(r.mode) << '\t'
            << r.train_samples << '\n';
    }
    return out.str();
}

void dump_triptychs(const RestoreFn& restore, std::span<const LabeledSample> samples, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir / "triptychs", ec);
    std::ofstream values(out_dir / "values.tsv", std::ios::binary);
    if (ec || !values) {
        throw Error(ErrorCode::unwritable_directory, "cannot write under " + out_dir.string());
    }
    values << "id\tlabel\tpanel\tpixels\n";
    char buf[32];
    const auto write_row = [&](const LabeledSample& s, const char* panel, std::span<const double> px) {
        values << s.id << '\t' << corpus::label_name(s.label) << '\t' << panel;
        for (double v : px) {
            std::snprintf(buf, sizeof buf, "\t%.17g", v);
            values << buf;
        }
        values << '\n';
    };
    for_batches(samples.size(), [&](std::size_t, std::span<const std::size_t> rows) {
        const ad::Tensor out = restore(corpus::stack_images(samples, rows, corpus::View::corrupted));
        const std::size_t pixels = out.numel() / rows.size();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& s = samples[rows[i]];
            const auto px = out.data().subspan(i * pixels, pixels);
            const ad::Tensor restored(s.clean.shape(), std::vector<double>(px.begin(), px.end()));
            const ad::Tensor panels[] = {s.corrupted, restored, s.clean};
            corpus::write_pgm(out_dir / "triptychs" / (s.id + ".pgm"), corpus::hstack(panels));
            write_row(s, "corrupted", s.corrupted.data());
            write_row(s, "restored", px);
            write_row(s, "clean", s.clean.data());
        }
    });
    if (!values) {
        throw Error(ErrorCode::unwritable_directory, "write failed for " + (out_dir / "values.tsv").string());
    }
}

std::string report_tsv(const AccuracyReport& accuracy, const DeblurReport* deblur) {
    std::ostringstream out;
    out << "metric\tvalue\n";
    out << "accuracy_overall\t" << pipeline::format_double(accuracy.overall) << '\n';
    for (std::size_t k = 0; k < corpus::kNumClasses; ++k) {
        out << "accuracy_" << corpus::label_name(k) << '\t' << pipeline::format_double(accuracy.per_class(k)) << '\n';
    }
    if (deblur) {
        out << "positives\t" << deblur->positives << '\n'
            << "negatives\t" << deblur->negatives << '\n'
            << "corrupted_mse\t" << pipeline::format_double(deblur->corrupted_mse) << '\n'
            << "restored_mse\t" << pipeline::format_double(deblur->restored_mse) << '\n'
            << "delta_pos\t" << pipeline::format_double(deblur->delta_pos) << '\n'
            << "delta_neg\t" << pipeline::format_double(deblur->delta_neg) << '\n'
            << "psnr_corrupted\t" << pipeline::format_double(deblur->psnr_corrupted) << '\n'
            << "psnr_restored\t" << pipeline::format_double(deblur->psnr_restored) << '\n';
    }
    return out.str();
}

}  // namespace rmgan::eval
