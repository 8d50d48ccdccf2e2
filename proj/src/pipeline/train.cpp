#include "rmgan/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rmgan/autodiff/ops.hpp"
#include "rmgan/autodiff/tape.hpp"
#include "rmgan/common/error.hpp"
#include "rmgan/common/rng.hpp"
#include "rmgan/corpus/image_io.hpp"
#include "rmgan/losses/losses.hpp"

namespace fs = std::filesystem;

namespace rmgan::pipeline {

namespace {

using corpus::LabeledSample;
using nn::Mode;

constexpr std::uint64_t kEpochTag = 0x65706f6368;
constexpr std::uint64_t kGeneratorTag = 0x67656e;
constexpr std::uint64_t kDiscriminatorTag = 0x646973;
constexpr std::uint64_t kAugmenterTag = 0x617567;
constexpr std::uint64_t kCriticTag = 0x637269;

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.below(i)]);
    }
}

ad::Tensor cat(const ad::Tensor& a, const ad::Tensor& b) {
    const ad::Tensor parts[] = {a, b};
    return ad::concat_rows(parts);
}

std::vector<std::size_t> iota(std::size_t begin, std::size_t count) {
    std::vector<std::size_t> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = begin + i;
    return v;
}

// Batches of roughly batch_size that spread positives and negatives evenly,
// each holding at least one positive when there is a generator to train.
std::vector<std::vector<std::size_t>> plan_batches(std::span<const LabeledSample> samples, std::size_t batch_size,
                                                   bool need_positive, Rng& rng) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        (samples[i].is_positive ? pos : neg).push_back(i);
    }
    shuffle(pos, rng);
    shuffle(neg, rng);
    std::size_t n_batches = (samples.size() + batch_size - 1) / batch_size;
    if (need_positive) {
        n_batches = std::min(n_batches, pos.size());
    }
    std::vector<std::vector<std::size_t>> batches(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        for (std::size_t i = b * pos.size() / n_batches; i < (b + 1) * pos.size() / n_batches; ++i) {
            batches[b].push_back(pos[i]);
        }
        for (std::size_t i = b * neg.size() / n_batches; i < (b + 1) * neg.size() / n_batches; ++i) {
            batches[b].push_back(neg[i]);
        }
    }
    return batches;
}

void check_samples(std::span<const LabeledSample> samples) {
    if (samples.empty()) {
        throw Error(ErrorCode::empty_corpus, "no training samples");
    }
    for (const auto& s : samples) {
        if (s.label >= corpus::kNumClasses) {
            throw Error(ErrorCode::label_out_of_range, "sample " + s.id + " has label " + std::to_string(s.label));
        }
    }
}

void step(Checkpoint& state, const std::string& set_name, double lr) {
    nn::adam_step(*state.param_sets().at(set_name), state.optimizers.at(set_name), lr);
}

// Zeroed gradient buffers for every parameter, so heads a step does not
// reach count as a zero gradient rather than a missing one.
void zero_all(Checkpoint& state) {
    for (auto& [name, set] : state.param_sets()) {
        for (auto& p : set->params()) {
            p.value.grad_buffer();
        }
        set->zero_grad();
    }
}

double finite_or_throw(const ad::Tensor& loss, int epoch, std::int64_t step_no, const char* what) {
    const double v = loss.item();
    if (!std::isfinite(v)) {
        throw Error(ErrorCode::non_finite, std::string(what) + " loss " + std::to_string(v) + " at epoch " +
                                               std::to_string(epoch) + ", step " + std::to_string(step_no));
    }
    return v;
}

// Runs fn, prefixing any library error with the training position.
template <class Fn>
void with_context(int epoch, std::int64_t step_no, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::non_finite || e.code() == ErrorCode::probability_out_of_range) {
            throw Error(ErrorCode::non_finite, "epoch " + std::to_string(epoch) + ", step " + std::to_string(step_no) +
                                                   ": " + e.what());
        }
        throw;
    }
}

struct Averages {
    double gd = 0, mse = 0, clc = 0, mi = 0;
    std::int64_t d_steps = 0, g_steps = 0;
};

}  // namespace

std::string MetricLog::to_tsv() const {
    std::ostringstream out;
    out << "epoch\tstep\tloss_gd\tloss_mse\tloss_clc\tloss_mi\tlr_g\tlr_d\n";
    for (const auto& e : epochs) {
        out << e.epoch << '\t' << e.step << '\t' << format_double(e.loss_gd) << '\t' << format_double(e.loss_mse)
            << '\t' << format_double(e.loss_clc) << '\t' << format_double(e.loss_mi) << '\t' << format_double(e.lr_g)
            << '\t' << format_double(e.lr_d) << '\n';
    }
    return out.str();
}

void MetricLog::write_tsv(const fs::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw Error(ErrorCode::unwritable_directory, "cannot create " + path.string());
    }
    f << to_tsv();
}

bool should_stop(double mean_recon_error, const TrainConfig& config) { return mean_recon_error < config.rho; }

Checkpoint new_main_checkpoint(const TrainConfig& config, models::GeneratorArch g, models::DiscriminatorArch d) {
    config.validate();
    Checkpoint c;
    c.kind = "main";
    c.config = config;
    c.generator_arch = g;
    c.discriminator_arch = d;
    if (config.use_generator) {
        c.generator = std::make_unique<models::GeneratorNet>(g, derive_seed(config.seed, {kGeneratorTag}));
    }
    c.discriminator = std::make_unique<models::DiscriminatorNet>(d, derive_seed(config.seed, {kDiscriminatorTag}));
    c.ensure_optimizers();
    return c;
}

void train_main(std::span<const LabeledSample> samples, Checkpoint& state, MetricLog& log,
                const EpochCallback& on_epoch) {
    const TrainConfig& cfg = state.config;
    cfg.validate();
    check_samples(samples);
    const bool with_g = cfg.use_generator;
    if (!state.discriminator || (with_g && !state.generator)) {
        throw Error(ErrorCode::invalid_argument, "checkpoint lacks the networks this configuration trains");
    }
    if (with_g && std::none_of(samples.begin(), samples.end(), [](const auto& s) { return s.is_positive; })) {
        throw Error(ErrorCode::empty_corpus, "no positive training samples");
    }
    state.ensure_optimizers();
    const auto& w = cfg.loss_weights;
    const std::size_t K = state.discriminator_arch.num_classes;
    // One Adam update per discriminator step, carried over by checkpoints.
    std::int64_t total_d_steps = state.optimizers.at("discriminator").step;

    for (int epoch = static_cast<int>(state.epoch); epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, {kEpochTag, static_cast<std::uint64_t>(epoch)}));
        const auto batches = plan_batches(samples, cfg.batch_size, with_g, rng);
        const double lr_d = cfg.schedule.rate(epoch);
        const double lr_g = cfg.schedule.rate(epoch, cfg.g_lr_multiplier);
        Averages avg;

        for (const auto& rows : batches) {
            const std::size_t n = rows.size();
            std::vector<std::size_t> labels, pos_at;
            for (std::size_t i = 0; i < n; ++i) {
                labels.push_back(samples[rows[i]].label);
                if (samples[rows[i]].is_positive) pos_at.push_back(i);
            }
            const ad::Tensor x = corpus::stack_images(samples, rows, corpus::View::clean);

            // Discriminator update.
            with_context(epoch, total_d_steps, [&] {
                if (!with_g) {
                    ad::Tape tape;
                    ad::TapeScope scope(tape);
                    zero_all(state);
                    const auto out = state.discriminator->forward(x, Mode::train());
                    const ad::Tensor clc = losses::cross_entropy(out.class_logits, labels);
                    avg.clc += finite_or_throw(clc, epoch, total_d_steps, "classification");
                    tape.backward(clc);
                    step(state, "discriminator", lr_d);
                    return;
                }
                const ad::Tensor x_tilde = corpus::stack_images(samples, rows, corpus::View::corrupted);
                ad::Tensor restored;
                {
                    ad::NoGradGuard no_grad;
                    restored = state.generator->forward(x_tilde, Mode::eval());
                }
                std::vector<std::size_t> real_pos = pos_at, fake_pos, fake_all = iota(n, n), real_all = iota(0, n);
                for (std::size_t p : pos_at) fake_pos.push_back(n + p);
                std::vector<std::size_t> pos_labels;
                for (std::size_t p : pos_at) pos_labels.push_back(labels[p]);

                ad::Tape tape;
                ad::TapeScope scope(tape);
                zero_all(state);
                const auto out = state.discriminator->forward(cat(x, restored), Mode::train());
                const ad::Tensor adv = losses::adv_loss_discriminator(ad::gather_rows(out.real_prob, real_pos),
                                                                      ad::gather_rows(out.real_prob, fake_pos));
                const ad::Tensor clc = losses::classification_loss(ad::gather_rows(out.class_logits, fake_all),
                                                                   ad::gather_rows(out.class_logits, real_all), labels);
                const ad::Tensor mi = losses::mi_lower_bound(losses::one_hot(pos_labels, K),
                                                             ad::gather_rows(out.mi_logits, fake_pos));
                const ad::Tensor loss = losses::total_loss(
                    {ad::sub(adv, ad::scale(mi, w.lambda_mi)), ad::Tensor::scalar(0.0), clc}, w);
                finite_or_throw(loss, epoch, total_d_steps, "discriminator");
                avg.gd += adv.item();
                avg.clc += clc.item();
                avg.mi += mi.item();
                tape.backward(loss);
                step(state, "discriminator", lr_d);
                step(state, "mi_head", lr_d);
            });
            ++avg.d_steps;
            ++total_d_steps;
            if (!with_g) {
                continue;
            }

            // Generator updates on the batch's positives.
            std::vector<std::size_t> pos_rows, pos_labels;
            for (std::size_t p : pos_at) {
                pos_rows.push_back(rows[p]);
                pos_labels.push_back(labels[p]);
            }
            const ad::Tensor x_pos = corpus::stack_images(samples, pos_rows, corpus::View::clean);
            const ad::Tensor xt_pos = corpus::stack_images(samples, pos_rows, corpus::View::corrupted);
            const std::size_t np = pos_rows.size();
            const auto real_rows = iota(0, np), fake_rows = iota(np, np);
            const ad::Tensor codes = losses::one_hot(pos_labels, K);
            const double pixels = static_cast<double>(x_pos.numel() / np);
            for (int g = 0; g < cfg.g_steps_per_d_step; ++g) {
                with_context(epoch, total_d_steps, [&] {
                    ad::Tape tape;
                    ad::TapeScope scope(tape);
                    zero_all(state);
                    const ad::Tensor fake = state.generator->forward(xt_pos, Mode::train());
                    const auto out = state.discriminator->forward(cat(x_pos, fake), Mode::train_frozen());
                    const ad::Tensor adv = losses::adv_loss_generator(ad::gather_rows(out.real_prob, fake_rows));
                    const ad::Tensor mse = losses::mse_loss(fake, x_pos);
                    // The reconstruction term is the per-image squared norm; the
                    // per-pixel mean is what gets logged and tested against rho.
                    const ad::Tensor recon = ad::scale(mse, pixels);
                    const ad::Tensor clc =
                        cfg.use_classification_loss
                            ? losses::classification_loss(ad::gather_rows(out.class_logits, fake_rows),
                                                          ad::gather_rows(out.class_logits, real_rows), pos_labels)
                            : ad::Tensor::scalar(0.0);
                    const ad::Tensor mi = losses::mi_lower_bound(codes, ad::gather_rows(out.mi_logits, fake_rows));
                    const ad::Tensor loss =
                        losses::total_loss({ad::sub(adv, ad::scale(mi, w.lambda_mi)), recon, clc}, w);
                    finite_or_throw(loss, epoch, total_d_steps, "generator");
                    avg.mse += mse.item();
                    tape.backward(loss);
                    step(state, "generator", lr_g);
                });
                ++avg.g_steps;
            }
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.step = total_d_steps;
        m.d_steps = avg.d_steps;
        m.g_steps = avg.g_steps;
        const double d = static_cast<double>(std::max<std::int64_t>(avg.d_steps, 1));
        m.loss_gd = avg.gd / d;
        m.loss_clc = avg.clc / d;
        m.loss_mi = avg.mi / d;
        m.loss_mse = avg.g_steps > 0 ? avg.mse / static_cast<double>(avg.g_steps) : 0.0;
        m.lr_g = with_g ? lr_g : 0.0;
        m.lr_d = lr_d;
        log.epochs.push_back(m);
        state.epoch = epoch + 1;
        if (on_epoch) {
            on_epoch(m, state);
        }
        if (with_g && should_stop(m.loss_mse, cfg)) {
            log.stopped_early = true;
            break;
        }
    }
}

Checkpoint new_augmenter_checkpoint(const TrainConfig& config, models::AugmenterArch a, models::DiscriminatorArch d) {
    config.validate();
    Checkpoint c;
    c.kind = "augmenter";
    c.config = config;
    c.augmenter_arch = a;
    c.discriminator_arch = d;
    c.augmenter = std::make_unique<models::AugmentGeneratorNet>(a, derive_seed(config.seed, {kAugmenterTag}));
    c.critic = std::make_unique<models::DiscriminatorNet>(d, derive_seed(config.seed, {kCriticTag}));
    c.ensure_optimizers();
    return c;
}

void train_augmenter(std::span<const LabeledSample> samples, Checkpoint& state, MetricLog& log,
                     const EpochCallback& on_epoch) {
    const TrainConfig& cfg = state.config;
    cfg.validate();
    check_samples(samples);
    if (!state.augmenter || !state.critic) {
        throw Error(ErrorCode::invalid_argument, "checkpoint lacks the augmenter or its critic");
    }
    state.ensure_optimizers();
    const std::size_t K = state.augmenter_arch.code_dim;
    const std::size_t z_dim = state.augmenter_arch.z_dim;
    std::vector<std::vector<std::size_t>> by_class(K);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].label < K) by_class[samples[i].label].push_back(i);
    }
    for (std::size_t k = 0; k < K; ++k) {
        if (by_class[k].empty()) {
            throw Error(ErrorCode::class_absent, "no training sample of class " + std::string(corpus::label_name(k)));
        }
    }
    const double lambda = cfg.loss_weights.lambda_mi;
    const std::size_t B = cfg.batch_size;
    const std::size_t iterations = (samples.size() + B - 1) / B;
    std::int64_t total_d_steps = state.optimizers.at("critic").step;

    for (int epoch = static_cast<int>(state.epoch); epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, {kEpochTag, kAugmenterTag, static_cast<std::uint64_t>(epoch)}));
        const double lr_d = cfg.schedule.rate(epoch);
        const double lr_g = cfg.schedule.rate(epoch, cfg.g_lr_multiplier);
        Averages avg;
        std::vector<double> code_counts(K, 0.0);

        for (std::size_t it = 0; it < iterations; ++it) {
            std::vector<models::LatentCode> codes;
            std::vector<std::size_t> labels, rows;
            for (std::size_t i = 0; i < B; ++i) {
                const std::size_t k = rng.below(K);
                codes.push_back(models::LatentCode::sample(k, K, z_dim, rng));
                labels.push_back(k);
                rows.push_back(by_class[k][rng.below(by_class[k].size())]);
                code_counts[k] += 1.0;
            }
            const ad::Tensor real = corpus::stack_images(samples, rows, corpus::View::clean);
            const ad::Tensor onehot = losses::one_hot(labels, K);
            const auto real_rows = iota(0, B), fake_rows = iota(B, B);

            with_context(epoch, total_d_steps, [&] {
                ad::Tensor fake;
                {
                    ad::NoGradGuard no_grad;
                    fake = state.augmenter->forward(codes, Mode::train_frozen());
                }
                ad::Tape tape;
                ad::TapeScope scope(tape);
                zero_all(state);
                const auto out = state.critic->forward(cat(real, fake), Mode::train());
                const ad::Tensor adv = losses::adv_loss_discriminator(ad::gather_rows(out.real_prob, real_rows),
                                                                      ad::gather_rows(out.real_prob, fake_rows));
                const ad::Tensor q_real = losses::cross_entropy(ad::gather_rows(out.mi_logits, real_rows), labels);
                const ad::Tensor mi = losses::mi_lower_bound(onehot, ad::gather_rows(out.mi_logits, fake_rows));
                const ad::Tensor loss = ad::add(adv, ad::scale(ad::sub(q_real, mi), lambda));
                finite_or_throw(loss, epoch, total_d_steps, "critic");
                avg.gd += adv.item();
                avg.clc += q_real.item();
                avg.mi += mi.item();
                tape.backward(loss);
                step(state, "critic", lr_d);
                step(state, "critic_mi_head", lr_d);
            });
            ++avg.d_steps;
            ++total_d_steps;

            for (int g = 0; g < cfg.g_steps_per_d_step; ++g) {
                with_context(epoch, total_d_steps, [&] {
                    ad::Tape tape;
                    ad::TapeScope scope(tape);
                    zero_all(state);
                    const ad::Tensor fake = state.augmenter->forward(codes, Mode::train());
                    const auto out = state.critic->forward(cat(real, fake), Mode::train_frozen());
                    const ad::Tensor adv = losses::adv_loss_generator(ad::gather_rows(out.real_prob, fake_rows));
                    const ad::Tensor mi = losses::mi_lower_bound(onehot, ad::gather_rows(out.mi_logits, fake_rows));
                    const ad::Tensor loss = ad::sub(adv, ad::scale(mi, lambda));
                    finite_or_throw(loss, epoch, total_d_steps, "augmenter");
                    tape.backward(loss);
                    step(state, "augmenter", lr_g);
                });
                ++avg.g_steps;
            }
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.step = total_d_steps;
        m.d_steps = avg.d_steps;
        m.g_steps = avg.g_steps;
        const double d = static_cast<double>(std::max<std::int64_t>(avg.d_steps, 1));
        m.loss_gd = avg.gd / d;
        m.loss_clc = avg.clc / d;
        m.loss_mi = avg.mi / d;
        m.lr_g = lr_g;
        m.lr_d = lr_d;
        double total_codes = 0.0;
        for (double c : code_counts) total_codes += c;
        for (double c : code_counts) {
            if (c > 0) m.code_entropy -= c / total_codes * std::log(c / total_codes);
        }
        log.epochs.push_back(m);
        state.epoch = epoch + 1;
        if (on_epoch) {
            on_epoch(m, state);
        }
    }
}

corpus::CorpusIndex produce_augmented_set(const Checkpoint& augmenter, const corpus::ClassCounts& counts,
                                          std::uint64_t seed, const fs::path& out_dir,
                                          const corpus::CorruptionParams& corruption) {
    if (!augmenter.augmenter) {
        throw Error(ErrorCode::invalid_argument, "checkpoint holds no augmenter");
    }
    corruption.validate();
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    if (ec || !fs::is_directory(out_dir / "images")) {
        throw Error(ErrorCode::unwritable_directory, "cannot create " + (out_dir / "images").string());
    }
    const auto& net = *augmenter.augmenter;
    const std::size_t K = net.arch().code_dim;
    corpus::CorpusIndex index;
    index.root = out_dir;
    constexpr std::size_t kChunk = 64;
    for (std::size_t k = 0; k < corpus::kNumClasses; ++k) {
        if (counts[k] > 0 && k >= K) {
            throw Error(ErrorCode::label_out_of_range, "augmenter has no code for class " + std::to_string(k));
        }
        for (std::size_t start = 0; start < counts[k]; start += kChunk) {
            const std::size_t end = std::min(counts[k], start + kChunk);
            std::vector<models::LatentCode> codes;
            std::vector<corpus::ManifestRow> rows;
            for (std::size_t i = start; i < end; ++i) {
                corpus::ManifestRow row;
                char id[64];
                std::snprintf(id, sizeof id, "aug_%s_%05zu", std::string(corpus::kClassNames[k]).c_str(), i);
                row.id = id;
                row.path = "images/" + row.id + ".pgm";
                row.label = k;
                row.split = corpus::Split::train;
                row.corruption = corruption;
                row.seed = derive_seed(seed, {k, i});
                Rng rng(row.seed);
                codes.push_back(models::LatentCode::sample(k, K, net.arch().z_dim, rng));
                rows.push_back(std::move(row));
            }
            ad::Tensor images;
            {
                ad::NoGradGuard no_grad;
                images = net.forward(codes, Mode::eval());
            }
            const ad::Shape one{1, images.dim(2), images.dim(3)};
            const std::size_t pixels = ad::shape_numel(one);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto d = images.data().subspan(i * pixels, pixels);
                corpus::write_pgm(out_dir / rows[i].path, ad::Tensor(one, std::vector<double>(d.begin(), d.end())));
                index.rows.push_back(std::move(rows[i]));
            }
        }
    }
    corpus::write_manifest(index, out_dir / corpus::kManifestName);
    return index;
}

}  // namespace rmgan::pipeline
