// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.
//
// Usage: rmgan_acceptance [--work DIR] [--only NAME[,NAME...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rmgan/autodiff/ops.hpp"
#include "rmgan/autodiff/tape.hpp"
#include "rmgan/common/allocator.hpp"
#include "rmgan/common/error.hpp"
#include "rmgan/corpus/corpus.hpp"
#include "rmgan/corpus/image_io.hpp"
#include "rmgan/eval/eval.hpp"
#include "rmgan/losses/losses.hpp"
#include "rmgan/nn/optim.hpp"
#include "rmgan/pipeline/checkpoint.hpp"
#include "rmgan/pipeline/gradcheck_suite.hpp"
#include "rmgan/pipeline/train.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace fs = std::filesystem;
using namespace rmgan;
using Clock = std::chrono::steady_clock;

namespace {

// Scales of the multi-seed experiments (the end-to-end run uses the full corpus).
constexpr std::uint64_t kE2eSeed = 1;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr double kStudyCorpusScale = 0.5;
constexpr int kReferenceEpochs = 10;
constexpr int kAugmenterEpochs = 5;
constexpr std::size_t kConsistencyPerClass = 100;
constexpr double kAblationAugScale = 0.1;
constexpr int kAblationEpochs = 10;
constexpr int kResumeAfter = 9;  // completed epochs before the learning-rate switch

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o) {
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

void info(const std::string& text) {
    std::printf("     %s\n", text.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Runs a criterion body; an escaping exception is a failure with its message.
void check(const std::string& name, const std::function<Outcome()>& body) {
    try {
        report(name, body());
    } catch (const std::exception& e) {
        report(name, {false, std::string("threw: ") + e.what()});
    }
}

// ---------------------------------------------------------------------------

void gradient_correctness() {
    check("gradcheck", [] {
        const auto t = Clock::now();
        const auto r = pipeline::run_gradcheck_suite({});
        const double s = seconds_since(t);
        return Outcome{r.passed && r.max_rel_error < 1e-3 && s < 120.0,
                       fmt("max rel error %.3e over %zu entries (%zu skipped at kinks), %.1f s", r.max_rel_error,
                           r.checked, r.skipped, s)};
    });
}

void convolution_oracle() {
    check("conv_oracle", [] {
        Rng rng(11);
        double worst_fwd = 0.0, worst_tr = 0.0, worst_adj = 0.0;
        std::size_t cases = 0, adjoint_cases = 0;
        for (int stride : {1, 2}) {
            for (int pad : {0, 1}) {
                for (std::size_t kernel : {1u, 3u, 4u}) {
                    for (std::size_t h : {7u, 8u, 9u}) {
                        if (h + 2 * pad < kernel) continue;
                        const ad::Tensor x = test::random_tensor({2, 3, h, h}, rng);
                        const ad::Tensor k = test::random_tensor({4, 3, kernel, kernel}, rng);
                        const ad::Tensor b = test::random_tensor({4}, rng);
                        std::size_t oh = 0, ow = 0;
                        const auto expect = test::naive_conv2d(x, k, b, stride, pad, oh, ow);
                        const ad::Tensor y = ad::conv2d(x, k, b, stride, pad);
                        worst_fwd = std::max(worst_fwd, test::max_abs_diff(y.data(), expect));

                        // Transposed convolution of a [2,4,oh,ow] map with a [4,3,k,k] kernel.
                        const ad::Tensor probe = test::random_tensor({2, 4, oh, ow}, rng);
                        const ad::Tensor tb = test::random_tensor({3}, rng);
                        std::size_t th = 0, tw = 0;
                        const auto texpect = test::naive_conv2d_transpose(probe, k, tb, stride, pad, th, tw);
                        const ad::Tensor ty = ad::conv2d_transpose(probe, k, tb, stride, pad);
                        worst_tr = std::max(worst_tr, test::max_abs_diff(ty.data(), texpect));

                        // <conv(x), p> == <x, conv^T(p)> with zero biases.
                        const ad::Tensor y0 = ad::conv2d(x, k, ad::Tensor({4}), stride, pad);
                        const ad::Tensor back = ad::conv2d_transpose(probe, k, ad::Tensor({3}), stride, pad);
                        if (back.shape() == x.shape()) {
                            worst_adj = std::max(worst_adj, std::abs(test::inner(y0.data(), probe.data()) -
                                                                     test::inner(x.data(), back.data())));
                            ++adjoint_cases;
                        }
                        ++cases;
                    }
                }
            }
        }
        return Outcome{worst_fwd < 1e-12 && worst_tr < 1e-12 && worst_adj < 1e-10,
                       fmt("%zu geometries: conv2d %.2e, conv2d_transpose %.2e, adjoint %.2e over %zu", cases,
                           worst_fwd, worst_tr, worst_adj, adjoint_cases)};
    });
}

// A two-layer discriminator over one-hot bins, trained by Adam on minibatches
// drawn from pt (label real) and pz (label fake).
std::vector<double> train_bin_discriminator(const std::vector<double>& pt, const std::vector<double>& pz,
                                            std::uint64_t seed) {
    const std::size_t bins = pt.size(), hidden = 16, half = 256;
    nn::ParamSet params(nn::Owner::discriminator);
    ad::Tensor w1 = params.add("w1", {hidden, bins}, nn::ParamKind::weight);
    ad::Tensor b1 = params.add("b1", {hidden}, nn::ParamKind::bias);
    ad::Tensor w2 = params.add("w2", {1, hidden}, nn::ParamKind::weight);
    ad::Tensor b2 = params.add("b2", {1}, nn::ParamKind::bias);
    Rng rng(seed);
    for (auto& p : params.params()) {
        if (p.kind == nn::ParamKind::weight) {
            for (double& v : p.value.mutable_data()) v = rng.uniform(-0.5, 0.5);
        }
    }
    auto forward = [&](const ad::Tensor& x) {
        const ad::Tensor h = ad::leaky_relu(ad::linear(x, w1, b1), 0.2);
        return ad::reshape(ad::sigmoid(ad::linear(h, w2, b2)), {x.dim(0)});
    };
    auto draw = [&](const std::vector<double>& p) {
        ad::Tensor x({half, bins});
        for (std::size_t i = 0; i < half; ++i) {
            double u = rng.uniform(0.0, 1.0);
            std::size_t k = 0;
            while (k + 1 < bins && u >= p[k]) u -= p[k++];
            x.mutable_data()[i * bins + k] = 1.0;
        }
        return x;
    };
    nn::AdamState adam(params);
    const double rates[] = {1e-2, 3e-3, 1e-3, 3e-4};
    for (double lr : rates) {
        for (int step = 0; step < 2000; ++step) {
            const ad::Tensor real = draw(pt), fake = draw(pz);
            params.zero_grad();
            ad::Tape tape;
            {
                ad::TapeScope scope(tape);
                const ad::Tensor loss = losses::adv_loss_discriminator(forward(real), forward(fake));
                tape.backward(loss);
            }
            nn::adam_step(params, adam, lr);
        }
    }
    ad::NoGradGuard guard;
    ad::Tensor eye({bins, bins});
    for (std::size_t k = 0; k < bins; ++k) eye.mutable_data()[k * bins + k] = 1.0;
    const ad::Tensor d = forward(eye);
    return {d.data().begin(), d.data().end()};
}

void optimal_discriminator_check() {
    check("optimal_discriminator", [] {
        const std::vector<double> pt = {.05, .10, .20, .15, .05, .25, .10, .10};
        const std::vector<double> pz = {.20, .05, .10, .10, .25, .05, .15, .10};
        const auto target = losses::optimal_discriminator(pt, pz);
        const auto d = train_bin_discriminator(pt, pz, 21);
        double worst = 0.0;
        for (std::size_t k = 0; k < pt.size(); ++k) worst = std::max(worst, std::abs(d[k] - target[k]));

        const auto same = train_bin_discriminator(pt, pt, 22);
        double worst_same = 0.0;
        for (double v : same) worst_same = std::max(worst_same, std::abs(v - 0.5));
        return Outcome{worst < 0.05 && worst_same <= 0.02,
                       fmt("max |D - D*| = %.4f (tol 0.05); equal distributions max |D - 0.5| = %.4f (tol 0.02)",
                           worst, worst_same)};
    });
}

void mi_bound_check() {
    check("mi_bound", [] {
        const double ln10 = std::log(10.0);
        Rng rng(31);
        double max_bound = -1e300;
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = 1 + rng.below(64);
            std::vector<std::size_t> labels(n);
            for (auto& l : labels) l = rng.below(10);
            ad::Tensor logits = test::random_tensor({n, 10}, rng, -30.0, 30.0);
            // Every other batch has Q sharply favouring the true code.
            if (trial % 2 == 1) {
                for (std::size_t i = 0; i < n; ++i) logits.mutable_data()[i * 10 + labels[i]] += 80.0;
            }
            max_bound = std::max(max_bound, losses::mi_lower_bound(losses::one_hot(labels, 10), logits).item());
        }

        std::vector<std::size_t> uniform;
        for (std::size_t i = 0; i < 100; ++i) uniform.push_back(i % 10);
        ad::Tensor exact({100, 10}, -60.0);
        for (std::size_t i = 0; i < 100; ++i) exact.mutable_data()[i * 10 + uniform[i]] = 60.0;
        const double perfect = losses::mi_lower_bound(losses::one_hot(uniform, 10), exact).item();

        // Enumerated 2x2 joints with cell probabilities in multiples of 1/N;
        // Q is the exact posterior p(c | x).
        const std::size_t N = 60;
        double worst_brute = 0.0;
        std::size_t joints = 0;
        for (std::size_t a = 0; a <= N; a += 6) {
            for (std::size_t b = 0; a + b <= N; b += 6) {
                for (std::size_t c = 0; a + b + c <= N; c += 6) {
                    const std::size_t t[4] = {a, b, c, N - a - b - c};
                    double joint[2][2] = {{t[0] / double(N), t[1] / double(N)}, {t[2] / double(N), t[3] / double(N)}};
                    const double pc[2] = {joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]};
                    const double px[2] = {joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]};
                    double mi = 0.0;
                    for (int ci = 0; ci < 2; ++ci)
                        for (int x = 0; x < 2; ++x)
                            if (joint[ci][x] > 0) mi += joint[ci][x] * std::log(joint[ci][x] / (pc[ci] * px[x]));
                    std::vector<std::size_t> labels;
                    std::vector<double> logits;
                    for (int ci = 0; ci < 2; ++ci)
                        for (int x = 0; x < 2; ++x)
                            for (std::size_t r = 0; r < t[ci * 2 + x]; ++r) {
                                labels.push_back(static_cast<std::size_t>(ci));
                                for (int c2 = 0; c2 < 2; ++c2) {
                                    const double post = joint[c2][x] / px[x];
                                    logits.push_back(post > 0 ? std::log(post) : -800.0);
                                }
                            }
                    const double bound =
                        losses::mi_lower_bound(losses::one_hot(labels, 2), ad::Tensor({N, 2}, std::move(logits))).item();
                    worst_brute = std::max(worst_brute, std::abs(bound - mi));
                    ++joints;
                }
            }
        }
        return Outcome{max_bound <= ln10 + 1e-9 && std::abs(perfect - ln10) < 1e-6 && worst_brute < 1e-9,
                       fmt("max over 1000 random batches %.6f <= ln10 %.6f; perfect Q gap %.2e; %zu enumerated "
                           "joints worst gap %.2e",
                           max_bound, ln10, std::abs(perfect - ln10), joints, worst_brute)};
    });
}

// ---------------------------------------------------------------------------

struct Run {
    pipeline::Checkpoint state;
    pipeline::MetricLog log;
    double seconds = 0.0;
};

Run train_full(std::span<const corpus::LabeledSample> train, const pipeline::EpochCallback& cb = {}) {
    Run run;
    pipeline::TrainConfig config;
    config.seed = kE2eSeed;
    run.state = pipeline::new_main_checkpoint(config);
    const auto t = Clock::now();
    pipeline::train_main(train, run.state, run.log, cb);
    run.seconds = seconds_since(t);
    return run;
}

void end_to_end_and_determinism(const fs::path& work) {
    const fs::path data = work / "e2e_data";
    const auto index = corpus::make_corpus(corpus::kDefaultCounts, {}, kE2eSeed, data);
    const auto train = corpus::load_samples(index, corpus::Split::train);
    const auto test = corpus::load_samples(index, corpus::Split::test);
    info(fmt("corpus: %zu train, %zu test samples", train.size(), test.size()));

    Run first = train_full(train, [](const pipeline::EpochMetrics& m, const pipeline::Checkpoint&) {
        info(fmt("epoch %2d  gd %.4f  mse %.5f  clc %.4f  mi %.4f", m.epoch, m.loss_gd, m.loss_mse, m.loss_clc,
                 m.loss_mi));
    });
    const fs::path ckpt_a = work / "e2e_a.bin";
    pipeline::save_checkpoint(first.state, ckpt_a);
    first.log.write_tsv(work / "e2e_a_metrics.tsv");

    const auto acc = eval::classify_accuracy(first.state, test, eval::pipeline_mode(first.state));
    const auto deblur = eval::deblur_decimate_report(first.state, test);
    info(fmt("%d epochs in %.1f s; restored_mse %.5f corrupted_mse %.5f delta_neg %.5f", int(first.log.epochs.size()),
             first.seconds, deblur.restored_mse, deblur.corrupted_mse, deblur.delta_neg));

    report("e2e.accuracy", {acc.overall >= 0.90, fmt("overall test accuracy %.4f (target >= 0.90)", acc.overall)});
    report("e2e.deblur_gap", {deblur.delta_pos > 0.0,
                              fmt("delta_pos %.5f = corrupted %.5f - restored %.5f (target > 0)", deblur.delta_pos,
                                  deblur.corrupted_mse, deblur.restored_mse)});
    const double ratio = deblur.delta_neg / deblur.restored_mse;
    report("e2e.decimation", {ratio >= 2.0, fmt("negatives' error %.5f / positives' error %.5f = %.3f (target >= 2)",
                                                deblur.delta_neg, deblur.restored_mse, ratio)});
    report("e2e.runtime", {first.seconds <= 30 * 60.0 && first.log.epochs.size() == 30,
                           fmt("%zu epochs, %.1f s (limit 1800 s)", first.log.epochs.size(), first.seconds)});
    const double mse_first = first.log.epochs.front().loss_mse, mse_last = first.log.epochs.back().loss_mse;
    info(fmt("reconstruction error epoch 1 %.5f -> final %.5f (ratio %.3f)", mse_first, mse_last,
             mse_last / mse_first));

    // Determinism: a second identical run, saving a checkpoint before the
    // learning-rate switch, then a resume from that checkpoint.
    const fs::path ckpt_mid = work / "e2e_mid.bin";
    Run second = train_full(train, [&](const pipeline::EpochMetrics&, const pipeline::Checkpoint& s) {
        if (s.epoch == kResumeAfter) pipeline::save_checkpoint(s, ckpt_mid);
    });
    const fs::path ckpt_b = work / "e2e_b.bin";
    pipeline::save_checkpoint(second.state, ckpt_b);
    const bool same_log = first.log.to_tsv() == second.log.to_tsv();
    const bool same_ckpt = test::read_bytes(ckpt_a) == test::read_bytes(ckpt_b);

    auto resumed = pipeline::load_checkpoint(ckpt_mid);
    pipeline::MetricLog tail;
    pipeline::train_main(train, resumed, tail);
    const fs::path ckpt_r = work / "e2e_resumed.bin";
    pipeline::save_checkpoint(resumed, ckpt_r);
    pipeline::MetricLog expected_tail;
    expected_tail.epochs.assign(second.log.epochs.begin() + kResumeAfter, second.log.epochs.end());
    const bool same_resumed_ckpt = test::read_bytes(ckpt_r) == test::read_bytes(ckpt_b);
    const bool same_resumed_log = tail.to_tsv() == expected_tail.to_tsv();
    auto word = [](bool same) { return same ? "identical" : "DIFFERS"; };
    report("determinism",
           {same_log && same_ckpt && same_resumed_ckpt && same_resumed_log,
            fmt("repeat run: metric log %s, checkpoint %s; resume after epoch %d: checkpoint %s, metric rows %s",
                word(same_log), word(same_ckpt), kResumeAfter, word(same_resumed_ckpt), word(same_resumed_log))});

    // Format round trips on the trained artifacts.
    check("format_roundtrip", [&] {
        std::vector<std::string> problems;
        auto note = [&](bool ok, const std::string& what) {
            if (!ok) problems.push_back(what);
        };

        // Corpus: ingest of the written directory reproduces rows and images.
        const auto again = corpus::ingest_external(data, "manifest.tsv");
        note(again.rows.size() == index.rows.size(), "manifest row count");
        const auto all_a = corpus::load_samples(index), all_b = corpus::load_samples(again);
        bool same_samples = all_a.size() == all_b.size();
        for (std::size_t i = 0; same_samples && i < all_a.size(); ++i) {
            same_samples = all_a[i].id == all_b[i].id && all_a[i].label == all_b[i].label &&
                           std::ranges::equal(all_a[i].clean.data(), all_b[i].clean.data()) &&
                           std::ranges::equal(all_a[i].corrupted.data(), all_b[i].corrupted.data());
        }
        note(same_samples, "ingested samples differ");

        // Checkpoint: load then save reproduces the bytes.
        const fs::path resaved = work / "e2e_resaved.bin";
        pipeline::save_checkpoint(pipeline::load_checkpoint(ckpt_a), resaved);
        const std::string bytes = test::read_bytes(ckpt_a);
        note(test::read_bytes(resaved) == bytes, "checkpoint resave differs");

        // Damage: truncations and byte flips must raise structured errors.
        std::size_t damaged = 0, structured = 0;
        auto try_load = [&](const std::string& content) {
            const fs::path p = work / "damaged.bin";
            test::write_bytes(p, content);
            ++damaged;
            try {
                pipeline::load_checkpoint(p);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::corrupt_file || e.code() == ErrorCode::version_mismatch) ++structured;
            }
        };
        Rng rng(41);
        for (int i = 0; i < 40; ++i) try_load(bytes.substr(0, rng.below(bytes.size())));
        for (int i = 0; i < 40; ++i) {
            std::string flipped = bytes;
            flipped[rng.below(flipped.size())] ^= static_cast<char>(1 + rng.below(255));
            try_load(flipped);
        }
        try_load("");
        note(structured == damaged, fmt("%zu of %zu damaged checkpoints not rejected", damaged - structured, damaged));

        std::size_t pgm_cases = 0, pgm_structured = 0;
        const std::string pgm = test::read_bytes(data / index.rows.front().path);
        for (int i = 0; i < 20; ++i) {
            const fs::path p = work / "damaged.pgm";
            test::write_bytes(p, pgm.substr(0, rng.below(pgm.size())));
            ++pgm_cases;
            try {
                corpus::read_pgm(p);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::corrupt_file) ++pgm_structured;
            }
        }
        note(pgm_structured == pgm_cases, fmt("%zu truncated PGMs not rejected", pgm_cases - pgm_structured));

        // Deltas recomputed from dumped pixel values.
        const fs::path dump = work / "e2e_dump";
        std::vector<corpus::LabeledSample> picked;
        for (std::size_t i = 0; i < test.size(); i += 7) picked.push_back(test[i]);
        const auto restore = eval::generator_restore(*first.state.generator);
        eval::dump_triptychs(restore, picked, dump);
        const auto rep = eval::deblur_decimate_report(restore, picked);
        std::ifstream in(dump / "values.tsv");
        std::string line;
        std::getline(in, line);
        std::map<std::string, std::map<std::string, std::vector<double>>> panels;
        std::map<std::string, bool> positive;
        while (std::getline(in, line)) {
            std::istringstream row(line);
            std::string id, label, panel;
            row >> id >> label >> panel;
            std::vector<double> values;
            double v;
            while (row >> v) values.push_back(v);
            panels[id][panel] = std::move(values);
            positive[id] = label != "NULL";
        }
        double cor = 0, res = 0, neg = 0;
        std::size_t np = 0, nn = 0;
        for (auto& [id, p] : panels) {
            if (positive[id]) {
                cor += test::mean_sq_diff(p["corrupted"], p["clean"]);
                res += test::mean_sq_diff(p["restored"], p["clean"]);
                ++np;
            } else {
                neg += test::mean_sq_diff(p["restored"], p["corrupted"]);
                ++nn;
            }
        }
        const double dpos = (cor - res) / np, dneg = neg / nn;
        const double gap = std::max(std::abs(dpos - rep.delta_pos), std::abs(dneg - rep.delta_neg));
        note(gap < 1e-10, fmt("dumped deltas differ by %.2e", gap));

        std::string detail = fmt("%zu samples re-ingested, checkpoint resave byte-identical, %zu damaged checkpoints "
                                 "and %zu truncated PGMs rejected, dump deltas within %.1e",
                                 all_a.size(), damaged, pgm_cases, gap);
        for (const auto& p : problems) detail += "; " + p;
        return Outcome{problems.empty(), detail};
    });
}

// ---------------------------------------------------------------------------

struct StudySeed {
    eval::ConsistencyReport mi, vanilla;
    double mi_first = 0.0, mi_last = 0.0;
    eval::AblationRow full, no_generator, no_clc;
};

eval::AblationRow row_of(const std::vector<eval::AblationRow>& rows, const std::string& name) {
    for (const auto& r : rows)
        if (r.variant == name) return r;
    throw Error(ErrorCode::invalid_argument, "missing ablation row " + name);
}

StudySeed run_study(std::uint64_t seed, const fs::path& work) {
    StudySeed out;
    const fs::path dir = work / ("study_" + std::to_string(seed));
    const auto index = corpus::make_corpus(corpus::scale_counts(corpus::kDefaultCounts, kStudyCorpusScale), {}, seed,
                                           dir / "data");
    const auto train = corpus::load_samples(index, corpus::Split::train);
    const auto test = corpus::load_samples(index, corpus::Split::test);

    pipeline::TrainConfig ref_config;
    ref_config.seed = seed;
    ref_config.epochs = kReferenceEpochs;
    ref_config.use_generator = false;
    auto reference = pipeline::new_main_checkpoint(ref_config);
    pipeline::MetricLog ref_log;
    pipeline::train_main(train, reference, ref_log);

    corpus::ClassCounts per_class;
    per_class.fill(kConsistencyPerClass);
    pipeline::Checkpoint mi_augmenter;
    for (double lambda_mi : {1.0, 0.0}) {
        pipeline::TrainConfig config;
        config.seed = seed;
        config.epochs = kAugmenterEpochs;
        config.loss_weights.lambda_mi = lambda_mi;
        auto state = pipeline::new_augmenter_checkpoint(config);
        pipeline::MetricLog log;
        pipeline::train_augmenter(train, state, log);
        const std::string tag = lambda_mi > 0 ? "mi" : "vanilla";
        const auto gen_index = pipeline::produce_augmented_set(state, per_class, seed, dir / ("gen_" + tag));
        const auto generated = corpus::load_samples(gen_index);
        const auto consistency = eval::augmentation_consistency(generated, reference);
        if (lambda_mi > 0) {
            out.mi = consistency;
            out.mi_first = log.epochs.front().loss_mi;
            out.mi_last = log.epochs.back().loss_mi;
            mi_augmenter = std::move(state);
        } else {
            out.vanilla = consistency;
        }
    }

    const auto aug_index = pipeline::produce_augmented_set(
        mi_augmenter, corpus::scale_counts(corpus::kAugmentedCounts, kAblationAugScale), seed + 1000, dir / "aug");
    const auto augmented = corpus::load_samples(aug_index);
    pipeline::TrainConfig config;
    config.seed = seed;
    config.epochs = kAblationEpochs;
    const auto rows = eval::run_ablation(train, test, augmented, config);
    out.full = row_of(rows, "full");
    out.no_generator = row_of(rows, "no_generator");
    out.no_clc = row_of(rows, "no_classification_loss");
    return out;
}

void augmentation_and_ablation(const fs::path& work) {
    std::vector<StudySeed> seeds;
    for (std::uint64_t seed : kSeeds) {
        const auto t = Clock::now();
        try {
            seeds.push_back(run_study(seed, work));
        } catch (const std::exception& e) {
            report("augmentation", {false, fmt("seed %llu threw: %s", (unsigned long long)seed, e.what())});
            report("ablation", {false, "study did not complete"});
            return;
        }
        const auto& s = seeds.back();
        std::string per;
        for (std::size_t k = 0; k < corpus::kNumClasses; ++k) per += fmt(" %.2f", s.mi.per_class(k));
        info(fmt("seed %llu (%.0f s): consistency MI %.4f vanilla %.4f; MI per class%s", (unsigned long long)seed,
                 seconds_since(t), s.mi.overall, s.vanilla.overall, per.c_str()));
        info(fmt("seed %llu: MI bound first epoch %.4f last %.4f; accuracy full %.4f no_generator %.4f "
                 "no_classification_loss %.4f",
                 (unsigned long long)seed, s.mi_first, s.mi_last, s.full.pipeline_accuracy,
                 s.no_generator.pipeline_accuracy, s.no_clc.pipeline_accuracy));
    }

    bool ordered = true, per_class_ok = true;
    double worst_class = 1.0;
    std::string detail;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        ordered = ordered && seeds[i].mi.overall > seeds[i].vanilla.overall;
        worst_class = std::min(worst_class, seeds[i].mi.min_per_class());
        per_class_ok = per_class_ok && seeds[i].mi.min_per_class() >= 0.70;
        detail += fmt("%sseed %llu MI %.3f > vanilla %.3f", i ? "; " : "", (unsigned long long)kSeeds[i],
                      seeds[i].mi.overall, seeds[i].vanilla.overall);
    }
    detail += fmt("; worst MI per-class consistency %.3f (target >= 0.70)", worst_class);
    report("augmentation", {ordered && per_class_ok, detail});

    int beats_generator = 0, beats_clc = 0;
    for (const auto& s : seeds) {
        beats_generator += s.full.pipeline_accuracy >= s.no_generator.pipeline_accuracy;
        beats_clc += s.full.pipeline_accuracy >= s.no_clc.pipeline_accuracy;
    }
    const int majority = static_cast<int>(seeds.size()) / 2 + 1;
    report("ablation", {beats_generator >= majority && beats_clc >= majority,
                        fmt("full >= no_generator in %d/%zu seeds, full >= no_classification_loss in %d/%zu seeds",
                            beats_generator, seeds.size(), beats_clc, seeds.size())});
}

}  // namespace

int main(int argc, char** argv) {
    tune_allocator();
    fs::path work;
    std::set<std::string> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--work" && i + 1 < argc) {
            work = argv[++i];
        } else if (arg == "--only" && i + 1 < argc) {
            std::stringstream list(argv[++i]);
            for (std::string name; std::getline(list, name, ',');) only.insert(name);
        } else {
            std::cerr << "usage: rmgan_acceptance [--work DIR] [--only NAME[,NAME...]]\n";
            return 2;
        }
    }
    std::optional<test::TempDir> scratch;
    if (work.empty()) {
        scratch.emplace("acceptance");
        work = scratch->path();
    }
    fs::create_directories(work);
    auto wanted = [&](const std::string& name) { return only.empty() || only.count(name) > 0; };

    const auto t = Clock::now();
    if (wanted("gradcheck")) gradient_correctness();
    if (wanted("conv")) convolution_oracle();
    if (wanted("discriminator")) optimal_discriminator_check();
    if (wanted("mi")) mi_bound_check();
    if (wanted("e2e")) end_to_end_and_determinism(work);
    if (wanted("study")) augmentation_and_ablation(work);
    std::printf("%d criteria failed; total %.0f s\n", failures, seconds_since(t));
    return failures == 0 ? 0 : 1;
}
