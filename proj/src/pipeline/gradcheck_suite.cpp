#include "rmgan/pipeline/gradcheck_suite.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "rmgan/autodiff/ops.hpp"
#include "rmgan/common/rng.hpp"
#include "rmgan/losses/losses.hpp"
#include "rmgan/models/networks.hpp"

namespace rmgan::pipeline {

namespace {

using ad::Tensor;
using nn::Mode;

// Weights uniform with unit-variance fan-in scaling, everything else in
// [-1, 1]: pre-activations stay O(1) at any width.
void randomize(nn::ParamSet& ps, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& p : ps.params()) {
        double bound = 1.0;
        if (p.kind == nn::ParamKind::weight) {
            const double fan_in = static_cast<double>(p.value.numel() / p.value.dim(0));
            bound = std::sqrt(3.0 / fan_in);
        }
        for (double& v : p.value.mutable_data()) v = rng.uniform(-bound, bound);
    }
}

void append(std::vector<ad::NamedTensor>& out, const nn::ParamSet& ps) {
    for (const auto& p : ps.params()) out.push_back({std::string(nn::to_string(ps.owner())) + "/" + p.name, p.value});
}

Tensor uniform_images(std::size_t n, std::size_t size, Rng& rng) {
    Tensor t(ad::Shape{n, 1, size, size});
    for (double& v : t.mutable_data()) v = rng.uniform(0.02, 0.98);
    return t;
}

std::vector<std::size_t> labels_for(std::size_t n) {
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i % models::kNumClasses;
    return out;
}

ad::GradCheckOptions check_options(const GradcheckSuiteOptions& o, std::size_t entries, std::uint64_t tag) {
    ad::GradCheckOptions c;
    c.step = o.step;
    c.tolerance = o.tolerance;
    c.max_entries_per_tensor = entries;
    c.seed = derive_seed(o.seed, {tag});
    return c;
}

ad::GradCheckReport check_generator(const models::GeneratorArch& arch, const GradcheckSuiteOptions& o,
                                    std::size_t entries, std::uint64_t tag) {
    models::GeneratorNet g(arch, derive_seed(o.seed, {tag, 1}));
    randomize(g.params(), derive_seed(o.seed, {tag, 2}));
    Rng rng(derive_seed(o.seed, {tag, 3}));
    const Tensor x = uniform_images(o.batch, arch.image_size, rng);
    const Tensor target = uniform_images(o.batch, arch.image_size, rng);
    std::vector<ad::NamedTensor> params;
    append(params, g.params());
    return ad::check_gradients([&] { return losses::mse_loss(g.forward(x, Mode::train_frozen()), target); }, params,
                               check_options(o, entries, tag));
}

// Real/fake, class and latent-code heads all feed the loss.
ad::GradCheckReport check_discriminator(const models::DiscriminatorArch& arch, const GradcheckSuiteOptions& o,
                                        std::size_t entries, std::uint64_t tag) {
    models::DiscriminatorNet d(arch, derive_seed(o.seed, {tag, 1}));
    randomize(d.params(), derive_seed(o.seed, {tag, 2}));
    randomize(d.mi_params(), derive_seed(o.seed, {tag, 4}));
    Rng rng(derive_seed(o.seed, {tag, 3}));
    const Tensor x = uniform_images(o.batch, arch.image_size, rng);
    const auto labels = labels_for(o.batch);
    const Tensor codes = losses::one_hot(labels, arch.code_dim);
    std::vector<ad::NamedTensor> params;
    append(params, d.params());
    append(params, d.mi_params());
    return ad::check_gradients(
        [&] {
            const auto out = d.forward(x, Mode::train_frozen());
            const Tensor adv = losses::adv_loss_generator(out.real_prob);
            const Tensor clc = losses::cross_entropy(out.class_logits, labels);
            const Tensor mi = losses::mi_lower_bound(codes, out.mi_logits);
            return ad::sub(ad::add(adv, clc), mi);
        },
        params, check_options(o, entries, tag));
}

ad::GradCheckReport check_augmenter(const models::AugmenterArch& arch, const GradcheckSuiteOptions& o,
                                    std::size_t entries, std::uint64_t tag) {
    models::AugmentGeneratorNet a(arch, derive_seed(o.seed, {tag, 1}));
    randomize(a.params(), derive_seed(o.seed, {tag, 2}));
    Rng rng(derive_seed(o.seed, {tag, 3}));
    std::vector<models::LatentCode> codes;
    for (std::size_t i = 0; i < o.batch; ++i) {
        codes.push_back(models::LatentCode::sample(i % arch.code_dim, arch.code_dim, arch.z_dim, rng));
    }
    const Tensor target = uniform_images(o.batch, arch.image_size, rng);
    std::vector<ad::NamedTensor> params;
    append(params, a.params());
    return ad::check_gradients([&] { return losses::mse_loss(a.forward(codes, Mode::train_frozen()), target); },
                               params, check_options(o, entries, tag));
}

}  // namespace

GradcheckSuiteReport run_gradcheck_suite(const GradcheckSuiteOptions& options) {
    GradcheckSuiteReport r;
    r.parts.push_back({"generator/reduced", check_generator(models::tiny_generator_arch(), options, 0, 1)});
    r.parts.push_back({"discriminator/reduced", check_discriminator(models::tiny_discriminator_arch(), options, 0, 2)});
    r.parts.push_back({"augmenter/reduced", check_augmenter(models::tiny_augmenter_arch(), options, 0, 3)});
    if (options.full_size_entries > 0) {
        r.parts.push_back({"generator/full", check_generator({}, options, options.full_size_entries, 4)});
        r.parts.push_back({"discriminator/full", check_discriminator({}, options, options.full_size_entries, 5)});
        r.parts.push_back({"augmenter/full", check_augmenter({}, options, options.full_size_entries, 6)});
    }
    r.passed = true;
    for (const auto& p : r.parts) {
        r.max_rel_error = std::max(r.max_rel_error, p.report.max_rel_error);
        r.checked += p.report.checked;
        r.skipped += p.report.skipped;
        r.passed = r.passed && p.report.passed;
    }
    return r;
}

std::string GradcheckSuiteReport::to_text() const {
    std::ostringstream out;
    char line[160];
    for (const auto& p : parts) {
        std::snprintf(line, sizeof line, "%-24s checked %6zu  skipped %5zu  max_rel_error %.3e  %s\n", p.name.c_str(),
                      p.report.checked, p.report.skipped, p.report.max_rel_error, p.report.passed ? "ok" : "FAIL");
        out << line;
    }
    std::snprintf(line, sizeof line, "total: checked %zu, skipped at kinks %zu, max_rel_error %.3e, %s\n", checked,
                  skipped, max_rel_error, passed ? "passed" : "FAILED");
    out << line;
    return out.str();
}

}  // namespace rmgan::pipeline
