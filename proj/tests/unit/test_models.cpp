#include <cmath>

#include "doctest.h"
#include "rmgan/autodiff/gradcheck.hpp"
#include "rmgan/autodiff/ops.hpp"
#include "rmgan/autodiff/tape.hpp"
#include "rmgan/common/error.hpp"
#include "rmgan/models/networks.hpp"
#include "support/oracles.hpp"

using namespace rmgan;
using namespace rmgan::models;
using ad::Tensor;
using nn::Mode;
using rmgan::test::random_tensor;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

// Finite differences at the 0.01-scale init flip many activation signs per
// step; checks run on parameters spread over [-1, 1] instead.
void randomize(nn::ParamSet& ps, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& p : ps.params()) {
        for (double& v : p.value.mutable_data()) v = rng.uniform(-1.0, 1.0);
    }
}

std::vector<ad::NamedTensor> named(const nn::ParamSet& ps) {
    std::vector<ad::NamedTensor> out;
    for (const auto& p : ps.params()) out.push_back({p.name, p.value});
    return out;
}

}  // namespace

TEST_CASE("generator preserves shape and stays in (0,1)") {
    GeneratorNet g({}, 1);
    Rng rng(2);
    for (std::size_t n : {1u, 4u}) {
        const Tensor x = random_tensor({n, 1, 32, 32}, rng, 0.0, 1.0);
        for (Mode mode : {Mode::train(), Mode::eval()}) {
            if (n == 1 && mode.bn == ad::BnMode::train) continue;
            const Tensor y = g.forward(x, mode);
            CHECK(y.shape() == x.shape());
            for (double v : y.data()) {
                CHECK(v > 0.0);
                CHECK(v < 1.0);
            }
        }
    }
}

TEST_CASE("networks reject wrong shapes and out-of-range pixels") {
    GeneratorNet g({}, 1);
    DiscriminatorNet d({}, 1);
    CHECK_THROWS_AS(g.forward(Tensor({2, 1, 16, 16}, 0.5), Mode::eval()), Error);
    CHECK_THROWS_AS(d.forward(Tensor({2, 3, 32, 32}, 0.5), Mode::eval()), Error);
    CHECK_THROWS_AS(g.forward(Tensor({1, 1, 32, 32}, 1.5), Mode::eval()), Error);
}

TEST_CASE("parameter counts match the architecture descriptors") {
    GeneratorNet g({}, 0);
    DiscriminatorNet d({}, 0);
    AugmentGeneratorNet a({}, 0);
    CHECK(g.params().scalar_count() == g.arch().parameter_count());
    CHECK(d.params().scalar_count() == d.arch().parameter_count());
    CHECK(d.mi_params().scalar_count() == d.arch().mi_head_parameter_count());
    CHECK(a.params().scalar_count() == a.arch().parameter_count());

    GeneratorNet tg(tiny_generator_arch(), 0);
    DiscriminatorNet td(tiny_discriminator_arch(), 0);
    AugmentGeneratorNet ta(tiny_augmenter_arch(), 0);
    CHECK(tg.params().scalar_count() == tg.arch().parameter_count());
    CHECK(td.params().scalar_count() == td.arch().parameter_count());
    CHECK(ta.params().scalar_count() == ta.arch().parameter_count());
}

TEST_CASE("no batch norm after the generator's last layer or the discriminator's first") {
    GeneratorNet g({}, 0);
    DiscriminatorNet d({}, 0);
    CHECK(g.params().find("dec3.bn.gamma") == nullptr);
    CHECK(g.params().find("dec2.bn.gamma") != nullptr);
    CHECK(d.params().find("conv1.bn.gamma") == nullptr);
    CHECK(d.params().find("conv2.bn.gamma") != nullptr);
}

TEST_CASE("fresh discriminator is near chance on every head") {
    for (std::uint64_t seed : {7u, 8u, 9u}) {
        DiscriminatorNet d({}, seed);
        Rng rng(seed + 100);
        const Tensor x = random_tensor({6, 1, 32, 32}, rng, 0.0, 1.0);
        const auto out = d.forward(x, Mode::eval());
        CHECK(out.real_prob.shape() == ad::Shape{6});
        CHECK(out.class_logits.shape() == ad::Shape{6, kNumClasses});
        CHECK(out.mi_logits.shape() == ad::Shape{6, kNumClasses});
        for (double p : out.real_prob.data()) {
            CHECK(p > 0.45);
            CHECK(p < 0.55);
        }
        const Tensor probs = ad::softmax(out.class_logits, 1);
        for (std::size_t i = 0; i < 6; ++i) {
            double row = 0.0;
            for (std::size_t k = 0; k < kNumClasses; ++k) {
                const double p = probs.data()[i * kNumClasses + k];
                CHECK(p < 0.2);
                row += p;
            }
            CHECK(std::abs(row - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("perturbing the class head leaves real_prob bit-identical") {
    DiscriminatorNet d({}, 3);
    Rng rng(4);
    const Tensor x = random_tensor({3, 1, 32, 32}, rng, 0.0, 1.0);
    const auto before = d.forward(x, Mode::eval());
    for (auto& p : d.params().params()) {
        if (p.name.rfind("head_clc", 0) == 0) {
            for (double& v : p.value.mutable_data()) v += 0.37;
        }
    }
    for (auto& p : d.mi_params().params()) {
        for (double& v : p.value.mutable_data()) v -= 0.21;
    }
    const auto after = d.forward(x, Mode::eval());
    CHECK(values(after.real_prob) == values(before.real_prob));
    CHECK(values(after.class_logits) != values(before.class_logits));
}

TEST_CASE("eval-mode forwards are deterministic and construction is seeded") {
    Rng rng(5);
    const Tensor x = random_tensor({2, 1, 32, 32}, rng, 0.0, 1.0);
    GeneratorNet g1({}, 11), g2({}, 11), g3({}, 12);
    CHECK(values(g1.forward(x, Mode::eval())) == values(g1.forward(x, Mode::eval())));
    CHECK(values(g1.forward(x, Mode::eval())) == values(g2.forward(x, Mode::eval())));
    CHECK(values(g1.forward(x, Mode::eval())) != values(g3.forward(x, Mode::eval())));
}

TEST_CASE("augmenter is deterministic in (z, c) and validates the code") {
    AugmentGeneratorNet a({}, 9);
    Rng rng(10);
    const LatentCode c = LatentCode::sample(3, kNumClasses, 64, rng);
    CHECK(c.class_index() == 3);
    const Tensor y1 = a.sample(c);
    const Tensor y2 = a.sample(c);
    CHECK(y1.shape() == ad::Shape{1, 1, 32, 32});
    CHECK(values(y1) == values(y2));
    for (double v : y1.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }

    LatentCode bad = c;
    bad.code[4] = 1.0;
    try {
        a.sample(bad);
        FAIL("expected malformed_one_hot");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::malformed_one_hot);
    }
    bad = c;
    bad.code[3] = 0.5;
    CHECK_THROWS_AS(a.sample(bad), Error);
    bad = c;
    bad.code.assign(kNumClasses, 0.0);
    CHECK_THROWS_AS(a.sample(bad), Error);
    bad = c;
    bad.z[0] = std::nan("");
    CHECK_THROWS_AS(a.sample(bad), Error);

    std::vector<LatentCode> batch;
    for (std::size_t k = 0; k < 4; ++k) batch.push_back(LatentCode::sample(k, kNumClasses, 64, rng));
    CHECK(a.forward(batch, Mode::train()).shape() == ad::Shape{4, 1, 32, 32});
}

TEST_CASE("generator gradients match finite differences on an 8x8 network") {
    GeneratorArch arch = tiny_generator_arch();
    arch.image_size = 8;
    GeneratorNet g(arch, 21);
    randomize(g.params(), 20);
    Rng rng(22);
    const Tensor x = random_tensor({3, 1, 8, 8}, rng, 0.0, 1.0);
    const Tensor target = random_tensor({3, 1, 8, 8}, rng, 0.0, 1.0);
    auto loss_fn = [&] {
        const Tensor d = ad::sub(g.forward(x, Mode::train_frozen()), target);
        return ad::mean(ad::square(d));
    };
    const auto params = named(g.params());
    const auto report = ad::check_gradients(loss_fn, params);
    CHECK(report.checked == g.params().scalar_count() - report.skipped);
    CHECK(report.checked > report.skipped * 10);
    CHECK(report.max_rel_error < 1e-3);
}

TEST_CASE("discriminator and latent-head gradients match finite differences") {
    DiscriminatorNet d(tiny_discriminator_arch(), 31);
    randomize(d.params(), 30);
    randomize(d.mi_params(), 33);
    Rng rng(32);
    const Tensor x = random_tensor({3, 1, 16, 16}, rng, 0.0, 1.0);
    auto loss_fn = [&] {
        const auto out = d.forward(x, Mode::train_frozen());
        const Tensor a = ad::mean(ad::log(out.real_prob));
        const Tensor b = ad::mean(ad::log_softmax(out.class_logits, 1));
        const Tensor c = ad::mean(ad::square(out.mi_logits));
        return ad::add(ad::add(a, b), c);
    };
    auto params = named(d.params());
    for (auto& p : named(d.mi_params())) params.push_back(p);
    const auto report = ad::check_gradients(loss_fn, params);
    CHECK(report.checked > report.skipped * 10);
    CHECK(report.max_rel_error < 1e-3);
}

TEST_CASE("augmenter gradients match finite differences") {
    AugmentGeneratorNet a(tiny_augmenter_arch(), 41);
    randomize(a.params(), 40);
    Rng rng(42);
    std::vector<LatentCode> codes;
    for (std::size_t k = 0; k < 3; ++k) codes.push_back(LatentCode::sample(k * 3, kNumClasses, 6, rng));
    const Tensor target = random_tensor({3, 1, 16, 16}, rng, 0.0, 1.0);
    auto loss_fn = [&] { return ad::mean(ad::square(ad::sub(a.forward(codes, Mode::train_frozen()), target))); };
    const auto params = named(a.params());
    const auto report = ad::check_gradients(loss_fn, params);
    CHECK(report.max_rel_error < 1e-3);
}
