#include <cmath>
#include <functional>

#include "doctest.h"
#include "rmgan/autodiff/ops.hpp"
#include "rmgan/autodiff/tape.hpp"
#include "rmgan/common/error.hpp"
#include "rmgan/nn/layers.hpp"
#include "rmgan/nn/optim.hpp"
#include "rmgan/nn/param_set.hpp"

using namespace rmgan;
using namespace rmgan::nn;
using ad::Tensor;

namespace {

double sample_std(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

void set_grad(const Tensor& t, double value) {
    auto g = t.grad_buffer();
    std::fill(g.begin(), g.end(), value);
}

}  // namespace

TEST_CASE("init draws weights with std 0.01 and zero biases") {
    ParamSet ps(Owner::generator);
    ps.add("big.weight", {100, 100}, ParamKind::weight);
    ps.add("big.bias", {100}, ParamKind::bias);
    ps.add("bn.gamma", {7}, ParamKind::scale);
    ps.add("bn.beta", {7}, ParamKind::shift);
    init_weights(ps, 42);

    CHECK(std::abs(sample_std(ps.find("big.weight")->value.data()) - 0.01) < 0.0005);
    for (double v : ps.find("big.bias")->value.data()) CHECK(v == 0.0);
    for (double v : ps.find("bn.beta")->value.data()) CHECK(v == 0.0);
    for (double v : ps.find("bn.gamma")->value.data()) CHECK(v == 1.0);
}

TEST_CASE("init is deterministic per seed and independent of registration order") {
    auto make = [](std::uint64_t seed, bool reversed) {
        ParamSet ps(Owner::discriminator);
        if (reversed) {
            ps.add("b.weight", {5, 5}, ParamKind::weight);
            ps.add("a.weight", {3, 4}, ParamKind::weight);
        } else {
            ps.add("a.weight", {3, 4}, ParamKind::weight);
            ps.add("b.weight", {5, 5}, ParamKind::weight);
        }
        init_weights(ps, seed);
        return std::vector<double>(ps.find("a.weight")->value.data().begin(), ps.find("a.weight")->value.data().end());
    };
    CHECK(make(3, false) == make(3, false));
    CHECK(make(3, false) == make(3, true));
    CHECK(make(3, false) != make(4, false));
}

TEST_CASE("param set rejects duplicate names and reports sizes") {
    ParamSet ps(Owner::augmenter);
    ps.add("w", {2, 3}, ParamKind::weight);
    CHECK_THROWS_AS(ps.add("w", {1}, ParamKind::bias), Error);
    ps.add("b", {3}, ParamKind::bias);
    CHECK(ps.scalar_count() == 9);
    CHECK(ps.find("missing") == nullptr);
}

TEST_CASE("adam first step moves each coordinate by lr against the gradient sign") {
    ParamSet ps(Owner::generator);
    Tensor w = ps.add("w", {4}, ParamKind::weight);
    w.mutable_data()[0] = 0.3;
    AdamState state(ps);
    set_grad(w, 0.0);
    const double grads[4] = {2.5, -0.7, 1e-3, -40.0};
    for (int i = 0; i < 4; ++i) w.grad_buffer()[i] = grads[i];
    const std::vector<double> before(w.data().begin(), w.data().end());
    adam_step(ps, state, 0.01);
    CHECK(state.step == 1);
    for (int i = 0; i < 4; ++i) {
        const double delta = w.data()[i] - before[i];
        CHECK(std::abs(delta + 0.01 * (grads[i] > 0 ? 1.0 : -1.0)) < 1e-6);
    }
    // Gradients are left alone.
    for (int i = 0; i < 4; ++i) CHECK(w.grad()[i] == grads[i]);
}

TEST_CASE("adam with zero gradient is the identity for any state") {
    ParamSet ps(Owner::generator);
    Tensor w = ps.add("w", {3}, ParamKind::weight);
    AdamState state(ps);
    set_grad(w, 0.5);
    for (int i = 0; i < 5; ++i) adam_step(ps, state, 0.1);
    const std::vector<double> before(w.data().begin(), w.data().end());
    set_grad(w, 0.0);
    adam_step(ps, state, 0.1);
    CHECK(std::vector<double>(w.data().begin(), w.data().end()) == before);
    CHECK(state.step == 6);
}

TEST_CASE("adam descends w^2 from 1 below 0.1 within 100 steps") {
    ParamSet ps(Owner::generator);
    Tensor w = ps.add("w", {1}, ParamKind::weight);
    w.mutable_data()[0] = 1.0;
    AdamState state(ps);
    for (int i = 0; i < 100; ++i) {
        ad::Tape tape;
        ad::TapeScope scope(tape);
        ps.zero_grad();
        tape.backward(ad::sum(ad::square(w)));
        adam_step(ps, state, 0.1);
    }
    CHECK(std::abs(w.data()[0]) < 0.1);
}

TEST_CASE("adam reports every parameter missing a gradient") {
    ParamSet ps(Owner::discriminator);
    ps.add("first", {2}, ParamKind::weight);
    ps.add("second", {2}, ParamKind::bias);
    Tensor third = ps.add("third", {2}, ParamKind::weight);
    ps.add("frozen", {2}, ParamKind::weight);
    ps.set_trainable("frozen", false);
    set_grad(third, 1.0);
    AdamState state(ps);
    try {
        adam_step(ps, state, 0.1);
        FAIL("expected missing_gradient");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::missing_gradient);
        const std::string msg = e.what();
        CHECK(msg.find("first") != std::string::npos);
        CHECK(msg.find("second") != std::string::npos);
        CHECK(msg.find("third") == std::string::npos);
        CHECK(msg.find("frozen") == std::string::npos);
    }
    CHECK(state.step == 0);
}

TEST_CASE("learning-rate schedule switches at epoch 10") {
    const LrSchedule s;
    CHECK(s.rate(0) == 1e-4);
    CHECK(s.rate(9) == 1e-4);
    CHECK(s.rate(10) == 1e-5);
    CHECK(s.rate(29) == 1e-5);
    CHECK(s.rate(0, 2.0) == doctest::Approx(2e-4).epsilon(1e-15));
}

TEST_CASE("batch-norm layer updates running stats only in train mode") {
    ParamSet ps(Owner::discriminator);
    BatchNorm bn(ps, "bn", 2);
    CHECK(ps.buffers().size() == 2);
    const Tensor x({4, 2}, std::vector<double>{1, 10, 2, 20, 3, 30, 4, 40});

    bn(x, Mode::train_frozen());
    CHECK(bn.stats->mean.data()[0] == 0.0);
    bn(x, Mode::eval());
    CHECK(bn.stats->mean.data()[0] == 0.0);
    bn(x, Mode::train());
    CHECK(bn.stats->mean.data()[0] == doctest::Approx(0.1 * 2.5));
    CHECK(bn.stats->mean.data()[1] == doctest::Approx(0.1 * 25.0));
    // The registered buffer is the same storage.
    CHECK(ps.buffers()[0].second.data()[0] == bn.stats->mean.data()[0]);
}

TEST_CASE("copy_values_from clones parameters and buffers") {
    ParamSet a(Owner::generator), b(Owner::generator);
    BatchNorm bn_a(a, "bn", 3);
    BatchNorm bn_b(b, "bn", 3);
    Linear la(a, "fc", 3, 2);
    Linear lb(b, "fc", 3, 2);
    init_weights(a, 1);
    bn_a(Tensor({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6}), Mode::train());
    b.copy_values_from(a);
    CHECK(std::vector<double>(lb.weight.data().begin(), lb.weight.data().end()) ==
          std::vector<double>(la.weight.data().begin(), la.weight.data().end()));
    CHECK(bn_b.stats->mean.data()[2] == bn_a.stats->mean.data()[2]);
    CHECK(!lb.weight.same_storage(la.weight));
}
