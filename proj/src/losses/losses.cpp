#include "rmgan/losses/losses.hpp"

#include <cmath>
#include <string>

#include "rmgan/autodiff/ops.hpp"
#include "rmgan/common/error.hpp"

namespace rmgan::losses {

namespace {

void check_probabilities(const ad::Tensor& p, const char* what) {
    if (p.rank() != 1) {
        throw Error(ErrorCode::shape_mismatch,
                    std::string(what) + ": expected [N] probabilities, got " + ad::shape_to_string(p.shape()));
    }
    const auto d = p.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(d[i] > 0.0 && d[i] < 1.0)) {
            throw Error(ErrorCode::probability_out_of_range,
                        std::string(what) + "[" + std::to_string(i) + "] = " + std::to_string(d[i]));
        }
    }
}

void check_logits(const ad::Tensor& logits, std::size_t rows, const char* what) {
    if (logits.rank() != 2 || logits.dim(0) != rows) {
        throw Error(ErrorCode::shape_mismatch, std::string(what) + ": expected [" + std::to_string(rows) +
                                                   ",K] logits, got " + ad::shape_to_string(logits.shape()));
    }
}

void check_one_hot(const ad::Tensor& codes) {
    if (codes.rank() != 2) {
        throw Error(ErrorCode::malformed_one_hot, "codes must be [N,K], got " + ad::shape_to_string(codes.shape()));
    }
    const std::size_t n = codes.dim(0), k = codes.dim(1);
    const auto d = codes.data();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double v = d[i * k + j];
            if (v == 1.0) {
                ++ones;
            } else if (v != 0.0) {
                throw Error(ErrorCode::malformed_one_hot, "row " + std::to_string(i) + " has entry " + std::to_string(v));
            }
        }
        if (ones != 1) {
            throw Error(ErrorCode::malformed_one_hot,
                        "row " + std::to_string(i) + " has " + std::to_string(ones) + " hot entries");
        }
    }
}

}  // namespace

void LossWeights::validate() const {
    if (!(lambda_mse > 0.0) || !std::isfinite(lambda_mse)) {
        throw Error(ErrorCode::invalid_argument, "lambda_mse must be positive, got " + std::to_string(lambda_mse));
    }
    if (!(lambda_mi >= 0.0) || !std::isfinite(lambda_mi)) {
        throw Error(ErrorCode::invalid_argument, "lambda_mi must be non-negative, got " + std::to_string(lambda_mi));
    }
}

ad::Tensor adv_loss_discriminator(const ad::Tensor& prob_real, const ad::Tensor& prob_fake) {
    check_probabilities(prob_real, "D(X)");
    check_probabilities(prob_fake, "D(G(X~))");
    const ad::Tensor real_term = ad::mean(ad::log(prob_real));
    const ad::Tensor fake_term = ad::mean(ad::log(ad::add_scalar(ad::scale(prob_fake, -1.0), 1.0)));
    return ad::scale(ad::add(real_term, fake_term), -1.0);
}

ad::Tensor adv_loss_generator(const ad::Tensor& prob_fake) {
    check_probabilities(prob_fake, "D(G(X~))");
    return ad::scale(ad::mean(ad::log(prob_fake)), -1.0);
}

std::vector<double> optimal_discriminator(std::span<const double> pt, std::span<const double> pz) {
    if (pt.size() != pz.size()) {
        throw Error(ErrorCode::shape_mismatch, "density vectors differ in length: " + std::to_string(pt.size()) +
                                                   " vs " + std::to_string(pz.size()));
    }
    std::vector<double> out(pt.size());
    for (std::size_t i = 0; i < pt.size(); ++i) {
        if (!(pt[i] >= 0.0) || !(pz[i] >= 0.0)) {
            throw Error(ErrorCode::invalid_argument, "negative density at point " + std::to_string(i));
        }
        if (pt[i] + pz[i] == 0.0) {
            throw Error(ErrorCode::invalid_argument, "both densities vanish at point " + std::to_string(i));
        }
        out[i] = pt[i] / (pt[i] + pz[i]);
    }
    return out;
}

double code_entropy(const ad::Tensor& codes) {
    check_one_hot(codes);
    const std::size_t n = codes.dim(0), k = codes.dim(1);
    std::vector<double> counts(k, 0.0);
    const auto d = codes.data();
    for (std::size_t i = 0; i < n * k; ++i) {
        counts[i % k] += d[i];
    }
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            const double p = c / static_cast<double>(n);
            h -= p * std::log(p);
        }
    }
    return h;
}

ad::Tensor mi_lower_bound(const ad::Tensor& codes, const ad::Tensor& logits) {
    const double h = code_entropy(codes);
    check_logits(logits, codes.dim(0), "mi_lower_bound");
    if (logits.dim(1) != codes.dim(1)) {
        throw Error(ErrorCode::shape_mismatch, "mi_lower_bound: " + std::to_string(codes.dim(1)) + " code classes vs " +
                                                   std::to_string(logits.dim(1)) + " logits");
    }
    const double n = static_cast<double>(codes.dim(0));
    const ad::Tensor log_q = ad::sum(ad::mul(ad::log_softmax(logits, 1), codes));
    return ad::add_scalar(ad::scale(log_q, 1.0 / n), h);
}

ad::Tensor mse_loss(const ad::Tensor& x, const ad::Tensor& x_prime) {
    if (x.shape() != x_prime.shape()) {
        throw Error(ErrorCode::shape_mismatch, "mse_loss: " + ad::shape_to_string(x.shape()) + " vs " +
                                                   ad::shape_to_string(x_prime.shape()));
    }
    return ad::mean(ad::square(ad::sub(x, x_prime)));
}

ad::Tensor one_hot(std::span<const std::size_t> labels, std::size_t classes) {
    if (labels.empty()) {
        throw Error(ErrorCode::invalid_argument, "one_hot: no labels");
    }
    ad::Tensor out({labels.size(), classes}, 0.0);
    auto d = out.mutable_data();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes) {
            throw Error(ErrorCode::label_out_of_range, "label " + std::to_string(labels[i]) + " at row " +
                                                           std::to_string(i) + " not in [0," +
                                                           std::to_string(classes) + ")");
        }
        d[i * classes + labels[i]] = 1.0;
    }
    return out;
}

ad::Tensor cross_entropy(const ad::Tensor& logits, std::span<const std::size_t> labels) {
    check_logits(logits, labels.size(), "cross_entropy");
    const ad::Tensor targets = one_hot(labels, logits.dim(1));
    const double n = static_cast<double>(labels.size());
    return ad::scale(ad::sum(ad::mul(ad::log_softmax(logits, 1), targets)), -1.0 / n);
}

ad::Tensor classification_loss(const ad::Tensor& logits_restored, const ad::Tensor& logits_clean,
                               std::span<const std::size_t> labels) {
    return ad::add(cross_entropy(logits_restored, labels), cross_entropy(logits_clean, labels));
}

ad::Tensor total_loss(const LossParts& parts, const LossWeights& weights) {
    const std::pair<const char*, const ad::Tensor*> named[] = {
        {"adversarial", &parts.adversarial}, {"mse", &parts.mse}, {"classification", &parts.classification}};
    for (const auto& [name, t] : named) {
        if (t->numel() != 1 || t->rank() != 0) {
            throw Error(ErrorCode::non_scalar_loss, std::string(name) + " term is " + ad::shape_to_string(t->shape()));
        }
        if (!std::isfinite(t->item())) {
            throw Error(ErrorCode::non_finite, std::string(name) + " term is " + std::to_string(t->item()));
        }
    }
    return ad::add(ad::add(parts.adversarial, ad::scale(parts.mse, weights.lambda_mse)), parts.classification);
}

}  // namespace rmgan::losses
