#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rmgan/autodiff/tensor.hpp"

namespace rmgan::losses {

struct LossWeights {
    double lambda_mse = 0.05;  // weight of the pixel loss in the total
    double lambda_mi = 1.0;    // weight of the mutual-information bound

    // Throws invalid_argument unless lambda_mse > 0 and lambda_mi >= 0.
    // lambda_mi = 0 is accepted to train the vanilla-GAN comparison.
    void validate() const;
};

// -mean(log D(X)) - mean(log(1 - D(G(X~)))). Inputs are [N] probabilities
// strictly inside (0,1); anything else throws probability_out_of_range.
ad::Tensor adv_loss_discriminator(const ad::Tensor& prob_real, const ad::Tensor& prob_fake);

// Non-saturating generator loss: -mean(log D(G(X~))).
ad::Tensor adv_loss_generator(const ad::Tensor& prob_fake);

// Pointwise pt / (pt + pz). Plain numbers, no tape.
std::vector<double> optimal_discriminator(std::span<const double> pt, std::span<const double> pz);

// Variational lower bound H(c) + mean_i sum_k c_ik log softmax(logits)_ik.
// H(c) is the entropy of the batch's empirical code histogram and carries
// no gradient. codes must be [N,K] one-hot rows.
ad::Tensor mi_lower_bound(const ad::Tensor& codes, const ad::Tensor& logits);

// Entropy of the empirical code histogram of [N,K] one-hot rows.
double code_entropy(const ad::Tensor& codes);

// Mean squared difference.
ad::Tensor mse_loss(const ad::Tensor& x, const ad::Tensor& x_prime);

// Mean cross-entropy of [N,K] logits against integer labels.
ad::Tensor cross_entropy(const ad::Tensor& logits, std::span<const std::size_t> labels);

// cross_entropy on the restored-input logits plus cross_entropy on the
// clean-input logits, both against the same labels.
ad::Tensor classification_loss(const ad::Tensor& logits_restored, const ad::Tensor& logits_clean,
                               std::span<const std::size_t> labels);

struct LossParts {
    ad::Tensor adversarial;     // adversarial term, MI term already folded in
    ad::Tensor mse;
    ad::Tensor classification;
};

// adversarial + lambda_mse * mse + classification. Throws non_finite naming
// the offending part.
ad::Tensor total_loss(const LossParts& parts, const LossWeights& weights);

// [N,K] one-hot rows for the given labels.
ad::Tensor one_hot(std::span<const std::size_t> labels, std::size_t classes);

}  // namespace rmgan::losses
