#include "rmgan/nn/layers.hpp"

namespace rmgan::nn {

Conv2d::Conv2d(ParamSet& params, const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
               int stride_, int pad_)
    : weight(params.add(name + ".weight", {out, in, kernel, kernel}, ParamKind::weight)),
      bias(params.add(name + ".bias", {out}, ParamKind::bias)),
      stride(stride_),
      pad(pad_) {}

ConvTranspose2d::ConvTranspose2d(ParamSet& params, const std::string& name, std::size_t in, std::size_t out,
                                 std::size_t kernel, int stride_, int pad_)
    : weight(params.add(name + ".weight", {in, out, kernel, kernel}, ParamKind::weight)),
      bias(params.add(name + ".bias", {out}, ParamKind::bias)),
      stride(stride_),
      pad(pad_) {}

Linear::Linear(ParamSet& params, const std::string& name, std::size_t in, std::size_t out)
    : weight(params.add(name + ".weight", {out, in}, ParamKind::weight)),
      bias(params.add(name + ".bias", {out}, ParamKind::bias)) {}

BatchNorm::BatchNorm(ParamSet& params, const std::string& name, std::size_t channels)
    : gamma(params.add(name + ".gamma", {channels}, ParamKind::scale)),
      beta(params.add(name + ".beta", {channels}, ParamKind::shift)),
      stats(std::make_shared<ad::RunningStats>(channels)) {
    params.add_buffer(name + ".running_mean", stats->mean);
    params.add_buffer(name + ".running_var", stats->var);
}

ad::Tensor BatchNorm::operator()(const ad::Tensor& x, Mode mode) const {
    ad::RunningStats* target = (mode.bn == ad::BnMode::eval || mode.update_stats) ? stats.get() : nullptr;
    return ad::batchnorm(x, gamma, beta, kEps, mode.bn, target, kMomentum);
}

}  // namespace rmgan::nn
