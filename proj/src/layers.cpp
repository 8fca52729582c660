#include "mtgan/layers.hpp"

#include <torch/csrc/autograd/custom_function.h>

#include <cmath>

namespace mtgan {

namespace F = torch::nn::functional;

// ---------------------------------------------------------------------------
// spectral normalization

SpectralNormState::SpectralNormState(torch::nn::Module& owner, const torch::Tensor& weight, std::int64_t row_dim)
    : row_dim_(row_dim) {
  torch::NoGradGuard no_grad;
  auto w = matrix(weight);
  auto u = torch::randn({w.size(0)}, w.options());
  auto v = torch::randn({w.size(1)}, w.options());
  u_ = owner.register_buffer("sn_u", F::normalize(u, F::NormalizeFuncOptions().dim(0).eps(1e-12)));
  v_ = owner.register_buffer("sn_v", F::normalize(v, F::NormalizeFuncOptions().dim(0).eps(1e-12)));
}

torch::Tensor SpectralNormState::matrix(const torch::Tensor& weight) const {
  auto w = weight;
  if (row_dim_ != 0) {
    std::vector<std::int64_t> perm{row_dim_};
    for (std::int64_t d = 0; d < w.dim(); ++d)
      if (d != row_dim_) perm.push_back(d);
    w = w.permute(perm);
  }
  return w.reshape({w.size(0), -1});
}

void SpectralNormState::power_iterate(const torch::Tensor& weight) {
  if (!enabled()) return;
  torch::NoGradGuard no_grad;
  auto w = matrix(weight).to(u_.dtype());
  auto opts = F::NormalizeFuncOptions().dim(0).eps(1e-12);
  // in-place so the registered buffers keep aliasing the state
  v_.copy_(F::normalize(torch::mv(w.t(), u_), opts));
  u_.copy_(F::normalize(torch::mv(w, v_), opts));
}

torch::Tensor SpectralNormState::normalize(const torch::Tensor& weight) const {
  if (!enabled()) return weight;
  auto sigma = torch::dot(u_, torch::mv(matrix(weight), v_));
  // a zero matrix has norm 0 and is left as is
  sigma = torch::where(sigma.abs() < 1e-12, torch::ones_like(sigma), sigma);
  return weight / sigma;
}

// ---------------------------------------------------------------------------
// convolution

ConvLayerImpl::ConvLayerImpl(const ConvOptions& opts) : opts_(opts) {
  TORCH_CHECK(opts.ndim == 2 || opts.ndim == 3, "ConvLayer: ndim must be 2 or 3");
  std::vector<std::int64_t> shape = opts.transposed ? std::vector<std::int64_t>{opts.in_channels, opts.out_channels}
                                                    : std::vector<std::int64_t>{opts.out_channels, opts.in_channels};
  shape.insert(shape.end(), static_cast<std::size_t>(opts.ndim), opts.kernel);
  weight = register_parameter("weight", torch::randn(shape) * kInitStd);
  if (opts.bias) bias = register_parameter("bias", torch::zeros({opts.out_channels}));
  if (opts.spectral_norm) sn_ = SpectralNormState(*this, weight, opts.transposed ? 1 : 0);
}

torch::Tensor ConvLayerImpl::effective_weight() const { return sn_.normalize(weight); }

void ConvLayerImpl::power_iterate() { sn_.power_iterate(weight); }

torch::Tensor ConvLayerImpl::forward(const torch::Tensor& x) {
  const auto w = effective_weight();
  const auto& o = opts_;
  std::vector<std::int64_t> stride(static_cast<std::size_t>(o.ndim), o.stride);
  std::vector<std::int64_t> pad(static_cast<std::size_t>(o.ndim), o.padding);
  std::vector<std::int64_t> out_pad(static_cast<std::size_t>(o.ndim), o.output_padding);
  std::vector<std::int64_t> dilation(static_cast<std::size_t>(o.ndim), 1);
  if (o.transposed) {
    return o.ndim == 2 ? torch::conv_transpose2d(x, w, bias, stride, pad, out_pad, 1, dilation)
                       : torch::conv_transpose3d(x, w, bias, stride, pad, out_pad, 1, dilation);
  }
  return o.ndim == 2 ? torch::conv2d(x, w, bias, stride, pad, dilation) : torch::conv3d(x, w, bias, stride, pad, dilation);
}

// ---------------------------------------------------------------------------
// dense

DenseImpl::DenseImpl(std::int64_t in, std::int64_t out, bool spectral_norm) {
  weight = register_parameter("weight", torch::randn({out, in}) * kInitStd);
  bias = register_parameter("bias", torch::zeros({out}));
  if (spectral_norm) sn_ = SpectralNormState(*this, weight, 0);
}

torch::Tensor DenseImpl::effective_weight() const { return sn_.normalize(weight); }

void DenseImpl::power_iterate() { sn_.power_iterate(weight); }

torch::Tensor DenseImpl::forward(const torch::Tensor& x) { return torch::linear(x, effective_weight(), bias); }

// ---------------------------------------------------------------------------
// batch norm

BatchNormImpl::BatchNormImpl(std::int64_t channels, double eps, double momentum) : eps_(eps), momentum_(momentum) {
  weight = register_parameter("weight", torch::ones({channels}));
  bias = register_parameter("bias", torch::zeros({channels}));
  running_mean = register_buffer("running_mean", torch::zeros({channels}));
  running_var = register_buffer("running_var", torch::ones({channels}));
}

torch::Tensor BatchNormImpl::forward(const torch::Tensor& x) {
  return torch::batch_norm(x, weight, bias, running_mean, running_var, is_training(), momentum_, eps_,
                           /*cudnn_enabled=*/false);
}

// ---------------------------------------------------------------------------
// pairwise mixing

namespace {

template <typename T>
T leaky(T v, T slope) {
  return v >= T(0) ? v : v * slope;
}

template <typename T>
void mix_kernel(const torch::Tensor& ex, const torch::Tensor& ey, const std::vector<torch::Tensor>& ws,
                const std::vector<torch::Tensor>& bs, double slope, torch::Tensor& out) {
  const auto B = ex.size(0), C = ex.size(1), P = ex.size(2), Q = ey.size(2);
  auto exa = ex.accessor<T, 3>();
  auto eya = ey.accessor<T, 3>();
  auto oa = out.accessor<T, 3>();
  std::vector<const T*> wp, bp;
  std::vector<std::int64_t> widths{C};
  for (std::size_t l = 0; l < ws.size(); ++l) {
    wp.push_back(ws[l].data_ptr<T>());
    bp.push_back(bs[l].data_ptr<T>());
    widths.push_back(ws[l].size(0));
  }
  std::int64_t max_width = 0;
  for (auto w : widths) max_width = std::max(max_width, w);
  std::vector<T> cur(static_cast<std::size_t>(max_width)), nxt(static_cast<std::size_t>(max_width));
  const T s = static_cast<T>(slope);

  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t i = 0; i < P; ++i)
      for (std::int64_t j = 0; j < Q; ++j) {
        for (std::int64_t c = 0; c < C; ++c) cur[c] = exa[b][c][i] * eya[b][c][j];
        for (std::size_t l = 0; l < ws.size(); ++l) {
          const auto in_w = widths[l], out_w = widths[l + 1];
          const bool last = l + 1 == ws.size();
          for (std::int64_t o = 0; o < out_w; ++o) {
            T acc = bp[l][o];
            const T* row = wp[l] + o * in_w;
            for (std::int64_t c = 0; c < in_w; ++c) acc += row[c] * cur[c];
            nxt[o] = last ? acc : leaky(acc, s);
          }
          std::swap(cur, nxt);
        }
        oa[b][i][j] = cur[0];
      }
}

// Saves inputs; the backward pass recomputes activations with tensor ops.
struct PairwiseMixFn : public torch::autograd::Function<PairwiseMixFn> {
  static torch::Tensor forward(torch::autograd::AutogradContext* ctx, const torch::Tensor& ex,
                               const torch::Tensor& ey, at::TensorList params, double slope) {
    std::vector<torch::Tensor> ws, bs;
    for (std::size_t k = 0; k < params.size(); k += 2) {
      ws.push_back(params[k].contiguous());
      bs.push_back(params[k + 1].contiguous());
    }
    auto exc = ex.contiguous(), eyc = ey.contiguous();
    auto out = torch::empty({ex.size(0), ex.size(2), ey.size(2)}, ex.options());
    AT_DISPATCH_FLOATING_TYPES(ex.scalar_type(), "pairwise_mix", [&] { mix_kernel<scalar_t>(exc, eyc, ws, bs, slope, out); });

    std::vector<torch::Tensor> saved{ex, ey};
    saved.insert(saved.end(), params.begin(), params.end());
    ctx->save_for_backward(saved);
    ctx->saved_data["slope"] = slope;
    return out;
  }

  static torch::autograd::variable_list backward(torch::autograd::AutogradContext* ctx,
                                                 torch::autograd::variable_list grad_outputs) {
    auto saved = ctx->get_saved_variables();
    const double slope = ctx->saved_data["slope"].toDouble();
    const auto& ex = saved[0];
    const auto& ey = saved[1];
    const std::size_t n_layers = (saved.size() - 2) / 2;
    const auto B = ex.size(0), C = ex.size(1), P = ex.size(2), Q = ey.size(2);

    // forward recomputation: x[0] = products (B, C, S); z[l] = W_l x[l] + b_l
    std::vector<torch::Tensor> xs{(ex.unsqueeze(3) * ey.unsqueeze(2)).reshape({B, C, P * Q})};
    std::vector<torch::Tensor> zs;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const auto& w = saved[2 + 2 * l];
      const auto& b = saved[3 + 2 * l];
      auto z = torch::matmul(w, xs.back()) + b.view({1, -1, 1});
      zs.push_back(z);
      if (l + 1 < n_layers) xs.push_back(torch::where(z >= 0, z, z * slope));
    }

    std::vector<torch::Tensor> param_grads(2 * n_layers);
    auto g = grad_outputs[0].reshape({B, 1, P * Q});
    for (std::size_t l = n_layers; l-- > 0;) {
      const auto& w = saved[2 + 2 * l];
      param_grads[2 * l] = torch::matmul(g, xs[l].transpose(1, 2)).sum(0);
      param_grads[2 * l + 1] = g.sum({0, 2});
      auto gx = torch::matmul(w.t(), g);
      if (l > 0) {
        const auto& zprev = zs[l - 1];
        gx = gx * torch::where(zprev >= 0, torch::ones_like(zprev), torch::full_like(zprev, slope));
      }
      g = gx;
    }
    auto gt = g.reshape({B, C, P, Q});
    auto gex = (gt * ey.unsqueeze(2)).sum(3);
    auto gey = (gt * ex.unsqueeze(3)).sum(2);

    torch::autograd::variable_list grads{gex, gey};
    grads.insert(grads.end(), param_grads.begin(), param_grads.end());
    grads.push_back(torch::Tensor());  // slope
    return grads;
  }
};

}  // namespace

torch::Tensor pairwise_mix(const torch::Tensor& ex, const torch::Tensor& ey, const std::vector<torch::Tensor>& weights,
                           const std::vector<torch::Tensor>& biases, double slope) {
  TORCH_CHECK(ex.dim() == 3 && ey.dim() == 3, "pairwise_mix: embeddings must be (B, c, sites)");
  TORCH_CHECK(ex.size(0) == ey.size(0) && ex.size(1) == ey.size(1), "pairwise_mix: embedding batch/channels differ");
  TORCH_CHECK(!weights.empty() && weights.size() == biases.size(), "pairwise_mix: need matching weights and biases");
  TORCH_CHECK(weights.back().size(0) == 1, "pairwise_mix: last layer must have one output");
  std::vector<torch::Tensor> params;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    params.push_back(weights[l]);
    params.push_back(biases[l]);
  }
  return PairwiseMixFn::apply(ex, ey, at::TensorList(params), slope);
}

torch::Tensor pairwise_mix_reference(const torch::Tensor& ex, const torch::Tensor& ey,
                                     const std::vector<torch::Tensor>& weights,
                                     const std::vector<torch::Tensor>& biases, double slope) {
  const auto B = ex.size(0), C = ex.size(1), P = ex.size(2), Q = ey.size(2);
  auto x = (ex.unsqueeze(3) * ey.unsqueeze(2)).reshape({B, C, P * Q});
  for (std::size_t l = 0; l < weights.size(); ++l) {
    x = torch::matmul(weights[l], x) + biases[l].view({1, -1, 1});
    if (l + 1 < weights.size()) x = F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(slope));
  }
  return x.reshape({B, P, Q});
}

}  // namespace mtgan
