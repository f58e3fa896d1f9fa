/*
 * Copyright 2026 The semnav Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cost_model.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace semnav {

namespace {

constexpr int kMinGridSize = 8;

struct ConvShape {
  int in_channels;
  int out_channels;
  int kernel;
};

// Layer order inside the flat parameter vector.
std::vector<std::pair<std::string, ConvShape>> conv_layers(const CostArchitecture& arch) {
  std::vector<std::pair<std::string, ConvShape>> layers;
  const auto& w = arch.widths;
  const int levels = static_cast<int>(w.size());
  layers.push_back({"enc0", {arch.in_channels, w[0], arch.kernel}});
  for (int l = 1; l < levels; ++l) {
    layers.push_back({"enc" + std::to_string(l), {w[l - 1], w[l], arch.kernel}});
  }
  layers.push_back({"bottleneck", {w[levels - 1], w[levels - 1], arch.kernel}});
  for (int l = levels - 1; l >= 0; --l) {
    layers.push_back({"dec" + std::to_string(l), {w[l], w[std::max(l - 1, 0)], arch.kernel}});
  }
  layers.push_back({"head", {w[0], 1, 1}});
  return layers;
}

double softplus(double z) { return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Zero-padded "same" convolution, channel-major planes of size h*w.
void conv_forward(const double* in, int h, int w, const ConvShape& shape,
                  const double* weight, const double* bias, double* out) {
  const int r = shape.kernel / 2;
  const int plane = h * w;
  for (int co = 0; co < shape.out_channels; ++co) {
    double* o = out + co * plane;
    std::fill(o, o + plane, bias[co]);
    for (int ci = 0; ci < shape.in_channels; ++ci) {
      const double* src = in + ci * plane;
      for (int ky = 0; ky < shape.kernel; ++ky) {
        const int dy = ky - r;
        const int y0 = std::max(0, -dy);
        const int y1 = std::min(h, h - dy);
        for (int kx = 0; kx < shape.kernel; ++kx) {
          const int dx = kx - r;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          const double wv =
              weight[((co * shape.in_channels + ci) * shape.kernel + ky) * shape.kernel + kx];
          for (int y = y0; y < y1; ++y) {
            double* orow = o + y * w;
            const double* irow = src + (y + dy) * w + dx;
            for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
}

// Accumulates into dweight, dbias and (when non-null) din.
void conv_backward(const double* in, int h, int w, const ConvShape& shape,
                   const double* weight, const double* dout, double* dweight,
                   double* dbias, double* din) {
  const int r = shape.kernel / 2;
  const int plane = h * w;
  for (int co = 0; co < shape.out_channels; ++co) {
    const double* g = dout + co * plane;
    double sum = 0.0;
    for (int n = 0; n < plane; ++n) sum += g[n];
    dbias[co] += sum;
    for (int ci = 0; ci < shape.in_channels; ++ci) {
      const double* src = in + ci * plane;
      double* dsrc = din != nullptr ? din + ci * plane : nullptr;
      for (int ky = 0; ky < shape.kernel; ++ky) {
        const int dy = ky - r;
        const int y0 = std::max(0, -dy);
        const int y1 = std::min(h, h - dy);
        for (int kx = 0; kx < shape.kernel; ++kx) {
          const int dx = kx - r;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          const std::size_t widx =
              ((co * shape.in_channels + ci) * shape.kernel + ky) * shape.kernel + kx;
          const double wv = weight[widx];
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            const double* grow = g + y * w;
            const double* irow = src + (y + dy) * w + dx;
            for (int x = x0; x < x1; ++x) acc += grow[x] * irow[x];
            if (dsrc != nullptr) {
              double* drow = dsrc + (y + dy) * w + dx;
              for (int x = x0; x < x1; ++x) drow[x] += wv * grow[x];
            }
          }
          dweight[widx] += acc;
        }
      }
    }
  }
}

// 2x2 average pooling; edge windows average over the cells they cover.
void pool_forward(const double* in, int channels, int h, int w, double* out) {
  const int oh = (h + 1) / 2;
  const int ow = (w + 1) / 2;
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double sum = 0.0;
        int count = 0;
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            const int yy = 2 * y + a;
            const int xx = 2 * x + b;
            if (yy < h && xx < w) {
              sum += in[(c * h + yy) * w + xx];
              ++count;
            }
          }
        }
        out[(c * oh + y) * ow + x] = sum / count;
      }
    }
  }
}

void pool_backward(const double* dout, int channels, int h, int w, double* din) {
  const int oh = (h + 1) / 2;
  const int ow = (w + 1) / 2;
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const int count = (std::min(2 * y + 2, h) - 2 * y) * (std::min(2 * x + 2, w) - 2 * x);
        const double g = dout[(c * oh + y) * ow + x] / count;
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            const int yy = 2 * y + a;
            const int xx = 2 * x + b;
            if (yy < h && xx < w) din[(c * h + yy) * w + xx] += g;
          }
        }
      }
    }
  }
}

// Nearest-neighbour upsampling from the coarse level onto an h x w plane.
void upsample_add(const double* coarse, int channels, int h, int w, double* out) {
  const int ch = (h + 1) / 2;
  const int cw = (w + 1) / 2;
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out[(c * h + y) * w + x] += coarse[(c * ch + y / 2) * cw + x / 2];
      }
    }
  }
}

void upsample_backward(const double* dout, int channels, int h, int w, double* dcoarse) {
  const int ch = (h + 1) / 2;
  const int cw = (w + 1) / 2;
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        dcoarse[(c * ch + y / 2) * cw + x / 2] += dout[(c * h + y) * w + x];
      }
    }
  }
}

void tanh_inplace(std::vector<double>& v) {
  for (double& x : v) x = std::tanh(x);
}

// dz = dy * (1 - y^2) for y = tanh(z).
void tanh_backward(const std::vector<double>& y, std::vector<double>& dy) {
  for (std::size_t n = 0; n < y.size(); ++n) dy[n] *= 1.0 - y[n] * y[n];
}

}  // namespace

void validate_architecture(const CostArchitecture& arch) {
  if (arch.in_channels < 1) throw Error(ErrorCode::kInvalidArgument, "need >= 1 input channel");
  if (arch.widths.empty()) throw Error(ErrorCode::kInvalidArgument, "need >= 1 encoder level");
  for (int w : arch.widths) {
    if (w < 1) throw Error(ErrorCode::kInvalidArgument, "channel widths must be positive");
  }
  if (arch.kernel < 1 || arch.kernel % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "kernel size must be odd and positive");
  }
  if (!(arch.min_cost > 0.0)) throw Error(ErrorCode::kInvalidArgument, "min_cost must be > 0");
}

CostEncoderParams::CostEncoderParams(CostArchitecture arch) : arch_(std::move(arch)) {
  validate_architecture(arch_);
  std::size_t offset = 0;
  for (const auto& [name, shape] : conv_layers(arch_)) {
    TensorSpec weight{name + ".weight",
                      {static_cast<std::size_t>(shape.out_channels),
                       static_cast<std::size_t>(shape.in_channels),
                       static_cast<std::size_t>(shape.kernel),
                       static_cast<std::size_t>(shape.kernel)},
                      offset,
                      static_cast<std::size_t>(shape.out_channels) * shape.in_channels *
                          shape.kernel * shape.kernel};
    offset += weight.size;
    TensorSpec bias{name + ".bias", {static_cast<std::size_t>(shape.out_channels)}, offset,
                    static_cast<std::size_t>(shape.out_channels)};
    offset += bias.size;
    tensors_.push_back(std::move(weight));
    tensors_.push_back(std::move(bias));
  }
  values_.assign(offset, 0.0);
}

const TensorSpec& CostEncoderParams::tensor(const std::string& name) const {
  for (const TensorSpec& t : tensors_) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::kInvalidArgument, "no tensor named '" + name + "'");
}

CostEncoderParams init_params(std::uint64_t seed, const CostArchitecture& arch) {
  CostEncoderParams params(arch);
  Rng rng(seed);
  auto values = params.values();
  for (const TensorSpec& t : params.tensors()) {
    if (t.shape.size() != 4) continue;  // biases stay zero
    const double fan_in = static_cast<double>(t.shape[1] * t.shape[2] * t.shape[3]);
    const double a = std::sqrt(3.0 / fan_in);
    for (std::size_t n = 0; n < t.size; ++n) values[t.offset + n] = rng.uniform(-a, a);
  }
  return params;
}

CostForward cost_forward(std::span<const double> posterior, int width, int height,
                         const CostEncoderParams& params) {
  const CostArchitecture& arch = params.arch();
  if (width < kMinGridSize || height < kMinGridSize) {
    throw Error(ErrorCode::kInvalidArgument, "cost encoder needs at least an 8x8 grid");
  }
  const std::size_t cells = static_cast<std::size_t>(width) * height;
  const int channels = arch.in_channels;
  if (posterior.size() != cells * channels) {
    throw Error(ErrorCode::kShapeMismatch, "posterior size does not match grid and channels");
  }

  const auto layers = conv_layers(arch);
  const auto weight_of = [&](std::size_t layer) {
    return params.values().data() + params.tensors()[2 * layer].offset;
  };
  const auto bias_of = [&](std::size_t layer) {
    return params.values().data() + params.tensors()[2 * layer + 1].offset;
  };

  const int levels = static_cast<int>(arch.widths.size());
  CostForward result;
  CostTape& tape = result.tape;
  tape.width = width;
  tape.height = height;
  tape.level_width.push_back(width);
  tape.level_height.push_back(height);
  for (int l = 1; l <= levels; ++l) {
    tape.level_width.push_back((tape.level_width.back() + 1) / 2);
    tape.level_height.push_back((tape.level_height.back() + 1) / 2);
  }
  const auto plane = [&](int level) {
    return static_cast<std::size_t>(tape.level_width[level]) * tape.level_height[level];
  };

  tape.input.resize(cells * channels);
  for (std::size_t j = 0; j < cells; ++j) {
    for (int c = 0; c < channels; ++c) tape.input[c * cells + j] = posterior[j * channels + c];
  }

  std::size_t layer = 0;
  tape.encoder.resize(levels);
  tape.pooled.resize(levels + 1);
  for (int l = 0; l < levels; ++l) {
    const ConvShape& shape = layers[layer].second;
    const double* in = tape.input.data();
    if (l > 0) {
      tape.pooled[l].resize(plane(l) * arch.widths[l - 1]);
      pool_forward(tape.encoder[l - 1].data(), arch.widths[l - 1], tape.level_height[l - 1],
                   tape.level_width[l - 1], tape.pooled[l].data());
      in = tape.pooled[l].data();
    }
    tape.encoder[l].resize(plane(l) * shape.out_channels);
    conv_forward(in, tape.level_height[l], tape.level_width[l], shape, weight_of(layer),
                 bias_of(layer), tape.encoder[l].data());
    tanh_inplace(tape.encoder[l]);
    ++layer;
  }

  {
    const ConvShape& shape = layers[layer].second;
    tape.pooled[levels].resize(plane(levels) * arch.widths[levels - 1]);
    pool_forward(tape.encoder[levels - 1].data(), arch.widths[levels - 1],
                 tape.level_height[levels - 1], tape.level_width[levels - 1],
                 tape.pooled[levels].data());
    tape.bottleneck.resize(plane(levels) * shape.out_channels);
    conv_forward(tape.pooled[levels].data(), tape.level_height[levels],
                 tape.level_width[levels], shape, weight_of(layer), bias_of(layer),
                 tape.bottleneck.data());
    tanh_inplace(tape.bottleneck);
    ++layer;
  }

  tape.merged.resize(levels);
  tape.decoder.resize(levels);
  const std::vector<double>* coarse = &tape.bottleneck;
  for (int l = levels - 1; l >= 0; --l) {
    const ConvShape& shape = layers[layer].second;
    tape.merged[l] = tape.encoder[l];
    upsample_add(coarse->data(), shape.in_channels, tape.level_height[l], tape.level_width[l],
                 tape.merged[l].data());
    tape.decoder[l].resize(plane(l) * shape.out_channels);
    conv_forward(tape.merged[l].data(), tape.level_height[l], tape.level_width[l], shape,
                 weight_of(layer), bias_of(layer), tape.decoder[l].data());
    tanh_inplace(tape.decoder[l]);
    coarse = &tape.decoder[l];
    ++layer;
  }

  const ConvShape& head = layers[layer].second;
  tape.head.resize(cells);
  conv_forward(tape.decoder[0].data(), height, width, head, weight_of(layer), bias_of(layer),
               tape.head.data());
  result.cell_cost.resize(cells);
  for (std::size_t j = 0; j < cells; ++j) {
    result.cell_cost[j] = softplus(tape.head[j]) + arch.min_cost;
  }
  return result;
}

CostGradients cost_backward(const CostTape& tape, const CostEncoderParams& params,
                            std::span<const double> upstream) {
  const CostArchitecture& arch = params.arch();
  const std::size_t cells = static_cast<std::size_t>(tape.width) * tape.height;
  if (upstream.size() != cells || tape.head.size() != cells ||
      tape.encoder.size() != arch.widths.size()) {
    throw Error(ErrorCode::kShapeMismatch, "upstream gradient does not match the cost tape");
  }
  const auto layers = conv_layers(arch);
  const int levels = static_cast<int>(arch.widths.size());
  CostGradients grads;
  grads.params.assign(params.size(), 0.0);
  const auto weight_of = [&](std::size_t layer) {
    return params.values().data() + params.tensors()[2 * layer].offset;
  };
  const auto dweight_of = [&](std::size_t layer) {
    return grads.params.data() + params.tensors()[2 * layer].offset;
  };
  const auto dbias_of = [&](std::size_t layer) {
    return grads.params.data() + params.tensors()[2 * layer + 1].offset;
  };

  std::size_t layer = layers.size() - 1;
  std::vector<double> dhead(cells);
  for (std::size_t j = 0; j < cells; ++j) dhead[j] = upstream[j] * sigmoid(tape.head[j]);

  std::vector<double> dcurrent(tape.decoder[0].size(), 0.0);
  conv_backward(tape.decoder[0].data(), tape.height, tape.width, layers[layer].second,
                weight_of(layer), dhead.data(), dweight_of(layer), dbias_of(layer),
                dcurrent.data());
  --layer;

  std::vector<std::vector<double>> dencoder(levels);
  for (int l = 0; l < levels; ++l) dencoder[l].assign(tape.encoder[l].size(), 0.0);

  // Decoder, finest level first.
  for (int l = 0; l < levels; ++l) {
    const ConvShape& shape = layers[layer].second;
    const int h = tape.level_height[l];
    const int w = tape.level_width[l];
    tanh_backward(tape.decoder[l], dcurrent);
    std::vector<double> dmerged(tape.merged[l].size(), 0.0);
    conv_backward(tape.merged[l].data(), h, w, shape, weight_of(layer), dcurrent.data(),
                  dweight_of(layer), dbias_of(layer), dmerged.data());
    for (std::size_t n = 0; n < dmerged.size(); ++n) dencoder[l][n] += dmerged[n];
    const std::vector<double>& coarse = l + 1 < levels ? tape.decoder[l + 1] : tape.bottleneck;
    std::vector<double> dcoarse(coarse.size(), 0.0);
    upsample_backward(dmerged.data(), shape.in_channels, h, w, dcoarse.data());
    dcurrent = std::move(dcoarse);
    --layer;
  }

  {
    const ConvShape& shape = layers[layer].second;
    tanh_backward(tape.bottleneck, dcurrent);
    std::vector<double> dpooled(tape.pooled[levels].size(), 0.0);
    conv_backward(tape.pooled[levels].data(), tape.level_height[levels],
                  tape.level_width[levels], shape, weight_of(layer), dcurrent.data(),
                  dweight_of(layer), dbias_of(layer), dpooled.data());
    pool_backward(dpooled.data(), arch.widths[levels - 1], tape.level_height[levels - 1],
                  tape.level_width[levels - 1], dencoder[levels - 1].data());
    --layer;
  }

  std::vector<double> dinput(tape.input.size(), 0.0);
  for (int l = levels - 1; l >= 0; --l) {
    const ConvShape& shape = layers[layer].second;
    tanh_backward(tape.encoder[l], dencoder[l]);
    if (l > 0) {
      std::vector<double> dpooled(tape.pooled[l].size(), 0.0);
      conv_backward(tape.pooled[l].data(), tape.level_height[l], tape.level_width[l], shape,
                    weight_of(layer), dencoder[l].data(), dweight_of(layer), dbias_of(layer),
                    dpooled.data());
      pool_backward(dpooled.data(), arch.widths[l - 1], tape.level_height[l - 1],
                    tape.level_width[l - 1], dencoder[l - 1].data());
    } else {
      conv_backward(tape.input.data(), tape.height, tape.width, shape, weight_of(layer),
                    dencoder[0].data(), dweight_of(layer), dbias_of(layer), dinput.data());
    }
    if (layer > 0) --layer;
  }

  const int channels = arch.in_channels;
  grads.posterior.resize(cells * channels);
  for (std::size_t j = 0; j < cells; ++j) {
    for (int c = 0; c < channels; ++c) grads.posterior[j * channels + c] = dinput[c * cells + j];
  }
  return grads;
}

}  // namespace semnav
