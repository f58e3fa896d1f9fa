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

#ifndef SEMNAV_COST_MODEL_HPP_
#define SEMNAV_COST_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace semnav {

// Encoder-decoder over the K+1 posterior channels. With widths {w0, w1} the
// stack is
//
//   enc0: conv(K+1 -> w0)                          full resolution
//   enc1: conv(w0 -> w1) after 2x2 average pooling  1/2
//   bottleneck: conv(w1 -> w1) after pooling        1/4
//   dec1: conv(up(bottleneck) + enc1, w1 -> w0)     1/2
//   dec0: conv(up(dec1) + enc0, w0 -> w0)           full
//   head: 1x1 conv(w0 -> 1), softplus, + min_cost
//
// Every conv uses zero "same" padding followed by tanh.
struct CostArchitecture {
  int in_channels = 3;
  std::vector<int> widths = {8, 16};
  int kernel = 3;
  double min_cost = 1e-3;

  friend bool operator==(const CostArchitecture&, const CostArchitecture&) = default;
};

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// phi: a flat parameter vector with a named, shaped view.
class CostEncoderParams {
 public:
  explicit CostEncoderParams(CostArchitecture arch);

  const CostArchitecture& arch() const { return arch_; }
  const std::vector<TensorSpec>& tensors() const { return tensors_; }
  const TensorSpec& tensor(const std::string& name) const;
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  friend bool operator==(const CostEncoderParams& a, const CostEncoderParams& b) {
    return a.arch_ == b.arch_ && a.values_ == b.values_;
  }

 private:
  CostArchitecture arch_;
  std::vector<TensorSpec> tensors_;
  std::vector<double> values_;
};

// Throws Error(kInvalidArgument) for inconsistent architectures.
void validate_architecture(const CostArchitecture& arch);

// Fan-in scaled uniform weights (variance 1/fan_in), zero biases.
CostEncoderParams init_params(std::uint64_t seed, const CostArchitecture& arch);

// Activations recorded by cost_forward for the backward pass.
struct CostTape {
  int width = 0;
  int height = 0;
  std::vector<int> level_width;
  std::vector<int> level_height;
  std::vector<double> input;                   // channel-major
  std::vector<std::vector<double>> encoder;    // tanh outputs per level
  std::vector<std::vector<double>> pooled;     // conv inputs at levels 1..L
  std::vector<double> bottleneck;
  std::vector<std::vector<double>> merged;     // up + skip, decoder conv inputs
  std::vector<std::vector<double>> decoder;    // tanh outputs per level
  std::vector<double> head;                    // pre-softplus
};

struct CostForward {
  std::vector<double> cell_cost;  // J values, all >= min_cost
  CostTape tape;
};

// posterior is J x (K+1), row-major per cell. Throws Error(kInvalidArgument)
// for grids smaller than 8x8 and Error(kShapeMismatch) for wrong sizes.
CostForward cost_forward(std::span<const double> posterior, int width, int height,
                         const CostEncoderParams& params);

struct CostGradients {
  std::vector<double> params;     // same layout as CostEncoderParams::values()
  std::vector<double> posterior;  // J x (K+1)
};

CostGradients cost_backward(const CostTape& tape, const CostEncoderParams& params,
                            std::span<const double> upstream);

}  // namespace semnav

#endif  // SEMNAV_COST_MODEL_HPP_
