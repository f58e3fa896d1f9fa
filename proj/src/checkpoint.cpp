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

#include "checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <sstream>

#include "dataset.hpp"
#include "error.hpp"

namespace semnav {

namespace {

constexpr char kMagic[] = "SNVCKPT1";
constexpr std::size_t kMagicSize = 8;

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    out_.append(static_cast<const char*>(data), n);
  }
  void u32(std::uint32_t v) { little_endian(v, 4); }
  void u64(std::uint64_t v) { little_endian(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  void little_endian(std::uint64_t v, int n) {
    for (int b = 0; b < n; ++b) out_.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  const char* bytes(std::size_t n) {
    if (n > in_.size() - pos_) throw Error(ErrorCode::kValidation, "checkpoint is truncated");
    const char* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(little_endian(4)); }
  std::uint64_t u64() { return little_endian(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    return std::string(bytes(n), n);
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::uint64_t little_endian(int n) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes(n));
    std::uint64_t v = 0;
    for (int b = 0; b < n; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    return v;
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t n = 0; n < values.size(); ++n) {
    if (n > 0) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[n]);
    } else {
      out += std::to_string(values[n]);
    }
  }
  return out;
}

std::map<std::string, std::string> parse_meta(const std::string& text) {
  std::map<std::string, std::string> meta;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw Error(ErrorCode::kValidation, "bad checkpoint header line");
    meta[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return meta;
}

const std::string& need(const std::map<std::string, std::string>& meta, const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw Error(ErrorCode::kValidation, "checkpoint lacks " + key);
  return it->second;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw Error(ErrorCode::kValidation, "bad number in checkpoint: " + s);
  }
  return v;
}

int to_int(const std::string& s) {
  const double v = to_double(s);
  if (v != static_cast<int>(v)) throw Error(ErrorCode::kValidation, "expected integer: " + s);
  return static_cast<int>(v);
}

template <typename T>
std::vector<T> split(const std::string& s) {
  std::vector<T> out;
  if (s.empty()) return out;
  std::size_t begin = 0;
  while (true) {
    const auto comma = s.find(',', begin);
    const std::string item = s.substr(begin, comma - begin);
    if constexpr (std::is_floating_point_v<T>) {
      out.push_back(to_double(item));
    } else {
      out.push_back(to_int(item));
    }
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return out;
}

void put(std::map<std::string, Tensor>& tensors, const std::string& name,
         std::vector<std::uint64_t> dims, const double* data) {
  std::uint64_t count = 1;
  for (auto d : dims) count *= d;
  tensors[name] = {std::move(dims), std::vector<double>(data, data + count)};
}

void take(const std::map<std::string, Tensor>& tensors, const std::string& name,
          const std::vector<std::uint64_t>& dims, double* dest) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw Error(ErrorCode::kValidation, "checkpoint lacks tensor " + name);
  if (it->second.dims != dims) {
    throw Error(ErrorCode::kValidation, "tensor " + name + " has the wrong shape");
  }
  std::copy(it->second.data.begin(), it->second.data.end(), dest);
}

}  // namespace

std::string serialize_checkpoint(const ThetaParams& theta) {
  const MapEncoderParams& psi = theta.psi;
  const CostArchitecture& arch = theta.phi.arch();
  std::string meta;
  meta += "map.mode = " + std::string(psi.mode == EncoderMode::kLinear ? "linear" : "network") + "\n";
  meta += "map.num_classes = " + std::to_string(psi.num_classes) + "\n";
  meta += "map.hidden = " + std::to_string(psi.hidden) + "\n";
  meta += "map.epsilon = " + format_double(psi.epsilon) + "\n";
  meta += "map.endpoint_only = " + std::string(psi.endpoint_only ? "true" : "false") + "\n";
  meta += "map.lambda_free = " + format_double(psi.lambda_free) + "\n";
  meta += "map.clamp = " + format_double(psi.clamp) + "\n";
  meta += "map.prior = " + join(psi.prior) + "\n";
  meta += "cost.in_channels = " + std::to_string(arch.in_channels) + "\n";
  meta += "cost.widths = " + join(arch.widths) + "\n";
  meta += "cost.kernel = " + std::to_string(arch.kernel) + "\n";
  meta += "cost.min_cost = " + format_double(arch.min_cost) + "\n";

  std::map<std::string, Tensor> tensors;
  const auto k = static_cast<std::uint64_t>(psi.num_classes);
  const auto h = static_cast<std::uint64_t>(psi.hidden);
  put(tensors, "map.linear", {k}, psi.linear_weights.data());
  if (psi.mode == EncoderMode::kNetwork) {
    const double* w = psi.network_weights.data();
    const auto inputs = static_cast<std::uint64_t>(psi.network_inputs());
    put(tensors, "map.network.w1", {h, inputs}, w);
    put(tensors, "map.network.b1", {h}, w + h * inputs);
    put(tensors, "map.network.w2", {k, h}, w + h * inputs + h);
    put(tensors, "map.network.b2", {k}, w + h * inputs + h + k * h);
  }
  for (const TensorSpec& spec : theta.phi.tensors()) {
    std::vector<std::uint64_t> dims(spec.shape.begin(), spec.shape.end());
    put(tensors, "cost." + spec.name, std::move(dims), theta.phi.values().data() + spec.offset);
  }

  Writer w;
  w.bytes(kMagic, kMagicSize);
  w.str(meta);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(tensor.dims.size()));
    for (auto d : tensor.dims) w.u64(d);
    for (double v : tensor.data) w.f64(v);
  }
  return w.take();
}

ThetaParams deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.bytes(kMagicSize), kMagic, kMagicSize) != 0) {
    throw Error(ErrorCode::kValidation, "not a semnav checkpoint");
  }
  const auto meta = parse_meta(r.str());
  std::map<std::string, Tensor> tensors;
  const std::uint32_t count = r.u32();
  for (std::uint32_t n = 0; n < count; ++n) {
    const std::string name = r.str();
    Tensor t;
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw Error(ErrorCode::kValidation, "tensor rank too large");
    std::uint64_t size = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.u64());
      size *= t.dims.back();
    }
    if (size > bytes.size() / 8) throw Error(ErrorCode::kValidation, "checkpoint is truncated");
    t.data.resize(size);
    for (auto& v : t.data) v = r.f64();
    tensors[name] = std::move(t);
  }
  if (!r.done()) throw Error(ErrorCode::kValidation, "trailing bytes in checkpoint");

  const std::string& mode = need(meta, "map.mode");
  if (mode != "linear" && mode != "network") {
    throw Error(ErrorCode::kValidation, "unknown map encoder mode " + mode);
  }
  MapEncoderParams psi;
  psi.mode = mode == "linear" ? EncoderMode::kLinear : EncoderMode::kNetwork;
  psi.num_classes = to_int(need(meta, "map.num_classes"));
  psi.hidden = to_int(need(meta, "map.hidden"));
  psi.epsilon = to_double(need(meta, "map.epsilon"));
  const std::string& endpoint = need(meta, "map.endpoint_only");
  if (endpoint != "true" && endpoint != "false") {
    throw Error(ErrorCode::kValidation, "map.endpoint_only must be true or false");
  }
  psi.endpoint_only = endpoint == "true";
  psi.lambda_free = to_double(need(meta, "map.lambda_free"));
  psi.clamp = to_double(need(meta, "map.clamp"));
  psi.prior = split<double>(need(meta, "map.prior"));
  if (psi.num_classes < 1 || psi.hidden < 1) {
    throw Error(ErrorCode::kValidation, "bad map encoder sizes in checkpoint");
  }
  const auto k = static_cast<std::uint64_t>(psi.num_classes);
  const auto h = static_cast<std::uint64_t>(psi.hidden);
  psi.linear_weights.resize(k);
  take(tensors, "map.linear", {k}, psi.linear_weights.data());
  if (psi.mode == EncoderMode::kNetwork) {
    psi.network_weights.resize(psi.network_size());
    double* w = psi.network_weights.data();
    const auto inputs = static_cast<std::uint64_t>(psi.network_inputs());
    take(tensors, "map.network.w1", {h, inputs}, w);
    take(tensors, "map.network.b1", {h}, w + h * inputs);
    take(tensors, "map.network.w2", {k, h}, w + h * inputs + h);
    take(tensors, "map.network.b2", {k}, w + h * inputs + h + k * h);
  }
  try {
    psi.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kValidation, std::string("checkpoint map encoder: ") + e.what());
  }

  CostArchitecture arch;
  arch.in_channels = to_int(need(meta, "cost.in_channels"));
  arch.widths = split<int>(need(meta, "cost.widths"));
  arch.kernel = to_int(need(meta, "cost.kernel"));
  arch.min_cost = to_double(need(meta, "cost.min_cost"));
  try {
    validate_architecture(arch);
  } catch (const Error& e) {
    throw Error(ErrorCode::kValidation, std::string("checkpoint architecture: ") + e.what());
  }
  if (arch.in_channels != psi.num_classes + 1) {
    throw Error(ErrorCode::kValidation, "cost encoder input channels != K + 1");
  }
  CostEncoderParams phi(arch);
  for (const TensorSpec& spec : phi.tensors()) {
    std::vector<std::uint64_t> dims(spec.shape.begin(), spec.shape.end());
    take(tensors, "cost." + spec.name, dims, phi.values().data() + spec.offset);
  }
  const std::size_t expected = 1 + (psi.mode == EncoderMode::kNetwork ? 4 : 0) +
                               phi.tensors().size();
  if (tensors.size() != expected) {
    throw Error(ErrorCode::kValidation, "checkpoint holds unexpected tensors");
  }
  return {std::move(psi), std::move(phi)};
}

void save_checkpoint(const std::filesystem::path& path, const ThetaParams& theta) {
  write_file(path, serialize_checkpoint(theta));
}

ThetaParams load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

}  // namespace semnav
