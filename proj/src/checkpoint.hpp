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

#ifndef SEMNAV_CHECKPOINT_HPP_
#define SEMNAV_CHECKPOINT_HPP_

#include <filesystem>
#include <string>

#include "learner.hpp"

namespace semnav {

// Binary layout, all integers and floats little-endian:
//
//   "SNVCKPT1"
//   u32 n, n bytes of "key = value" lines (encoder and architecture options)
//   u32 tensor count
//   per tensor: u32 name length, name, u32 rank, u64 dims[rank], f64 data
//
// Doubles are stored bit-exact, so save followed by load reproduces theta.
std::string serialize_checkpoint(const ThetaParams& theta);
ThetaParams deserialize_checkpoint(const std::string& bytes);

// Throws Error(kIo) on filesystem errors and Error(kValidation) on corrupt
// or inconsistent contents.
void save_checkpoint(const std::filesystem::path& path, const ThetaParams& theta);
ThetaParams load_checkpoint(const std::filesystem::path& path);

}  // namespace semnav

#endif  // SEMNAV_CHECKPOINT_HPP_
