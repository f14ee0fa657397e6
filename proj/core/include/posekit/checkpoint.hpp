#pragma once

#include <string>
#include <vector>

#include "posekit/tensor.hpp"

namespace posekit {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Versioned text checkpoint: "posekit-checkpoint v1", a tensor count, then
/// per tensor a name line, a shape line and the values at 17 significant
/// digits (bit-exact double round trip).
void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

}  // namespace posekit
