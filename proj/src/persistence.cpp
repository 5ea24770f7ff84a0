// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/persistence.hpp"

#include <algorithm>

#include "roadfriction/error.hpp"

namespace roadfriction {

std::size_t friction_channel(const WindowConfig& config) {
  auto it = std::find(config.features.begin(), config.features.end(), Feature::kFriction);
  if (it == config.features.end()) {
    throw Error(ErrorKind::kSchema, "persistence needs friction among the input features");
  }
  return static_cast<std::size_t>(it - config.features.begin());
}

std::vector<double> persistence_predict(const SampleSet& windows, std::size_t friction_channel) {
  if (windows.t_lags < 1) throw Error(ErrorKind::kInvalidInput, "windows have no lags");
  if (friction_channel >= windows.width) {
    throw Error(ErrorKind::kDimension, "friction channel out of range");
  }
  std::vector<double> out(windows.size());
  const std::size_t last = (windows.t_lags - 1) * windows.width + friction_channel;
  for (std::size_t i = 0; i < windows.size(); ++i) out[i] = windows.sample(i)[last];
  return out;
}

}  // namespace roadfriction
