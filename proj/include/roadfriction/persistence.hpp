// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "roadfriction/dataset.hpp"

namespace roadfriction {

/// Naive forecast: the most recent friction lag of each raw window.
std::vector<double> persistence_predict(const SampleSet& windows, std::size_t friction_channel);

/// Locates the friction channel in `config.features`. Throws Error(kSchema)
/// when friction is not an input feature.
std::size_t friction_channel(const WindowConfig& config);

inline std::vector<double> persistence_predict(const SampleSet& windows,
                                               const WindowConfig& config) {
  return persistence_predict(windows, friction_channel(config));
}

}  // namespace roadfriction
