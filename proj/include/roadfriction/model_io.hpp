// SPDX-License-Identifier: Apache-2.0
//
// Versioned JSON model files. Every model is stored with its window layout,
// the scaler it was trained with and its seed; doubles are written in
// shortest round-trip form, so a loaded model predicts bitwise-identically.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "roadfriction/dataset.hpp"
#include "roadfriction/ffnn.hpp"
#include "roadfriction/lstm.hpp"
#include "roadfriction/random_forest.hpp"
#include "roadfriction/svr.hpp"

namespace roadfriction {

enum class ModelKind : std::uint8_t { kLstm, kFfnn, kForest, kSvr, kPersistence };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::kLstm, ModelKind::kFfnn,
                                               ModelKind::kForest, ModelKind::kSvr,
                                               ModelKind::kPersistence};

std::string_view to_string(ModelKind kind) noexcept;
/// Throws Error(kEnum) for unknown names.
ModelKind parse_model_kind(std::string_view name);

/// Persistence carries no parameters.
struct PersistenceModel {
  friend bool operator==(const PersistenceModel&, const PersistenceModel&) = default;
};

struct SavedModel {
  WindowConfig window;
  Scaler scaler;
  std::uint64_t seed = 0;
  std::variant<LstmParams, FfnnParams, ForestModel, SvrModel, PersistenceModel> body;

  ModelKind kind() const noexcept;
};

inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const SavedModel& model);
/// Throws Error(kSchema) on a wrong format tag, version or shape.
SavedModel deserialize_model(std::string_view text);

void save_model(const SavedModel& model, const std::filesystem::path& path);
SavedModel load_model(const std::filesystem::path& path);

/// Friction-scale predictions for raw windows.
std::vector<double> predict(const SavedModel& model, const SampleSet& windows);

}  // namespace roadfriction
