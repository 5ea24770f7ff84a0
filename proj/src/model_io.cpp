// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/model_io.hpp"

#include <algorithm>

#include "json.hpp"
#include "roadfriction/error.hpp"
#include "roadfriction/io.hpp"
#include "roadfriction/persistence.hpp"

namespace roadfriction {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kFormatTag = "roadfriction-model";

template <class T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::kSchema, std::string("model file lacks '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("bad model field '") + key + "': " + e.what());
  }
}

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorKind::kSchema, std::string(what) + " has " + std::to_string(got) +
                                        " values, expected " + std::to_string(want));
  }
}

Json tree_to_json(const RegressionTree& tree) {
  Json feature = Json::array(), threshold = Json::array(), left = Json::array(),
       right = Json::array(), value = Json::array(), n = Json::array();
  for (const TreeNode& node : tree.nodes()) {
    feature.push_back(node.feature);
    threshold.push_back(node.threshold);
    left.push_back(node.left);
    right.push_back(node.right);
    value.push_back(node.value);
    n.push_back(node.n_samples);
  }
  return Json{{"feature", feature}, {"threshold", threshold}, {"left", left},
              {"right", right},     {"value", value},         {"n_samples", n}};
}

RegressionTree tree_from_json(const Json& j) {
  const auto feature = field<std::vector<int>>(j, "feature");
  const auto threshold = field<std::vector<double>>(j, "threshold");
  const auto left = field<std::vector<std::size_t>>(j, "left");
  const auto right = field<std::vector<std::size_t>>(j, "right");
  const auto value = field<std::vector<double>>(j, "value");
  const auto n = field<std::vector<std::size_t>>(j, "n_samples");
  const std::size_t count = feature.size();
  if (count == 0) throw Error(ErrorKind::kSchema, "tree has no nodes");
  for (std::size_t size : {threshold.size(), left.size(), right.size(), value.size(), n.size()}) {
    require_size(size, count, "tree node array");
  }
  std::vector<TreeNode> nodes(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (feature[i] >= 0 && (left[i] >= count || right[i] >= count || left[i] <= i || right[i] <= i)) {
      throw Error(ErrorKind::kSchema, "tree child index out of range");
    }
    nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i], n[i]};
  }
  return RegressionTree(std::move(nodes));
}

std::vector<double> matrix_row_major(const RowMatrix& m) {
  return {m.data(), m.data() + m.size()};
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::kLstm: return "lstm";
    case ModelKind::kFfnn: return "ffnn";
    case ModelKind::kForest: return "random_forest";
    case ModelKind::kSvr: return "svr";
    case ModelKind::kPersistence: return "persistence";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : kAllModelKinds) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::kEnum, "unknown model kind '" + std::string(name) + "'");
}

ModelKind SavedModel::kind() const noexcept {
  return static_cast<ModelKind>(body.index());
}

std::string serialize_model(const SavedModel& model) {
  Json j;
  j["format"] = kFormatTag;
  j["version"] = kModelFormatVersion;
  j["kind"] = to_string(model.kind());
  j["seed"] = model.seed;
  j["window"] = Json{{"t_lags", model.window.t_lags},
                     {"interval_days", model.window.interval_days},
                     {"features", join_features(model.window.features)}};
  if (model.kind() != ModelKind::kPersistence) {
    if (!model.scaler.fitted()) throw Error(ErrorKind::kState, "cannot save a model without a fitted scaler");
    j["scaler"] = Json{{"shift", model.scaler.shift()},
                       {"scale", model.scaler.scale()},
                       {"target_shift", model.scaler.target_shift()},
                       {"target_scale", model.scaler.target_scale()}};
  }
  std::visit(
      [&j](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, LstmParams>) {
          j["input_dim"] = body.input_dim();
          j["hidden_dim"] = body.hidden_dim();
          j["params"] = body.data();
        } else if constexpr (std::is_same_v<T, FfnnParams>) {
          j["input_dim"] = body.input_dim();
          j["hidden1"] = body.hidden1();
          j["hidden2"] = body.hidden2();
          j["params"] = body.data();
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          j["input_dim"] = body.input_dim;
          j["forest_seed"] = body.seed;
          Json trees = Json::array();
          for (const RegressionTree& t : body.trees) trees.push_back(tree_to_json(t));
          j["trees"] = std::move(trees);
        } else if constexpr (std::is_same_v<T, SvrModel>) {
          j["input_dim"] = body.input_dim();
          j["n_support"] = body.support_vectors.rows();
          j["support_vectors"] = matrix_row_major(body.support_vectors);
          j["coefficients"] = body.coefficients;
          j["bias"] = body.bias;
          j["gamma"] = body.gamma;
          j["c"] = body.c;
          j["epsilon"] = body.epsilon;
          j["objective"] = body.objective;
          j["kkt_residual"] = body.kkt_residual;
          j["iterations"] = body.iterations;
        }
      },
      model.body);
  return j.dump(1) + "\n";
}

SavedModel deserialize_model(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kSchema, std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || field<std::string>(j, "format") != kFormatTag) {
    throw Error(ErrorKind::kSchema, "not a roadfriction model file");
  }
  if (field<int>(j, "version") != kModelFormatVersion) {
    throw Error(ErrorKind::kSchema, "unsupported model format version");
  }
  SavedModel m;
  m.seed = field<std::uint64_t>(j, "seed");
  const Json& w = j.at("window");
  m.window.t_lags = field<std::size_t>(w, "t_lags");
  m.window.interval_days = field<std::size_t>(w, "interval_days");
  m.window.features = parse_feature_list(field<std::string>(w, "features"));
  m.window.validate();
  const std::size_t stride = m.window.t_lags * m.window.width();

  const ModelKind kind = parse_model_kind(field<std::string>(j, "kind"));
  if (kind != ModelKind::kPersistence) {
    const Json& s = j.at("scaler");
    auto shift = field<std::vector<double>>(s, "shift");
    auto scale = field<std::vector<double>>(s, "scale");
    require_size(shift.size(), m.window.width(), "scaler shift");
    require_size(scale.size(), m.window.width(), "scaler scale");
    m.scaler = Scaler::from_parts(std::move(shift), std::move(scale), field<double>(s, "target_shift"),
                                  field<double>(s, "target_scale"));
  }

  switch (kind) {
    case ModelKind::kLstm: {
      const auto input_dim = field<std::size_t>(j, "input_dim");
      require_size(input_dim, m.window.width(), "LSTM input_dim");
      LstmParams p(input_dim, field<std::size_t>(j, "hidden_dim"));
      auto data = field<std::vector<double>>(j, "params");
      require_size(data.size(), p.data().size(), "LSTM params");
      p.data() = std::move(data);
      m.body = std::move(p);
      break;
    }
    case ModelKind::kFfnn: {
      const auto input_dim = field<std::size_t>(j, "input_dim");
      require_size(input_dim, stride, "FFNN input_dim");
      FfnnParams p(input_dim, field<std::size_t>(j, "hidden1"), field<std::size_t>(j, "hidden2"));
      auto data = field<std::vector<double>>(j, "params");
      require_size(data.size(), p.data().size(), "FFNN params");
      p.data() = std::move(data);
      m.body = std::move(p);
      break;
    }
    case ModelKind::kForest: {
      ForestModel f;
      f.input_dim = field<std::size_t>(j, "input_dim");
      require_size(f.input_dim, stride, "forest input_dim");
      f.seed = field<std::uint64_t>(j, "forest_seed");
      for (const Json& t : j.at("trees")) {
        RegressionTree tree = tree_from_json(t);
        for (const TreeNode& node : tree.nodes()) {
          if (node.feature >= static_cast<int>(f.input_dim)) {
            throw Error(ErrorKind::kSchema, "tree split feature out of range");
          }
        }
        f.trees.push_back(std::move(tree));
      }
      m.body = std::move(f);
      break;
    }
    case ModelKind::kSvr: {
      SvrModel s;
      const auto input_dim = field<std::size_t>(j, "input_dim");
      require_size(input_dim, stride, "SVR input_dim");
      const auto n_support = field<std::size_t>(j, "n_support");
      const auto sv = field<std::vector<double>>(j, "support_vectors");
      require_size(sv.size(), n_support * input_dim, "SVR support vectors");
      s.support_vectors = Eigen::Map<const RowMatrix>(sv.data(), static_cast<Eigen::Index>(n_support),
                                                      static_cast<Eigen::Index>(input_dim));
      s.coefficients = field<std::vector<double>>(j, "coefficients");
      require_size(s.coefficients.size(), n_support, "SVR coefficients");
      s.bias = field<double>(j, "bias");
      s.gamma = field<double>(j, "gamma");
      s.c = field<double>(j, "c");
      s.epsilon = field<double>(j, "epsilon");
      s.objective = field<double>(j, "objective");
      s.kkt_residual = field<double>(j, "kkt_residual");
      s.iterations = field<long>(j, "iterations");
      m.body = std::move(s);
      break;
    }
    case ModelKind::kPersistence:
      friction_channel(m.window);
      m.body = PersistenceModel{};
      break;
  }
  return m;
}

void save_model(const SavedModel& model, const std::filesystem::path& path) {
  atomic_write(path, serialize_model(model));
}

SavedModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

std::vector<double> predict(const SavedModel& model, const SampleSet& windows) {
  if (windows.t_lags != model.window.t_lags || windows.width != model.window.width()) {
    throw Error(ErrorKind::kDimension, "windows do not match the model's layout");
  }
  return std::visit(
      [&](const auto& body) -> std::vector<double> {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, LstmParams>) {
          return predict(body, model.scaler, windows);
        } else if constexpr (std::is_same_v<T, FfnnParams>) {
          return ffnn_predict(body, model.scaler, windows);
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          return rf_predict(body, model.scaler, windows);
        } else if constexpr (std::is_same_v<T, SvrModel>) {
          return svr_predict(body, model.scaler, windows);
        } else {
          return persistence_predict(windows, model.window);
        }
      },
      model.body);
}

}  // namespace roadfriction
