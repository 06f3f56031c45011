#include "geodet/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "geodet/errors.hpp"

namespace geodet {

using nlohmann::json;

namespace {

double expected_parameter_count(const ModelConfig& c) {
  const double h = c.hidden, ch = c.channels, f = c.ffn_mult * ch, k = c.classes;
  const double backbone = 6 * h + h + h * ch + ch;
  const double gate = ch;
  const double proj = 2 * ch * ch + ch;
  const double block = 4 * (ch * ch + ch) + ch * f + f + f * ch + ch;
  const double heads = (ch * h + h + h * 6 + 6) + (ch * h + h + h * (k + 1) + (k + 1));
  return backbone + gate + proj + c.layers * block + heads;
}

}  // namespace

std::string save_checkpoint(const Checkpoint& ck) {
  const ModelConfig& c = ck.params.config;
  json tensors = json::array();
  ck.params.for_each_tensor([&](const std::string& name, ParamGroup, const auto& t) {
    json data = json::array();
    for (Eigen::Index i = 0; i < t.size(); ++i) data.push_back(t.data()[i]);
    tensors.push_back(json{{"name", name}, {"shape", {t.rows(), t.cols()}}, {"data", std::move(data)}});
  });
  json doc{{"format", "geodet-checkpoint"},
           {"version", kCheckpointVersion},
           {"config",
            {{"hidden", c.hidden},
             {"channels", c.channels},
             {"layers", c.layers},
             {"classes", c.classes},
             {"ffn_mult", c.ffn_mult}}},
           {"pipeline", {{"alpha", ck.alpha}, {"voxel_size", ck.voxel_size}}},
           {"class_names", ck.class_names},
           {"tensors", std::move(tensors)}};
  return doc.dump() + "\n";
}

Checkpoint load_checkpoint(std::string_view bytes, const std::optional<ModelConfig>& expected) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != "geodet-checkpoint") {
      throw ParseError("checkpoint: not a geodet checkpoint");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw ParseError("checkpoint: unsupported version " + doc.at("version").dump());
    }
    const json& jc = doc.at("config");
    ModelConfig config;
    config.hidden = jc.at("hidden").get<int>();
    config.channels = jc.at("channels").get<int>();
    config.layers = jc.at("layers").get<int>();
    config.classes = jc.at("classes").get<int>();
    config.ffn_mult = jc.at("ffn_mult").get<int>();
    validate_model_config(config);
    if (config.layers > 1024 || config.hidden > (1 << 16) || config.channels > (1 << 16) ||
        config.classes > (1 << 16) || config.ffn_mult > 64) {
      throw ShapeError("checkpoint: implausible model dimensions");
    }
    if (expected && !(*expected == config)) {
      throw ShapeError("checkpoint: stored model (channels " + std::to_string(config.channels) + ", hidden " +
                       std::to_string(config.hidden) + ", layers " + std::to_string(config.layers) +
                       ", classes " + std::to_string(config.classes) +
                       ") does not match the requested configuration (channels " +
                       std::to_string(expected->channels) + ", hidden " + std::to_string(expected->hidden) +
                       ", layers " + std::to_string(expected->layers) + ", classes " +
                       std::to_string(expected->classes) + ")");
    }

    Checkpoint ck;
    ck.alpha = doc.at("pipeline").at("alpha").get<double>();
    ck.voxel_size = doc.at("pipeline").at("voxel_size").get<double>();
    ck.class_names = doc.at("class_names").get<std::vector<std::string>>();
    if (static_cast<int>(ck.class_names.size()) != config.classes) {
      throw ShapeError("checkpoint: class_names length differs from config.classes");
    }
    // Shapes come from the config; the stored shapes must agree exactly. The
    // stored value count is checked first so a hostile config cannot force a
    // huge allocation.
    const json& tensors = doc.at("tensors");
    if (!tensors.is_array()) throw ParseError("checkpoint: tensors must be an array");
    double stored = 0.0;
    for (const auto& jt : tensors) stored += static_cast<double>(jt.at("data").size());
    if (stored != expected_parameter_count(config)) {
      throw ShapeError("checkpoint: stored parameter count does not match the model configuration");
    }
    ck.params = init_params(config, 0);
    std::size_t k = 0;
    ck.params.for_each_tensor([&](const std::string& name, ParamGroup, auto& t) {
      if (k >= tensors.size()) throw ShapeError("checkpoint: missing tensor '" + name + "'");
      const json& jt = tensors[k++];
      if (jt.at("name").get<std::string>() != name) {
        throw ShapeError("checkpoint: expected tensor '" + name + "', found '" + jt.at("name").get<std::string>() + "'");
      }
      const auto shape = jt.at("shape").get<std::vector<long long>>();
      if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols()) {
        throw ShapeError("checkpoint: tensor '" + name + "' has shape " + jt.at("shape").dump() + ", expected [" +
                         std::to_string(t.rows()) + "," + std::to_string(t.cols()) + "]");
      }
      const json& data = jt.at("data");
      if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != t.size()) {
        throw ShapeError("checkpoint: tensor '" + name + "' has the wrong number of values");
      }
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = data[static_cast<std::size_t>(i)].get<double>();
      if (!t.allFinite()) throw ValidationError("checkpoint: tensor '" + name + "' has non-finite values");
    });
    if (k != tensors.size()) throw ShapeError("checkpoint: unexpected extra tensors");
    return ck;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
  if (!(a.config == b.config)) return false;
  std::vector<const double*> pa;
  std::vector<Eigen::Index> sa;
  a.for_each_tensor([&](const std::string&, ParamGroup, const auto& t) {
    pa.push_back(t.data());
    sa.push_back(t.size());
  });
  std::size_t k = 0;
  bool equal = true;
  b.for_each_tensor([&](const std::string&, ParamGroup, const auto& t) {
    if (k >= pa.size() || sa[k] != t.size()) {
      equal = false;
    } else {
      for (Eigen::Index i = 0; i < t.size(); ++i) equal = equal && pa[k][i] == t.data()[i];
    }
    ++k;
  });
  return equal && k == pa.size();
}

}  // namespace geodet
