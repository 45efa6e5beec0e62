#include "nnmpc/model_io.h"

#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nnmpc/errors.h"

namespace nnmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

ChannelScaler ChannelScaler::FromRange(const VectorXd& lo, const VectorXd& hi) {
  if (lo.size() != hi.size()) {
    throw InvalidArgument("scaler bounds have different sizes");
  }
  ChannelScaler s;
  s.offset = 0.5 * (lo + hi);
  s.scale = 0.5 * (hi - lo);
  for (Eigen::Index i = 0; i < s.scale.size(); ++i) {
    if (!(s.scale[i] > 0.0)) s.scale[i] = 1.0;
  }
  return s;
}

ChannelScaler ChannelScaler::Identity(int dim) {
  return {VectorXd::Zero(dim), VectorXd::Ones(dim)};
}

VectorXd ChannelScaler::ToScaled(const VectorXd& physical) const {
  return ((physical - offset).array() / scale.array()).matrix();
}

VectorXd ChannelScaler::ToPhysical(const VectorXd& scaled) const {
  return offset + scale.cwiseProduct(scaled);
}

MatrixXd ChannelScaler::ToScaledRows(const MatrixXd& physical) const {
  MatrixXd out(physical.rows(), physical.cols());
  for (Eigen::Index r = 0; r < physical.rows(); ++r) {
    out.row(r) = ToScaled(physical.row(r).transpose()).transpose();
  }
  return out;
}

MatrixXd ChannelScaler::ToPhysicalRows(const MatrixXd& scaled) const {
  MatrixXd out(scaled.rows(), scaled.cols());
  for (Eigen::Index r = 0; r < scaled.rows(); ++r) {
    out.row(r) = ToPhysical(scaled.row(r).transpose()).transpose();
  }
  return out;
}

namespace {

json MatrixToJson(const MatrixXd& m) {
  std::vector<double> data;
  data.reserve(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatrixXd MatrixFromJson(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 ||
      static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw InvalidArgument("matrix payload does not match its shape");
  }
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[i * cols + j2];
  }
  return m;
}

json VectorToJson(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

VectorXd VectorFromJson(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(data.data(), data.size());
}

}  // namespace

std::string SerializeModel(const NnarxModel& model) {
  const ModelParams& p = model.params;
  p.Validate();
  json j;
  j["format"] = "nnarx";
  j["version"] = 1;
  j["lookback"] = p.lookback;
  j["input_dim"] = p.input_dim;
  j["output_dim"] = p.output_dim;
  json layers = json::array();
  for (const Layer& layer : p.layers) {
    layers.push_back({{"activation", std::string(ActivationName(layer.activation))},
                      {"W", MatrixToJson(layer.W)},
                      {"U", MatrixToJson(layer.U)},
                      {"b", VectorToJson(layer.b)}});
  }
  j["layers"] = layers;
  j["output_layer"] = {{"U", MatrixToJson(p.U0)}, {"b", VectorToJson(p.b0)}};
  j["scaling"] = {
      {"input_offset", VectorToJson(model.input_scaler.offset)},
      {"input_scale", VectorToJson(model.input_scaler.scale)},
      {"output_offset", VectorToJson(model.output_scaler.offset)},
      {"output_scale", VectorToJson(model.output_scaler.scale)}};
  return j.dump(1) + "\n";
}

NnarxModel ParseModel(const std::string& text) {
  NnarxModel model;
  try {
    const json j = json::parse(text);
    ModelParams& p = model.params;
    p.lookback = j.at("lookback").get<int>();
    p.input_dim = j.at("input_dim").get<int>();
    p.output_dim = j.at("output_dim").get<int>();
    for (const json& jl : j.at("layers")) {
      Layer layer;
      layer.activation =
          ParseActivation(jl.at("activation").get<std::string>());
      layer.W = MatrixFromJson(jl.at("W"));
      layer.U = MatrixFromJson(jl.at("U"));
      layer.b = VectorFromJson(jl.at("b"));
      p.layers.push_back(std::move(layer));
    }
    p.U0 = MatrixFromJson(j.at("output_layer").at("U"));
    p.b0 = VectorFromJson(j.at("output_layer").at("b"));
    const json& s = j.at("scaling");
    model.input_scaler.offset = VectorFromJson(s.at("input_offset"));
    model.input_scaler.scale = VectorFromJson(s.at("input_scale"));
    model.output_scaler.offset = VectorFromJson(s.at("output_offset"));
    model.output_scaler.scale = VectorFromJson(s.at("output_scale"));
  } catch (const json::exception& e) {
    throw InvalidArgument(fmt::format("malformed model file: {}", e.what()));
  }
  model.params.Validate();
  if (model.input_scaler.offset.size() != model.params.input_dim ||
      model.input_scaler.scale.size() != model.params.input_dim ||
      model.output_scaler.offset.size() != model.params.output_dim ||
      model.output_scaler.scale.size() != model.params.output_dim) {
    throw InvalidArgument("scaling constants do not match model dimensions");
  }
  return model;
}

void SaveModel(const NnarxModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileError(fmt::format("cannot write model file '{}'", path));
  out << SerializeModel(model);
  if (!out) throw FileError(fmt::format("failed writing '{}'", path));
}

NnarxModel LoadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError(fmt::format("model file '{}' not found", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseModel(buffer.str());
}

}  // namespace nnmpc
