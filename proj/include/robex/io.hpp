#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "robex/common.hpp"
#include "robex/model.hpp"

namespace robex {

// Model file layout:
// {"input_dim": d, "num_classes": C, "layers": [{"out_dim", "in_dim",
//  "weights": [row-major], "bias": [...], "activation": "relu"|"identity"}]}
// Weights are written with 17 significant digits so save -> load -> save is
// byte-identical and forward outputs round-trip exactly.
inline void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "{\n";
  out << "  \"input_dim\": " << m.input_dim << ",\n";
  out << "  \"num_classes\": " << m.num_classes << ",\n";
  out << "  \"layers\": [\n";
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const Layer& l = m.layers[li];
    out << "    {\n";
    out << "      \"out_dim\": " << l.out_dim << ",\n";
    out << "      \"in_dim\": " << l.in_dim << ",\n";
    out << "      \"weights\": [";
    for (std::size_t i = 0; i < l.weights.size(); ++i) {
      if (i) out << ", ";
      out << format_double_17(l.weights[i]);
    }
    out << "],\n";
    out << "      \"bias\": [";
    for (std::size_t i = 0; i < l.bias.size(); ++i) {
      if (i) out << ", ";
      out << format_double_17(l.bias[i]);
    }
    out << "],\n";
    out << "      \"activation\": \"" << activation_name(l.activation) << "\"\n";
    out << "    }" << (li + 1 < m.layers.size() ? "," : "") << "\n";
  }
  out << "  ]\n";
  out << "}\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed model file '" + path + "': " + e.what());
  }
  Model m;
  try {
    m.input_dim = j.at("input_dim").get<int>();
    m.num_classes = j.at("num_classes").get<int>();
    for (const auto& jl : j.at("layers")) {
      Layer l;
      l.out_dim = jl.at("out_dim").get<int>();
      l.in_dim = jl.at("in_dim").get<int>();
      l.weights = jl.at("weights").get<std::vector<double>>();
      l.bias = jl.at("bias").get<Vector>();
      l.activation = activation_from_name(jl.at("activation").get<std::string>());
      m.layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("model file '" + path + "' schema error: " + e.what());
  }
  try {
    m.validate();
  } catch (const NumericError& e) {
    throw IoError("model file '" + path + "' invalid: " + e.what());
  }
  for (const Layer& l : m.layers) {
    if (!all_finite(l.weights) || !all_finite(l.bias)) {
      throw IoError("model file '" + path + "' contains non-finite parameters");
    }
  }
  return m;
}

// Dataset file: CSV, one example per row, first column the integer label,
// then d feature columns. Lines starting with '#' are headers/comments.
inline std::vector<Example> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file '" + path + "'");
  std::vector<Example> data;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string cell;
    Example e;
    const std::string where = path + ":" + std::to_string(line_no);
    if (!std::getline(ss, cell, ',')) throw IoError("empty row at " + where);
    try {
      e.label = std::stoi(cell);
    } catch (...) {
      throw IoError("bad label '" + cell + "' at " + where);
    }
    while (std::getline(ss, cell, ',')) {
      e.x.push_back(parse_double(cell, where.c_str()));
    }
    if (e.x.empty()) throw IoError("row without features at " + where);
    if (dim == 0) dim = e.x.size();
    if (e.x.size() != dim) {
      throw IoError("row has " + std::to_string(e.x.size()) + " features, expected " +
                    std::to_string(dim) + " at " + where);
    }
    require_finite(e.x, where.c_str());
    data.push_back(std::move(e));
  }
  if (data.empty()) throw IoError("dataset file '" + path + "' has no rows");
  return data;
}

inline void save_dataset(const std::vector<Example>& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  if (!data.empty()) {
    out << "# label";
    for (std::size_t i = 0; i < data.front().x.size(); ++i) out << ",f" << i;
    out << "\n";
  }
  for (const Example& e : data) {
    out << e.label;
    for (double v : e.x) out << ',' << format_double(v);
    out << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace robex
