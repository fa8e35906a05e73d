#include "privkt/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "privkt/error.hpp"

namespace privkt {

using nlohmann::json;

std::string checkpoint_to_json(const DenseNet& net) {
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["input_dim"] = net.input_dim();
  j["layers"] = json::array();
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    const auto w = net.weights(li);
    const auto b = net.biases(li);
    j["layers"].push_back({
        {"units", net.layers()[li].out},
        {"activation", to_string(net.layers()[li].activation)},
        {"weights", std::vector<double>(w.begin(), w.end())},
        {"biases", std::vector<double>(b.begin(), b.end())},
    });
  }
  return j.dump(1) + "\n";
}

DenseNet checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") +
                      e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw FormatError("unsupported checkpoint format_version " +
                        std::to_string(version));
    }
    NetSpec spec{j.at("input_dim").get<std::size_t>(), {}};
    for (const auto& l : j.at("layers")) {
      spec.layers.push_back(
          {l.at("units").get<std::size_t>(),
           activation_from_string(l.at("activation").get<std::string>())});
    }
    DenseNet net(spec);
    std::size_t li = 0;
    for (const auto& l : j.at("layers")) {
      const auto w = l.at("weights").get<std::vector<double>>();
      const auto b = l.at("biases").get<std::vector<double>>();
      auto dw = net.weights(li);
      auto db = net.biases(li);
      if (w.size() != dw.size() || b.size() != db.size()) {
        throw FormatError("checkpoint layer " + std::to_string(li) +
                          " has wrong parameter count");
      }
      std::copy(w.begin(), w.end(), dw.begin());
      std::copy(b.begin(), b.end(), db.begin());
      ++li;
    }
    return net;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const DenseNet& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << checkpoint_to_json(net);
}

DenseNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace privkt
