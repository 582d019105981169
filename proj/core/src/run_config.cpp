#include "kgrec/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "kgrec/errors.hpp"

namespace kgrec {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

double to_real(const std::string& v, const std::string& source, int line) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(x)) {
    throw ConfigError(source, line, "expected a number, got '" + v + "'");
  }
  return x;
}

int to_int(const std::string& v, const std::string& source, int line) {
  int x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(source, line, "expected an integer, got '" + v + "'");
  }
  return x;
}

std::int64_t to_int64(const std::string& v, const std::string& source, int line) {
  std::int64_t x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(source, line, "expected an integer, got '" + v + "'");
  }
  return x;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source, lineno, "expected key=value, got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, lineno, "empty key");

    if (key == "interactions") {
      config.interactions = value;
    } else if (key == "triples") {
      config.triples = value;
    } else if (key == "out") {
      config.out = value;
    } else if (key == "min_rating") {
      config.min_rating = to_real(value, source, lineno);
    } else if (key == "min_count") {
      config.min_count = to_int(value, source, lineno);
    } else if (key == "embed_dim") {
      config.model.embed_dim = to_int(value, source, lineno);
    } else if (key == "num_hops") {
      config.model.num_hops = to_int(value, source, lineno);
    } else if (key == "leaky_slope") {
      config.model.leaky_slope = to_real(value, source, lineno);
    } else if (key == "learning_rate") {
      config.model.learning_rate = to_real(value, source, lineno);
    } else if (key == "epochs") {
      config.model.epochs = to_int(value, source, lineno);
    } else if (key == "neg_ratio") {
      config.model.neg_ratio = to_int(value, source, lineno);
    } else if (key == "neighbor_cap") {
      config.model.neighbor_cap = to_int(value, source, lineno);
    } else if (key == "test_fraction") {
      config.model.test_fraction = to_real(value, source, lineno);
    } else if (key == "seed") {
      config.model.seed = to_int64(value, source, lineno);
    } else if (key == "optimizer") {
      if (value == "sgd") {
        config.model.optimizer = OptimizerKind::sgd;
      } else if (value == "adam") {
        config.model.optimizer = OptimizerKind::adam;
      } else {
        throw ConfigError(source, lineno, "optimizer must be 'sgd' or 'adam', got '" + value + "'");
      }
    } else if (key == "attention") {
      if (value == "softmax") {
        config.model.attention = AttentionMode::softmax;
      } else if (value == "uniform") {
        config.model.attention = AttentionMode::uniform;
      } else {
        throw ConfigError(source, lineno,
                          "attention must be 'softmax' or 'uniform', got '" + value + "'");
      }
    } else {
      throw ConfigError(source, lineno, "unknown key '" + key + "'");
    }
  }
  config.model.validate();
  if (config.min_count < 1) throw ConfigError("min_count must be >= 1");
  return config;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  return parse_config(in, path);
}

}  // namespace kgrec
