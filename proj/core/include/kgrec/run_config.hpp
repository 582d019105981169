#pragma once

#include <iosfwd>
#include <string>

#include "kgrec/model.hpp"

namespace kgrec {

/// Flat `key=value` run configuration: input paths, preprocessing knobs and
/// every model hyperparameter. Missing keys keep their defaults.
struct RunConfig {
  std::string interactions;
  std::string triples;
  std::string out = "out";
  double min_rating = 4.0;
  int min_count = 5;
  ModelConfig model;
};

/// Parses `key=value` lines; `#`-prefixed and blank lines are skipped.
/// Unknown keys, malformed lines and unparseable values throw ConfigError
/// with the line number.
RunConfig parse_config(std::istream& in, const std::string& source);
RunConfig parse_config(const std::string& path);

}  // namespace kgrec
