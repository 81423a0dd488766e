#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pgkd/matrix.hpp"

namespace pgkd {

// Model weights on disk: a JSON header (kind, shapes, config echo, seed)
// followed by raw little-endian doubles. Round-trips are bit-identical.
struct Checkpoint {
  std::string model_kind;
  nlohmann::json meta;  // config echo, seed, anything the producer wants back
  std::vector<std::pair<std::string, Matrix>> tensors;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pgkd
