#include "fsb/tensor_ops.hpp"

#include <algorithm>
#include <cctype>

namespace fsb {

std::string_view to_string(TransformMode mode) noexcept {
  switch (mode) {
    case TransformMode::un: return "un";
    case TransformMode::l2n: return "l2n";
    case TransformMode::cl2n: return "cl2n";
  }
  return "un";
}

TransformMode parse_transform(std::string_view text) {
  std::string key(text);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (key == "un") return TransformMode::un;
  if (key == "l2n") return TransformMode::l2n;
  if (key == "cl2n") return TransformMode::cl2n;
  throw ConfigError("unknown transform '" + std::string(text) + "' (expected un, l2n or cl2n)");
}

}  // namespace fsb
