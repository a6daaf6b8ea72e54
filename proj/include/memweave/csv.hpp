#pragma once

#include <string>
#include <string_view>

namespace memweave {

/// RFC 4180 quoting for fields holding commas, quotes or newlines, e.g. "(3,1)".
inline std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace memweave
