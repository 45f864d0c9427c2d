#pragma once

#include <algorithm>
#include <cctype>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wclre {

// Error taxonomy mapped to CLI exit codes: usage=1, data/validation=2, numerical=3.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void log_warn(const std::string& msg) { std::cerr << "[warn] " << msg << '\n'; }
inline void log_info(const std::string& msg) { std::cerr << "[info] " << msg << '\n'; }

// ASCII-only case folding; non-ASCII bytes pass through untouched, so
// case-insensitive matching is ASCII-insensitive and byte-exact otherwise.
inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::vector<std::string> to_lower(const std::vector<std::string>& toks) {
  std::vector<std::string> out;
  out.reserve(toks.size());
  for (const auto& t : toks) out.push_back(to_lower(t));
  return out;
}

inline std::string join(const std::vector<std::string>& toks, char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out.push_back(sep);
    out += toks[i];
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace wclre
