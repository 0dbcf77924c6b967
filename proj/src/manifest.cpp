#include "pwsml/manifest.hpp"

#include "pwsml/error.hpp"
#include "pwsml/format.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace pwsml {

void Manifest::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

void Manifest::set(std::string key, double value) { set(std::move(key), format_short(value)); }
void Manifest::set(std::string key, long long value) { set(std::move(key), std::to_string(value)); }
void Manifest::set(std::string key, unsigned long long value) { set(std::move(key), std::to_string(value)); }

void Manifest::merge(const KeyValues& kv, std::string_view prefix) {
  for (const auto& [k, v] : kv) set(std::string(prefix) + k, v);
}

std::optional<std::string> Manifest::get(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string Manifest::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void Manifest::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << str();
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

Manifest Manifest::parse(std::string_view text) {
  Manifest m;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    m.set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
    if (end == text.size()) break;
  }
  return m;
}

Manifest Manifest::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

}  // namespace pwsml
