#include "bfamr/kv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "bfamr/error.hpp"

namespace bfamr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* kind) {
  throw UserError("config key '" + key + "': '" + value + "' is not " + kind);
}

}  // namespace

KeyValues parse_kv_text(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UserError(origin + ": line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw UserError(origin + ": line " + std::to_string(line_no) + ": empty key");
    if (kv.count(key))
      throw UserError(origin + ": line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    kv.emplace(std::move(key), trim(t.substr(eq + 1)));
  }
  return kv;
}

KeyValues read_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_kv_text(buf.str(), path.string());
}

void write_kv_file(const std::filesystem::path& path, const KeyValues& kv) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size()) bad_value(key, value, "an integer");
  return out;
}

std::uint64_t parse_uint64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size())
    bad_value(key, value, "a non-negative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value, "a number");
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, value, "a number");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "a boolean");
}

}  // namespace bfamr
