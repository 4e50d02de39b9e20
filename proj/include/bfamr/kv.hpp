#pragma once

// Flat "key = value" text files and typed value parsing.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace bfamr {

using KeyValues = std::map<std::string, std::string>;

// Blank lines and lines starting with '#' are ignored. Throws UserError on
// malformed lines or repeated keys, IoError when the file cannot be read.
KeyValues read_kv_file(const std::filesystem::path& path);
KeyValues parse_kv_text(const std::string& text, const std::string& origin);
void write_kv_file(const std::filesystem::path& path, const KeyValues& kv);

int parse_int(const std::string& key, const std::string& value);
std::uint64_t parse_uint64(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
// true/false, 1/0, yes/no, on/off.
bool parse_bool(const std::string& key, const std::string& value);

}  // namespace bfamr
