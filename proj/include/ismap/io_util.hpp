#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ismap {

// Canonical decimal formatting for serialized real values: shortest of
// %.9g. Nine significant digits round-trip for values that originated from
// a 9-digit decimal file, and keep report files byte-stable across runs.
std::string format_g9(double v);

std::string trim(const std::string& s);

// Splits on a delimiter, keeping empty fields.
std::vector<std::string> split(const std::string& s, char delim);

// Strict numeric parsing; throws ParseError with `context` on failure.
double parse_double(const std::string& s, const std::string& context);
long parse_long(const std::string& s, const std::string& context);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a 64-bit digest of a file's bytes, as 16 hex chars. Used in run
// manifests to pin down inputs.
std::string file_digest_hex(const std::string& path);

}  // namespace ismap
