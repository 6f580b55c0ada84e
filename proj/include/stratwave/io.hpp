#pragma once

#include <string>
#include <vector>

namespace stratwave {

// Shortest round-trip decimal representation of a double (std::to_chars).
// Guarantees byte-stable output across runs and platforms with IEEE doubles.
std::string format_double(double value);

// Parses a double, rejecting trailing garbage. Throws IoError on failure;
// `context` names the offending field in the message.
double parse_double(const std::string& text, const std::string& context);

// Parses a non-negative integer. Throws IoError on failure.
long parse_long(const std::string& text, const std::string& context);

// Splits one CSV line on commas (no quoting; the formats used here are
// plain numeric tables). Whitespace around fields is trimmed.
std::vector<std::string> split_csv_line(const std::string& line);

// Writes `content` to `path` atomically: writes to a sibling temporary file
// and renames it over the target. Throws IoError on any filesystem failure.
void write_file_atomic(const std::string& path, const std::string& content);

// Reads a whole file into a string. Throws IoError if unreadable.
std::string read_file(const std::string& path);

} // namespace stratwave
