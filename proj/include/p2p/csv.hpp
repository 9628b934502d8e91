#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace p2p::csv {

struct Row {
    std::size_t line;  // 1-based line number in the source file
    std::vector<std::string> fields;
};

/// Reads a comma-separated file. Blank lines are skipped; fields are trimmed.
/// Quoting is not supported. Throws ConfigError when the file cannot be opened.
std::vector<Row> read(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line);

/// Parses a floating point field; accepts "inf". Throws ParseError naming the line.
double to_double(const std::string& field, std::size_t line, std::string_view column);

/// Throws ParseError unless the header row matches `expected` exactly.
void expect_header(const Row& header, const std::vector<std::string>& expected);

}  // namespace p2p::csv
