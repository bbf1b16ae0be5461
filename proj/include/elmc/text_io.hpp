#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "elmc/types.hpp"

namespace elmc {

/// Decimal text with 17 significant digits; parses back to the identical double.
std::string format_real(double value);

/// Parses one CSV cell; throws ValidationError naming `where` on garbage or non-finite text.
double parse_real(std::string_view text, std::string_view where);

/// Headerless comma-separated matrix, one row per line.
void write_csv(const std::filesystem::path& path, const Matrix& values);

/// Reads a headerless CSV. Every row must have `expected_cols` cells when it is non-negative;
/// otherwise the first row fixes the width. An empty file yields a 0 x max(expected_cols, 0) matrix.
Matrix read_csv(const std::filesystem::path& path, Index expected_cols = -1);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace elmc
