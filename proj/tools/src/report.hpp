#pragma once

#include "edp/table.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace edp::cli {

/// Unwritable output location (exit status 3).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 17 significant digits, so parsing the text returns the same binary64 value.
std::string format_double(double value);

std::string to_csv(const Table& table);

/// Header row plus one line per record, LF line endings. Throws IoError.
void emit_report(const Table& table, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace edp::cli
