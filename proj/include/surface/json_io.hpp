#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "surface/errors.hpp"

namespace surface {

using json = nlohmann::json;

/// Parses a JSON file, wrapping parse failures in InputError with the
/// file name attached.
json load_json_file(const std::filesystem::path& path);

/// Writes `doc` with a trailing newline and two-space indentation.
/// nlohmann::json objects iterate in key order, so output is stable.
void save_json_file(const std::filesystem::path& path, const json& doc);

/// Reads a whole text file; InputError if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace surface
