#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cdcnn {

// All emitted reports print floats with six significant digits so that
// repeated runs produce byte-identical files.
std::string format_sig6(double value);
// `value` rounded to six significant digits (what format_sig6 prints).
double round_sig6(double value);

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// 64-bit FNV-1a, used to fingerprint input files in reports.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace cdcnn
