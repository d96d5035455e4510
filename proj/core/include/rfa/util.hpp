#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rfa {

// MHz with at most two decimals, trailing zeros trimmed: 806, 433.92, 0.5.
std::string format_mhz(double hz);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

// 2026-01-02T03:04:05.678Z
std::string iso8601_utc(std::chrono::system_clock::time_point t);

std::vector<std::uint8_t> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::string& path);

}  // namespace rfa
