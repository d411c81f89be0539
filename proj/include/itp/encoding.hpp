// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_ENCODING_HPP
#define ITP_ENCODING_HPP

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace itp {

using Bytes = std::vector<std::uint8_t>;
using UtcTime = std::chrono::time_point<std::chrono::system_clock, std::chrono::seconds>;

UtcTime utc_now();

// make_utc(2004, 2, 2, 16, 44, 45) -> the instant shown as 20040202164445.
UtcTime make_utc(int year, int month, int day, int hour, int minute, int second);

std::string format_compact_utc(UtcTime t);  // YYYYMMDDHHMMSS
std::string format_iso8601_utc(UtcTime t);  // YYYY-MM-DDTHH:MM:SSZ
UtcTime parse_iso8601_utc(const std::string& text);  // throws MalformedDocument

std::string base64_encode(std::span<const std::uint8_t> data);
std::string base64_encode(const std::string& data);
Bytes base64_decode(const std::string& text);  // throws ItpError(MalformedDocument) on bad input
bool is_base64(const std::string& text);

std::string hex_encode(std::span<const std::uint8_t> data);

// Escaping for the line-oriented file formats (keystore, replay log, audit
// log, notification outbox). Reserved bytes: '%', '|', ';', CR, LF.
std::string pipe_escape(const std::string& text);
std::string pipe_unescape(const std::string& text);

bool is_valid_utf8(std::string_view bytes);

std::string to_lower_ascii(std::string text);

} // namespace itp

#endif // ITP_ENCODING_HPP
