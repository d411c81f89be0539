// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#include "itp/encoding.hpp"

#include <array>
#include <cstdio>
#include <ctime>

#include "itp/errors.hpp"

namespace itp {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::EmptyMessage: return "EmptyMessage";
    case Errc::DuplicateApplicationId: return "DuplicateApplicationId";
    case Errc::InvalidFieldName: return "InvalidFieldName";
    case Errc::InvalidIdentifier: return "InvalidIdentifier";
    case Errc::InvalidModel: return "InvalidModel";
    case Errc::MalformedDocument: return "MalformedDocument";
    case Errc::SchemaViolations: return "SchemaViolations";
    case Errc::UnknownScopeField: return "UnknownScopeField";
    case Errc::UnsupportedAlgorithm: return "UnsupportedAlgorithm";
    case Errc::UsageViolation: return "UsageViolation";
    case Errc::FieldAbsent: return "FieldAbsent";
    case Errc::AlreadyEncrypted: return "AlreadyEncrypted";
    case Errc::NotEncrypted: return "NotEncrypted";
    case Errc::DecryptionFailure: return "DecryptionFailure";
    case Errc::DuplicateComponentName: return "DuplicateComponentName";
    case Errc::UnknownComponent: return "UnknownComponent";
    case Errc::TransportFailure: return "TransportFailure";
    case Errc::MisroutedMessage: return "MisroutedMessage";
    case Errc::StorePersistenceFailure: return "StorePersistenceFailure";
    case Errc::DuplicateProfileId: return "DuplicateProfileId";
    case Errc::UnknownProfile: return "UnknownProfile";
    case Errc::InconsistentSpec: return "InconsistentSpec";
    case Errc::StageNotFound: return "StageNotFound";
    case Errc::StageValidationFailed: return "StageValidationFailed";
    case Errc::CredentialRejected: return "CredentialRejected";
    case Errc::ReplayRejected: return "ReplayRejected";
    case Errc::SignatureInvalid: return "SignatureInvalid";
    case Errc::AuthorizationDenied: return "AuthorizationDenied";
    case Errc::ChainBroken: return "ChainBroken";
    case Errc::CryptoFailure: return "CryptoFailure";
    case Errc::IoFailure: return "IoFailure";
    }
    return "UnknownError";
}

UtcTime utc_now() {
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

UtcTime make_utc(int year, int month, int day, int hour, int minute, int second) {
    std::tm tm{};
    tm.tm_year = year - 1900;
    tm.tm_mon = month - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = minute;
    tm.tm_sec = second;
    std::time_t t = timegm(&tm);
    return UtcTime(std::chrono::seconds(t));
}

static std::tm to_utc_tm(UtcTime t) {
    std::time_t tt = t.time_since_epoch().count();
    std::tm tm{};
    gmtime_r(&tt, &tm);
    return tm;
}

std::string format_compact_utc(UtcTime t) {
    std::tm tm = to_utc_tm(t);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d%02d%02d%02d%02d%02d", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

std::string format_iso8601_utc(UtcTime t) {
    std::tm tm = to_utc_tm(t);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

UtcTime parse_iso8601_utc(const std::string& text) {
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    char zone = '\0';
    const int matched = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &year, &month,
                                    &day, &hour, &minute, &second, &zone);
    if (matched != 7 || zone != 'Z' || text.size() != 20) {
        throw ItpError(Errc::MalformedDocument, "bad ISO-8601 UTC timestamp: " + text);
    }
    return make_utc(year, month, day, hour, minute, second);
}

static const char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(std::span<const std::uint8_t> data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(kB64Alphabet[(v >> 18) & 0x3F]);
        out.push_back(kB64Alphabet[(v >> 12) & 0x3F]);
        out.push_back(kB64Alphabet[(v >> 6) & 0x3F]);
        out.push_back(kB64Alphabet[v & 0x3F]);
    }
    std::size_t rest = data.size() - i;
    if (rest == 1) {
        std::uint32_t v = data[i] << 16;
        out.push_back(kB64Alphabet[(v >> 18) & 0x3F]);
        out.push_back(kB64Alphabet[(v >> 12) & 0x3F]);
        out.push_back('=');
        out.push_back('=');
    } else if (rest == 2) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out.push_back(kB64Alphabet[(v >> 18) & 0x3F]);
        out.push_back(kB64Alphabet[(v >> 12) & 0x3F]);
        out.push_back(kB64Alphabet[(v >> 6) & 0x3F]);
        out.push_back('=');
    }
    return out;
}

std::string base64_encode(const std::string& data) {
    return base64_encode(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

static int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

Bytes base64_decode(const std::string& text) {
    if (text.size() % 4 != 0)
        throw ItpError(Errc::MalformedDocument, "base64 length not a multiple of 4");
    Bytes out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int pad = 0;
        std::uint32_t v = 0;
        for (int j = 0; j < 4; ++j) {
            char c = text[i + j];
            if (c == '=') {
                // padding allowed only in the last two positions of the final group
                if (i + 4 != text.size() || j < 2) {
                    throw ItpError(Errc::MalformedDocument, "misplaced base64 padding");
                }
                ++pad;
                v <<= 6;
            } else {
                if (pad > 0) throw ItpError(Errc::MalformedDocument, "data after base64 padding");
                int d = b64_value(c);
                if (d < 0) throw ItpError(Errc::MalformedDocument, "invalid base64 character");
                v = (v << 6) | static_cast<std::uint32_t>(d);
            }
        }
        out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    }
    return out;
}

bool is_base64(const std::string& text) {
    try {
        base64_decode(text);
        return true;
    } catch (const ItpError&) {
        return false;
    }
}

std::string hex_encode(std::span<const std::uint8_t> data) {
    static const char* kHex = "0123456789abcdef";
    std::string out;
    out.resize(data.size() * 2);
    for (std::size_t i = 0; i < data.size(); ++i) {
        out[i * 2] = kHex[(data[i] >> 4) & 0xF];
        out[i * 2 + 1] = kHex[data[i] & 0xF];
    }
    return out;
}

std::string pipe_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        switch (c) {
        case '%': out += "%25"; break;
        case '|': out += "%7c"; break;
        case ';': out += "%3b"; break;
        case '\r': out += "%0d"; break;
        case '\n': out += "%0a"; break;
        default: out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

static int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string pipe_unescape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '%' && i + 2 < text.size()) {
            int hi = hex_value(text[i + 1]);
            int lo = hex_value(text[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        out.push_back(text[i]);
    }
    return out;
}

bool is_valid_utf8(std::string_view bytes) {
    std::size_t i = 0;
    const auto n = bytes.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(bytes[i]);
        std::size_t len;
        std::uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (std::size_t j = 1; j < len; ++j) {
            unsigned char cc = static_cast<unsigned char>(bytes[i + j]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // reject overlong forms, surrogates and out-of-range code points
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && cp < 0x800) return false;
        if (len == 4 && cp < 0x10000) return false;
        if (cp > 0x10FFFF) return false;
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;
        i += len;
    }
    return true;
}

std::string to_lower_ascii(std::string text) {
    for (char& c : text) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return text;
}

} // namespace itp
