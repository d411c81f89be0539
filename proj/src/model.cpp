// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#include "itp/model.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <unordered_set>

#include "itp/errors.hpp"

namespace itp {

bool is_valid_identifier(const std::string& value) {
    if (value.empty()) return false;
    for (unsigned char c : value) {
        if (c <= 0x20 || c == 0x7F) return false;  // whitespace and controls
        if (c == '<' || c == '>' || c == '&' || c == '"' || c == '\'') return false;
    }
    return true;
}

bool is_valid_component_name(const std::string& value) {
    if (value.empty()) return false;
    if (!is_valid_utf8(value)) return false;
    for (unsigned char c : value) {
        if (c < 0x20 || c == 0x7F) return false;
        if (c == '<' || c == '>' || c == '&') return false;
    }
    // no leading/trailing blanks; they would not survive readable transports
    return value.front() != ' ' && value.back() != ' ';
}

bool is_valid_field_name(const std::string& name) {
    if (name.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(name[0]))) return false;
    return std::all_of(name.begin(), name.end(),
                       [](unsigned char c) { return std::isalnum(c); });
}

Identifier generate_id(UtcTime clock, std::span<const std::uint8_t> entropy) {
    if (entropy.size() < 3)
        throw ItpError(Errc::InvalidIdentifier, "id entropy requires at least 3 bytes");
    return Identifier{format_compact_utc(clock) + hex_encode(entropy.first(3))};
}

IdGenerator::IdGenerator() {
    std::random_device rd;
    counter_ = rd() & 0xFFFFFFu;
}

IdGenerator::IdGenerator(std::uint32_t suffix_seed) : counter_(suffix_seed & 0xFFFFFFu) {}

Identifier IdGenerator::next() { return next(utc_now()); }

Identifier IdGenerator::next(UtcTime clock) {
    std::uint32_t v = counter_;
    counter_ = (counter_ + 1) & 0xFFFFFFu;
    std::uint8_t suffix[3] = {static_cast<std::uint8_t>(v >> 16),
                              static_cast<std::uint8_t>(v >> 8),
                              static_cast<std::uint8_t>(v)};
    return generate_id(clock, suffix);
}

Message build_message(Identifier id, ComponentName sender, ComponentName recipient,
                      std::vector<Application> apps) {
    if (apps.empty()) throw ItpError(Errc::EmptyMessage, "a message must carry at least one application");
    if (!is_valid_identifier(id.value)) throw ItpError(Errc::InvalidIdentifier, "message id: " + id.value);
    std::unordered_set<std::string> seen;
    for (const Application& app : apps) {
        if (!is_valid_identifier(app.id.value))
            throw ItpError(Errc::InvalidIdentifier, "application id: " + app.id.value);
        if (!seen.insert(app.id.value).second)
            throw ItpError(Errc::DuplicateApplicationId, app.id.value);
    }
    Message msg;
    msg.version = kProtocolVersion;
    msg.id = std::move(id);
    msg.sender = std::move(sender);
    msg.recipient = std::move(recipient);
    msg.applications = std::move(apps);
    return msg;
}

Application set_field(const Application& app, const std::string& name, FieldValue value) {
    if (!is_valid_field_name(name)) throw ItpError(Errc::InvalidFieldName, name);
    Application out = app;
    for (ProfileField& field : out.fields) {
        if (field.name == name) {
            field.value = std::move(value);
            return out;
        }
    }
    out.fields.push_back(ProfileField{name, std::move(value)});
    return out;
}

Application remove_field(const Application& app, const std::string& name) {
    Application out = app;
    std::erase_if(out.fields, [&](const ProfileField& f) { return f.name == name; });
    return out;
}

std::optional<FieldValue> get_field(const Application& app, const std::string& name) {
    for (const ProfileField& field : app.fields) {
        if (field.name == name) return field.value;
    }
    return std::nullopt;
}

std::optional<std::string> get_text_field(const Application& app, const std::string& name) {
    auto value = get_field(app, name);
    if (!value) return std::nullopt;
    if (const std::string* text = std::get_if<std::string>(&*value)) return *text;
    return std::nullopt;
}

bool has_field(const Application& app, const std::string& name) {
    return get_field(app, name).has_value();
}

} // namespace itp
