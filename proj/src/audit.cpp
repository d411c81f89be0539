// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#include "itp/audit.hpp"

#include <fstream>
#include <sstream>

#include "itp/crypto.hpp"
#include "itp/errors.hpp"

namespace itp::audit {

namespace {

std::string join_actors(const std::vector<std::string>& actor_dns) {
    std::string joined;
    for (std::size_t i = 0; i < actor_dns.size(); ++i) {
        if (i > 0) joined += ';';
        joined += pipe_escape(actor_dns[i]);
    }
    return joined;
}

std::vector<std::string> split_actors(const std::string& joined) {
    std::vector<std::string> actors;
    if (joined.empty()) return actors;
    std::string current;
    for (char c : joined) {
        if (c == ';') {
            actors.push_back(pipe_unescape(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    actors.push_back(pipe_unescape(current));
    return actors;
}

// Everything except the trailing chain hash.
std::string canonical_line(const AuditEvent& event) {
    std::ostringstream out;
    out << event.sequence << '|' << format_iso8601_utc(event.at) << '|'
        << pipe_escape(event.component.value) << '|' << pipe_escape(event.message_id) << '|'
        << pipe_escape(event.application_id) << '|' << to_string(event.kind) << '|'
        << join_actors(event.actor_dns) << '|' << pipe_escape(event.detail);
    return out.str();
}

std::vector<std::string> split_pipes(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == '|') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

} // namespace

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Received: return "received";
        case EventKind::Verified: return "verified";
        case EventKind::Authorized: return "authorized";
        case EventKind::Processed: return "processed";
        case EventKind::Forwarded: return "forwarded";
        case EventKind::Rejected: return "rejected";
    }
    return "received";
}

EventKind event_kind_from_string(const std::string& text) {
    if (text == "received") return EventKind::Received;
    if (text == "verified") return EventKind::Verified;
    if (text == "authorized") return EventKind::Authorized;
    if (text == "processed") return EventKind::Processed;
    if (text == "forwarded") return EventKind::Forwarded;
    if (text == "rejected") return EventKind::Rejected;
    throw ItpError(Errc::MalformedDocument, "unknown audit event kind: " + text);
}

std::string AuditLog::genesis() { return std::string(64, '0'); }

AuditLog::AuditLog(std::filesystem::path path) : path_(std::move(path)), persistent_(true) {
    if (!std::filesystem::exists(path_)) return;
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw ItpError(Errc::IoFailure, "cannot read " + path_.string());

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_pipes(line);
        if (fields.size() != 9) {
            throw ItpError(Errc::ChainBroken,
                           "audit line " + std::to_string(line_no) + ": expected 9 fields");
        }
        AuditEvent event;
        try {
            event.sequence = std::stoull(fields[0]);
        } catch (const std::exception&) {
            throw ItpError(Errc::ChainBroken,
                           "audit line " + std::to_string(line_no) + ": bad sequence");
        }
        event.at = parse_iso8601_utc(fields[1]);
        event.component = ComponentName{pipe_unescape(fields[2])};
        event.message_id = pipe_unescape(fields[3]);
        event.application_id = pipe_unescape(fields[4]);
        event.kind = event_kind_from_string(fields[5]);
        event.actor_dns = split_actors(fields[6]);
        event.detail = pipe_unescape(fields[7]);
        event.chain_hash = fields[8];

        if (event.sequence != events_.size() + 1) {
            throw ItpError(Errc::ChainBroken,
                           "audit line " + std::to_string(line_no) + ": sequence out of order");
        }
        const std::string expected = crypto::sha256_hex(last_hash_ + canonical_line(event));
        if (expected != event.chain_hash) {
            throw ItpError(Errc::ChainBroken,
                           "audit line " + std::to_string(line_no) + ": chain hash mismatch");
        }
        last_hash_ = event.chain_hash;
        events_.push_back(std::move(event));
    }
}

const AuditEvent& AuditLog::append(const ComponentName& component, const std::string& message_id,
                                   const std::string& application_id, EventKind kind,
                                   std::vector<std::string> actor_dns, const std::string& detail,
                                   UtcTime at) {
    AuditEvent event;
    event.sequence = events_.size() + 1;
    event.at = at;
    event.component = component;
    event.message_id = message_id;
    event.application_id = application_id;
    event.kind = kind;
    event.actor_dns = std::move(actor_dns);
    event.detail = detail;

    const std::string line = canonical_line(event);
    event.chain_hash = crypto::sha256_hex(last_hash_ + line);

    if (persistent_) {
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out || !(out << line << '|' << event.chain_hash << '\n').flush()) {
            throw ItpError(Errc::IoFailure, "cannot append " + path_.string());
        }
    }
    last_hash_ = event.chain_hash;
    events_.push_back(std::move(event));
    return events_.back();
}

const AuditEvent& AuditLog::append(const ComponentName& component, const std::string& message_id,
                                   const std::string& application_id, EventKind kind,
                                   std::vector<std::string> actor_dns, const std::string& detail) {
    return append(component, message_id, application_id, kind, std::move(actor_dns), detail,
                  utc_now());
}

std::vector<AuditEvent> AuditLog::trace(const std::string& id) const {
    std::vector<AuditEvent> matched;
    for (const auto& event : events_) {
        if (event.message_id == id || event.application_id == id) matched.push_back(event);
    }
    return matched;
}

void AuditLog::verify_file(const std::filesystem::path& path) {
    AuditLog reloaded(path);  // constructor verifies the chain
    (void)reloaded;
}

} // namespace itp::audit
