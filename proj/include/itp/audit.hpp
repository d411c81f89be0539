// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_AUDIT_HPP
#define ITP_AUDIT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "itp/model.hpp"

// Tamper-evident audit trail: every record carries a chain hash over the
// previous hash and its own canonical line, so edits anywhere break the
// chain on reload.

namespace itp::audit {

enum class EventKind { Received, Verified, Authorized, Processed, Forwarded, Rejected };

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& text);  // throws MalformedDocument

struct AuditEvent {
    std::uint64_t sequence = 0;  // monotone, starts at 1
    UtcTime at{};
    ComponentName component;
    std::string message_id;
    std::string application_id;
    EventKind kind = EventKind::Received;
    std::vector<std::string> actor_dns;
    std::string detail;
    std::string chain_hash;  // sha256 hex over previous hash + canonical line
};

// Persistent form: one record per line,
//   seq|iso-ts|component|message-id|application-id|kind|actors|detail|chain-hash
// with pipe-reserved characters escaped and actors joined by ';'.
class AuditLog {
public:
    AuditLog() = default;                              // in-memory only
    explicit AuditLog(std::filesystem::path path);     // loads and verifies; throws ChainBroken

    const AuditEvent& append(const ComponentName& component, const std::string& message_id,
                             const std::string& application_id, EventKind kind,
                             std::vector<std::string> actor_dns, const std::string& detail,
                             UtcTime at);
    const AuditEvent& append(const ComponentName& component, const std::string& message_id,
                             const std::string& application_id, EventKind kind,
                             std::vector<std::string> actor_dns, const std::string& detail);

    const std::vector<AuditEvent>& events() const { return events_; }

    // Every event carrying the id as message or application id, in sequence order.
    std::vector<AuditEvent> trace(const std::string& id) const;

    // Reload and re-verify the whole chain; throws ChainBroken on tamper.
    static void verify_file(const std::filesystem::path& path);

    static std::string genesis();  // 64 zero hex digits

private:
    std::vector<AuditEvent> events_;
    std::string last_hash_ = genesis();
    std::filesystem::path path_;
    bool persistent_ = false;
};

} // namespace itp::audit

#endif // ITP_AUDIT_HPP
