// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_ROUTING_HPP
#define ITP_ROUTING_HPP

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "itp/model.hpp"

// Component registry, transport-independent dispatch and replay protection.
// Three transports: in-process queues, file mailboxes (one message per file,
// atomic rename) and framed TCP (4-byte big-endian length prefix, one
// connection per message).

namespace itp::routing {

using Millis = std::chrono::milliseconds;

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

enum class TransportKind { InMemory, File, Tcp };

std::string to_string(TransportKind kind);
TransportKind transport_kind_from_string(const std::string& text);  // throws MalformedDocument

struct ComponentRegistryEntry {
    ComponentName name;
    TransportKind transport = TransportKind::InMemory;
    std::string address;  // mailbox directory for file, host:port for tcp
};

// Mutate during setup, share read-only while routing runs.
class ComponentRegistry {
public:
    void register_component(ComponentRegistryEntry entry);  // throws DuplicateComponentName
    const ComponentRegistryEntry& resolve(const ComponentName& name) const;  // throws UnknownComponent
    bool contains(const ComponentName& name) const;
    void update_address(const ComponentName& name, const std::string& address);
    const std::vector<ComponentRegistryEntry>& entries() const { return entries_; }

private:
    std::vector<ComponentRegistryEntry> entries_;
};

struct DeliveryReceipt {
    Identifier message_id;
    ComponentName recipient;
    TransportKind transport = TransportKind::InMemory;
    UtcTime delivered_at{};
};

// Registry file: one `name|transport|address` line per component.
void save_registry(const std::filesystem::path& path, const ComponentRegistry& registry);
ComponentRegistry load_registry(const std::filesystem::path& path);  // throws IoFailure, MalformedDocument

// ---------------------------------------------------------------------------
// Replay protection
// ---------------------------------------------------------------------------

struct AdmitResult {
    bool fresh = false;
    std::string detail;  // which ids collided, empty when fresh
};

// Message ids are tracked store-wide; application ids per (id, component) so
// one application can traverse a pipeline yet run at most once per stage.
// Backed by an append-only `kind|id|component|iso-timestamp` log when a path
// is given.
class ReplayStore {
public:
    ReplayStore() = default;
    explicit ReplayStore(std::filesystem::path log_path);  // throws StorePersistenceFailure

    // Atomic check-and-record: fresh iff the message id and every application
    // id are unseen; all ids are recorded before returning fresh.
    AdmitResult admit(const Message& msg, const ComponentName& self);

    bool message_seen(const std::string& message_id) const;
    bool application_seen(const std::string& application_id, const ComponentName& self) const;

private:
    void record(const std::string& kind, const std::string& id, const std::string& component,
                std::string& pending);

    mutable std::mutex mutex_;
    std::set<std::string> messages_;
    std::set<std::pair<std::string, std::string>> applications_;
    std::filesystem::path log_path_;
    bool persistent_ = false;
};

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

class InMemoryBus {
public:
    void push(const ComponentName& to, std::string payload);
    std::optional<std::string> pop(const ComponentName& self, Millis timeout);

private:
    std::mutex mutex_;
    std::condition_variable ready_;
    std::map<std::string, std::deque<std::string>> queues_;
};

// Listener owning an accept thread; every accepted connection carries one
// length-prefixed message.
class TcpInbox {
public:
    explicit TcpInbox(std::uint16_t port);  // 0 picks an ephemeral port; throws TransportFailure
    ~TcpInbox();
    TcpInbox(const TcpInbox&) = delete;
    TcpInbox& operator=(const TcpInbox&) = delete;

    std::uint16_t port() const { return port_; }
    std::optional<std::string> pop(Millis timeout);
    void stop();

private:
    void accept_loop();

    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::thread worker_;
    std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<std::string> payloads_;
    bool stopping_ = false;
};

void tcp_send_frame(const std::string& host_port, const std::string& payload);  // throws TransportFailure

// ---------------------------------------------------------------------------
// Router
// ---------------------------------------------------------------------------

class MessageRouter {
public:
    explicit MessageRouter(ComponentRegistry registry);

    ComponentRegistry& registry() { return registry_; }
    const ComponentRegistry& registry() const { return registry_; }

    // Serializes (validation included) and delivers over the recipient's
    // transport. Throws UnknownComponent, TransportFailure; invalid models
    // surface from the codec.
    DeliveryReceipt send(const Message& msg);

    // Next pending message, parsed and validated, or nullopt on timeout.
    // Throws MisroutedMessage when the recipient field names someone else
    // (file transport renames the offending file to *.misrouted first),
    // MalformedDocument for unparseable payloads (*.malformed).
    std::optional<Message> receive(const ComponentName& self, Millis timeout);

    // Starts (or returns) the listener for a tcp-registered component; a
    // port 0 registration is updated in place with the bound port.
    TcpInbox& ensure_tcp_inbox(const ComponentName& self);

private:
    std::optional<Message> from_payload(const std::string& payload, const ComponentName& self);
    std::optional<Message> receive_file(const ComponentRegistryEntry& self, Millis timeout);

    ComponentRegistry registry_;
    InMemoryBus bus_;
    std::map<std::string, std::unique_ptr<TcpInbox>> inboxes_;
    std::mutex inboxes_mutex_;
};

} // namespace itp::routing

#endif // ITP_ROUTING_HPP
