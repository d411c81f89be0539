// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#include "itp/routing.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "itp/codec.hpp"
#include "itp/errors.hpp"

namespace itp::routing {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

std::string to_string(TransportKind kind) {
    switch (kind) {
        case TransportKind::InMemory: return "in-memory";
        case TransportKind::File: return "file";
        case TransportKind::Tcp: return "tcp";
    }
    return "in-memory";
}

TransportKind transport_kind_from_string(const std::string& text) {
    if (text == "in-memory") return TransportKind::InMemory;
    if (text == "file") return TransportKind::File;
    if (text == "tcp") return TransportKind::Tcp;
    throw ItpError(Errc::MalformedDocument, "unknown transport: " + text);
}

void ComponentRegistry::register_component(ComponentRegistryEntry entry) {
    if (!is_valid_component_name(entry.name.value)) {
        throw ItpError(Errc::InvalidIdentifier, "invalid component name");
    }
    if (contains(entry.name)) {
        throw ItpError(Errc::DuplicateComponentName, entry.name.value + " already registered");
    }
    entries_.push_back(std::move(entry));
}

const ComponentRegistryEntry& ComponentRegistry::resolve(const ComponentName& name) const {
    for (const auto& entry : entries_) {
        if (entry.name.value == name.value) return entry;
    }
    throw ItpError(Errc::UnknownComponent, "no component named " + name.value);
}

bool ComponentRegistry::contains(const ComponentName& name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const ComponentRegistryEntry& e) { return e.name.value == name.value; });
}

void ComponentRegistry::update_address(const ComponentName& name, const std::string& address) {
    for (auto& entry : entries_) {
        if (entry.name.value == name.value) {
            entry.address = address;
            return;
        }
    }
    throw ItpError(Errc::UnknownComponent, "no component named " + name.value);
}

void save_registry(const std::filesystem::path& path, const ComponentRegistry& registry) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ItpError(Errc::IoFailure, "cannot write " + path.string());
    out << "# itp component registry v1\n";
    out << "# name|transport|address\n";
    for (const auto& entry : registry.entries()) {
        out << pipe_escape(entry.name.value) << '|' << to_string(entry.transport) << '|'
            << pipe_escape(entry.address) << '\n';
    }
    if (!out.flush()) throw ItpError(Errc::IoFailure, "cannot write " + path.string());
}

ComponentRegistry load_registry(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ItpError(Errc::IoFailure, "cannot read " + path.string());
    ComponentRegistry registry;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
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
        if (fields.size() != 3) {
            throw ItpError(Errc::MalformedDocument,
                           "registry line " + std::to_string(line_no) + ": expected 3 fields");
        }
        ComponentRegistryEntry entry;
        entry.name = ComponentName{pipe_unescape(fields[0])};
        entry.transport = transport_kind_from_string(fields[1]);
        entry.address = pipe_unescape(fields[2]);
        registry.register_component(std::move(entry));
    }
    return registry;
}

// ---------------------------------------------------------------------------
// ReplayStore
// ---------------------------------------------------------------------------

ReplayStore::ReplayStore(std::filesystem::path log_path)
    : log_path_(std::move(log_path)), persistent_(true) {
    if (!fs::exists(log_path_)) return;
    std::ifstream in(log_path_, std::ios::binary);
    if (!in) {
        throw ItpError(Errc::StorePersistenceFailure, "cannot read " + log_path_.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
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
        if (fields.size() != 4) {
            throw ItpError(Errc::StorePersistenceFailure,
                           "replay log line " + std::to_string(line_no) + ": expected 4 fields");
        }
        const std::string id = pipe_unescape(fields[1]);
        const std::string component = pipe_unescape(fields[2]);
        if (fields[0] == "message") {
            messages_.insert(id);
        } else if (fields[0] == "application") {
            applications_.insert({id, component});
        } else {
            throw ItpError(Errc::StorePersistenceFailure,
                           "replay log line " + std::to_string(line_no) + ": unknown kind");
        }
    }
}

void ReplayStore::record(const std::string& kind, const std::string& id,
                         const std::string& component, std::string& pending) {
    pending += kind;
    pending += '|';
    pending += pipe_escape(id);
    pending += '|';
    pending += pipe_escape(component);
    pending += '|';
    pending += format_iso8601_utc(utc_now());
    pending += '\n';
}

AdmitResult ReplayStore::admit(const Message& msg, const ComponentName& self) {
    std::lock_guard<std::mutex> lock(mutex_);

    std::vector<std::string> collisions;
    if (messages_.count(msg.id.value) > 0) {
        collisions.push_back("message id " + msg.id.value + " seen");
    }
    for (const auto& application : msg.applications) {
        if (applications_.count({application.id.value, self.value}) > 0) {
            collisions.push_back("application id " + application.id.value + " seen at " +
                                 self.value);
        }
    }
    if (!collisions.empty()) {
        AdmitResult result;
        result.fresh = false;
        for (std::size_t i = 0; i < collisions.size(); ++i) {
            if (i > 0) result.detail += "; ";
            result.detail += collisions[i];
        }
        return result;
    }

    std::string pending;
    record("message", msg.id.value, self.value, pending);
    for (const auto& application : msg.applications) {
        record("application", application.id.value, self.value, pending);
    }
    if (persistent_) {
        std::ofstream out(log_path_, std::ios::binary | std::ios::app);
        if (!out || !(out << pending).flush()) {
            throw ItpError(Errc::StorePersistenceFailure, "cannot append " + log_path_.string());
        }
    }
    messages_.insert(msg.id.value);
    for (const auto& application : msg.applications) {
        applications_.insert({application.id.value, self.value});
    }
    return AdmitResult{true, ""};
}

bool ReplayStore::message_seen(const std::string& message_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return messages_.count(message_id) > 0;
}

bool ReplayStore::application_seen(const std::string& application_id,
                                   const ComponentName& self) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return applications_.count({application_id, self.value}) > 0;
}

// ---------------------------------------------------------------------------
// InMemoryBus
// ---------------------------------------------------------------------------

void InMemoryBus::push(const ComponentName& to, std::string payload) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        queues_[to.value].push_back(std::move(payload));
    }
    ready_.notify_all();
}

std::optional<std::string> InMemoryBus::pop(const ComponentName& self, Millis timeout) {
    std::unique_lock<std::mutex> lock(mutex_);
    auto& queue = queues_[self.value];
    if (!ready_.wait_for(lock, timeout, [&] { return !queue.empty(); })) {
        return std::nullopt;
    }
    std::string payload = std::move(queue.front());
    queue.pop_front();
    return payload;
}

// ---------------------------------------------------------------------------
// TCP framing
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxFrame = 64u * 1024u * 1024u;

void write_all(int fd, const void* data, std::size_t size) {
    const char* cursor = static_cast<const char*>(data);
    while (size > 0) {
        const ssize_t n = ::write(fd, cursor, size);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ItpError(Errc::TransportFailure, "socket write failed");
        }
        cursor += n;
        size -= static_cast<std::size_t>(n);
    }
}

bool read_all(int fd, void* data, std::size_t size) {
    char* cursor = static_cast<char*>(data);
    while (size > 0) {
        const ssize_t n = ::read(fd, cursor, size);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        if (n == 0) return false;
        cursor += n;
        size -= static_cast<std::size_t>(n);
    }
    return true;
}

struct FdGuard {
    int fd = -1;
    ~FdGuard() {
        if (fd >= 0) ::close(fd);
    }
};

std::pair<std::string, std::uint16_t> split_host_port(const std::string& address) {
    const std::size_t colon = address.rfind(':');
    if (colon == std::string::npos || colon + 1 >= address.size()) {
        throw ItpError(Errc::TransportFailure, "tcp address must be host:port, got " + address);
    }
    const std::string host = address.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(address.substr(colon + 1));
    } catch (const std::exception&) {
        throw ItpError(Errc::TransportFailure, "bad port in address " + address);
    }
    if (port < 0 || port > 65535) {
        throw ItpError(Errc::TransportFailure, "bad port in address " + address);
    }
    return {host.empty() ? "127.0.0.1" : host, static_cast<std::uint16_t>(port)};
}

} // namespace

void tcp_send_frame(const std::string& host_port, const std::string& payload) {
    if (payload.size() > kMaxFrame) {
        throw ItpError(Errc::TransportFailure, "frame exceeds 64 MiB");
    }
    const auto [host, port] = split_host_port(host_port);

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &found) != 0) {
        throw ItpError(Errc::TransportFailure, "cannot resolve " + host);
    }
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> list(found, &::freeaddrinfo);

    FdGuard sock;
    sock.fd = ::socket(found->ai_family, found->ai_socktype, found->ai_protocol);
    if (sock.fd < 0) throw ItpError(Errc::TransportFailure, "cannot create socket");
    if (::connect(sock.fd, found->ai_addr, found->ai_addrlen) != 0) {
        throw ItpError(Errc::TransportFailure, "cannot connect to " + host_port);
    }

    std::uint8_t prefix[4];
    const std::uint32_t size = static_cast<std::uint32_t>(payload.size());
    prefix[0] = static_cast<std::uint8_t>((size >> 24) & 0xff);
    prefix[1] = static_cast<std::uint8_t>((size >> 16) & 0xff);
    prefix[2] = static_cast<std::uint8_t>((size >> 8) & 0xff);
    prefix[3] = static_cast<std::uint8_t>(size & 0xff);
    write_all(sock.fd, prefix, sizeof prefix);
    write_all(sock.fd, payload.data(), payload.size());
}

// ---------------------------------------------------------------------------
// TcpInbox
// ---------------------------------------------------------------------------

TcpInbox::TcpInbox(std::uint16_t port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw ItpError(Errc::TransportFailure, "cannot create listen socket");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw ItpError(Errc::TransportFailure, "cannot bind tcp inbox");
    }
    socklen_t len = sizeof addr;
    if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw ItpError(Errc::TransportFailure, "cannot query bound port");
    }
    port_ = ntohs(addr.sin_port);
    worker_ = std::thread([this] { accept_loop(); });
}

TcpInbox::~TcpInbox() { stop(); }

void TcpInbox::stop() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (stopping_) return;
        stopping_ = true;
    }
    ready_.notify_all();
    if (worker_.joinable()) worker_.join();
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
}

void TcpInbox::accept_loop() {
    for (;;) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (stopping_) return;
        }
        pollfd waiter{};
        waiter.fd = listen_fd_;
        waiter.events = POLLIN;
        const int rc = ::poll(&waiter, 1, 100);
        if (rc < 0) {
            if (errno == EINTR) continue;
            return;
        }
        if (rc == 0 || (waiter.revents & POLLIN) == 0) continue;

        FdGuard conn;
        conn.fd = ::accept(listen_fd_, nullptr, nullptr);
        if (conn.fd < 0) continue;

        std::uint8_t prefix[4];
        if (!read_all(conn.fd, prefix, sizeof prefix)) continue;
        const std::uint32_t size = (static_cast<std::uint32_t>(prefix[0]) << 24) |
                                   (static_cast<std::uint32_t>(prefix[1]) << 16) |
                                   (static_cast<std::uint32_t>(prefix[2]) << 8) |
                                   static_cast<std::uint32_t>(prefix[3]);
        if (size > kMaxFrame) continue;
        std::string payload(size, '\0');
        if (size > 0 && !read_all(conn.fd, payload.data(), size)) continue;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            payloads_.push_back(std::move(payload));
        }
        ready_.notify_all();
    }
}

std::optional<std::string> TcpInbox::pop(Millis timeout) {
    std::unique_lock<std::mutex> lock(mutex_);
    if (!ready_.wait_for(lock, timeout, [&] { return !payloads_.empty() || stopping_; })) {
        return std::nullopt;
    }
    if (payloads_.empty()) return std::nullopt;
    std::string payload = std::move(payloads_.front());
    payloads_.pop_front();
    return payload;
}

// ---------------------------------------------------------------------------
// MessageRouter
// ---------------------------------------------------------------------------

MessageRouter::MessageRouter(ComponentRegistry registry) : registry_(std::move(registry)) {}

DeliveryReceipt MessageRouter::send(const Message& msg) {
    const std::string payload = codec::serialize(msg);
    const ComponentRegistryEntry& target = registry_.resolve(msg.recipient);

    switch (target.transport) {
        case TransportKind::InMemory:
            bus_.push(target.name, payload);
            break;
        case TransportKind::File: {
            const fs::path inbox(target.address);
            std::error_code ec;
            fs::create_directories(inbox, ec);
            if (ec) throw ItpError(Errc::TransportFailure, "cannot create " + inbox.string());
            const fs::path final_path = inbox / (msg.id.value + ".itp.xml");
            const fs::path temp_path = inbox / (msg.id.value + ".itp.xml.tmp");
            {
                std::ofstream out(temp_path, std::ios::binary | std::ios::trunc);
                if (!out || !(out << payload).flush()) {
                    throw ItpError(Errc::TransportFailure, "cannot write " + temp_path.string());
                }
            }
            fs::rename(temp_path, final_path, ec);
            if (ec) throw ItpError(Errc::TransportFailure, "cannot publish " + final_path.string());
            break;
        }
        case TransportKind::Tcp:
            tcp_send_frame(target.address, payload);
            break;
    }

    DeliveryReceipt receipt;
    receipt.message_id = msg.id;
    receipt.recipient = target.name;
    receipt.transport = target.transport;
    receipt.delivered_at = utc_now();
    return receipt;
}

std::optional<Message> MessageRouter::from_payload(const std::string& payload,
                                                   const ComponentName& self) {
    const Message msg = codec::parse(payload);
    if (msg.recipient.value != self.value) {
        throw ItpError(Errc::MisroutedMessage,
                       "message " + msg.id.value + " is addressed to " + msg.recipient.value);
    }
    return msg;
}

std::optional<Message> MessageRouter::receive_file(const ComponentRegistryEntry& self,
                                                   Millis timeout) {
    const fs::path inbox(self.address);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        if (fs::exists(inbox)) {
            std::vector<fs::path> pending;
            for (const auto& entry : fs::directory_iterator(inbox)) {
                if (entry.is_regular_file() && entry.path().extension() == ".xml" &&
                    entry.path().filename().string().ends_with(".itp.xml")) {
                    pending.push_back(entry.path());
                }
            }
            std::sort(pending.begin(), pending.end());
            if (!pending.empty()) {
                const fs::path& path = pending.front();
                std::ifstream in(path, std::ios::binary);
                if (!in) throw ItpError(Errc::TransportFailure, "cannot read " + path.string());
                std::ostringstream buffer;
                buffer << in.rdbuf();
                in.close();

                Message msg;
                try {
                    msg = codec::parse(buffer.str());
                } catch (const ItpError&) {
                    std::error_code ec;
                    fs::rename(path, path.string() + ".malformed", ec);
                    throw;
                }
                if (msg.recipient.value != self.name.value) {
                    std::error_code ec;
                    fs::rename(path, path.string() + ".misrouted", ec);
                    throw ItpError(Errc::MisroutedMessage, "message " + msg.id.value +
                                                               " is addressed to " +
                                                               msg.recipient.value);
                }
                std::error_code ec;
                fs::remove(path, ec);
                return msg;
            }
        }
        if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
        std::this_thread::sleep_for(Millis(10));
    }
}

std::optional<Message> MessageRouter::receive(const ComponentName& self, Millis timeout) {
    const ComponentRegistryEntry& entry = registry_.resolve(self);
    switch (entry.transport) {
        case TransportKind::InMemory: {
            const std::optional<std::string> payload = bus_.pop(self, timeout);
            if (!payload.has_value()) return std::nullopt;
            return from_payload(*payload, self);
        }
        case TransportKind::File:
            return receive_file(entry, timeout);
        case TransportKind::Tcp: {
            TcpInbox& inbox = ensure_tcp_inbox(self);
            const std::optional<std::string> payload = inbox.pop(timeout);
            if (!payload.has_value()) return std::nullopt;
            return from_payload(*payload, self);
        }
    }
    return std::nullopt;
}

TcpInbox& MessageRouter::ensure_tcp_inbox(const ComponentName& self) {
    const ComponentRegistryEntry& entry = registry_.resolve(self);
    if (entry.transport != TransportKind::Tcp) {
        throw ItpError(Errc::TransportFailure, self.value + " is not a tcp component");
    }
    std::lock_guard<std::mutex> lock(inboxes_mutex_);
    auto it = inboxes_.find(self.value);
    if (it != inboxes_.end()) return *it->second;

    const auto [host, port] = split_host_port(entry.address);
    auto inbox = std::make_unique<TcpInbox>(port);
    if (port == 0) {
        registry_.update_address(self, host + ":" + std::to_string(inbox->port()));
    }
    auto [inserted, _] = inboxes_.emplace(self.value, std::move(inbox));
    return *inserted->second;
}

} // namespace itp::routing
