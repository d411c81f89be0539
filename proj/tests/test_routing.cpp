// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "itp/codec.hpp"
#include "itp/errors.hpp"
#include "itp/routing.hpp"
#include "support/golden.hpp"
#include "support/test_support.hpp"

using namespace itp;
using routing::AdmitResult;
using routing::ComponentRegistry;
using routing::ComponentRegistryEntry;
using routing::MessageRouter;
using routing::Millis;
using routing::ReplayStore;
using routing::TransportKind;

namespace {

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ItpError& e) {
        return e.code();
    }
    throw std::runtime_error("expected an ItpError");
}

Message sample_message(const std::string& message_id, const std::string& application_id,
                       const std::string& sender, const std::string& recipient) {
    Application app = testing::registration_example_application();
    app.id.value = application_id;
    return build_message(Identifier{message_id}, ComponentName{sender},
                         ComponentName{recipient}, {app});
}

} // namespace

// ---------------------------------------------------------------------------
// component registry
// ---------------------------------------------------------------------------

TEST_CASE("the registry resolves components and rejects duplicates") {
    ComponentRegistry registry;
    registry.register_component({ComponentName{"Registration"}, TransportKind::InMemory, ""});
    registry.register_component({ComponentName{"Certification"}, TransportKind::File, "/mail/c"});

    CHECK(registry.contains(ComponentName{"Registration"}));
    CHECK_FALSE(registry.contains(ComponentName{"Directory Services"}));
    CHECK(registry.resolve(ComponentName{"Certification"}).address == "/mail/c");
    CHECK(registry.resolve(ComponentName{"Certification"}).transport == TransportKind::File);

    CHECK(code_of([&] {
              registry.register_component(
                  {ComponentName{"Registration"}, TransportKind::Tcp, "x:1"});
          }) == Errc::DuplicateComponentName);
    CHECK(code_of([&] { (void)registry.resolve(ComponentName{"nobody"}); }) ==
          Errc::UnknownComponent);

    registry.update_address(ComponentName{"Certification"}, "/mail/other");
    CHECK(registry.resolve(ComponentName{"Certification"}).address == "/mail/other");
}

TEST_CASE("the registry file format round-trips") {
    testing::TempDir dir;
    ComponentRegistry registry;
    registry.register_component({ComponentName{"Registration"}, TransportKind::InMemory, ""});
    registry.register_component(
        {ComponentName{"Directory Services"}, TransportKind::File, (dir / "mail/d").string()});
    registry.register_component({ComponentName{"Certification"}, TransportKind::Tcp,
                                 "127.0.0.1:7711"});

    const auto path = dir / "registry.txt";
    routing::save_registry(path, registry);
    const ComponentRegistry loaded = routing::load_registry(path);
    REQUIRE(loaded.entries().size() == 3);
    CHECK(loaded.resolve(ComponentName{"Directory Services"}).transport == TransportKind::File);
    CHECK(loaded.resolve(ComponentName{"Certification"}).address == "127.0.0.1:7711");

    testing::write_file(dir / "broken.txt", "OnlyOneField\n");
    CHECK(code_of([&] { (void)routing::load_registry(dir / "broken.txt"); }) ==
          Errc::MalformedDocument);
    CHECK(code_of([&] { (void)routing::load_registry(dir / "absent.txt"); }) == Errc::IoFailure);
    CHECK(code_of([&] { (void)routing::transport_kind_from_string("carrier-pigeon"); }) ==
          Errc::MalformedDocument);
}

// ---------------------------------------------------------------------------
// replay protection
// ---------------------------------------------------------------------------

TEST_CASE("a message is admitted once and replays carry the colliding ids") {
    ReplayStore store;
    const ComponentName self{"Certification"};
    const Message msg = sample_message("m-1", "a-1", "Registration", "Certification");

    const AdmitResult first = store.admit(msg, self);
    CHECK(first.fresh);
    CHECK(first.detail.empty());
    CHECK(store.message_seen("m-1"));
    CHECK(store.application_seen("a-1", self));

    const AdmitResult replay = store.admit(msg, self);
    CHECK_FALSE(replay.fresh);
    CHECK(replay.detail.find("message id m-1 seen") != std::string::npos);
    CHECK(replay.detail.find("application id a-1 seen at Certification") != std::string::npos);
}

TEST_CASE("a fresh envelope around a seen application is still a replay") {
    ReplayStore store;
    const ComponentName self{"Certification"};
    CHECK(store.admit(sample_message("m-1", "a-1", "R", "C"), self).fresh);

    const AdmitResult second = store.admit(sample_message("m-2", "a-1", "R", "C"), self);
    CHECK_FALSE(second.fresh);
    CHECK(second.detail == "application id a-1 seen at Certification");
    CHECK_FALSE(store.message_seen("m-2"));  // rejected envelopes are not consumed
}

TEST_CASE("the same application may run once per component") {
    ReplayStore store;
    CHECK(store.admit(sample_message("m-1", "a-1", "R", "C"), ComponentName{"Certification"})
              .fresh);
    CHECK(store.admit(sample_message("m-2", "a-1", "C", "D"), ComponentName{"Directory Services"})
              .fresh);
    CHECK(store.application_seen("a-1", ComponentName{"Certification"}));
    CHECK(store.application_seen("a-1", ComponentName{"Directory Services"}));
}

TEST_CASE("a partially replayed multi-application message is rejected whole") {
    ReplayStore store;
    const ComponentName self{"Certification"};
    CHECK(store.admit(sample_message("m-1", "a-1", "R", "C"), self).fresh);

    Application fresh_app = testing::registration_example_application();
    fresh_app.id.value = "a-2";
    Application seen_app = testing::registration_example_application();
    seen_app.id.value = "a-1";
    const Message mixed = build_message(Identifier{"m-3"}, ComponentName{"R"}, ComponentName{"C"},
                                        {fresh_app, seen_app});

    const AdmitResult verdict = store.admit(mixed, self);
    CHECK_FALSE(verdict.fresh);
    CHECK(verdict.detail == "application id a-1 seen at Certification");
    // nothing from the rejected message was recorded
    CHECK_FALSE(store.message_seen("m-3"));
    CHECK_FALSE(store.application_seen("a-2", self));
}

TEST_CASE("replay history survives a restart through the log") {
    testing::TempDir dir;
    const auto log = dir / "replay.log";
    const ComponentName self{"Certification"};
    {
        ReplayStore store(log);
        CHECK(store.admit(sample_message("m-1", "a-1", "R", "C"), self).fresh);
        CHECK(store.admit(sample_message("m-2", "a-2", "R", "C"), self).fresh);
    }
    ReplayStore reloaded(log);
    CHECK(reloaded.message_seen("m-1"));
    CHECK(reloaded.application_seen("a-2", self));
    CHECK_FALSE(reloaded.admit(sample_message("m-1", "a-1", "R", "C"), self).fresh);
    CHECK(reloaded.admit(sample_message("m-9", "a-9", "R", "C"), self).fresh);
}

TEST_CASE("admission is atomic under concurrent duplicate deliveries") {
    ReplayStore store;
    const Message msg = sample_message("m-race", "a-race", "R", "C");
    std::atomic<int> fresh_count{0};
    std::vector<std::thread> workers;
    for (int t = 0; t < 8; ++t) {
        workers.emplace_back([&] {
            for (int i = 0; i < 50; ++i) {
                if (store.admit(msg, ComponentName{"Certification"}).fresh) ++fresh_count;
            }
        });
    }
    for (std::thread& w : workers) w.join();
    CHECK(fresh_count == 1);
}

// ---------------------------------------------------------------------------
// transports
// ---------------------------------------------------------------------------

TEST_CASE("the in-memory bus is a keyed fifo with timeouts") {
    routing::InMemoryBus bus;
    bus.push(ComponentName{"C"}, "one");
    bus.push(ComponentName{"C"}, "two");
    bus.push(ComponentName{"D"}, "other");
    CHECK(bus.pop(ComponentName{"C"}, Millis(100)) == "one");
    CHECK(bus.pop(ComponentName{"C"}, Millis(100)) == "two");
    CHECK(bus.pop(ComponentName{"C"}, Millis(20)) == std::nullopt);
    CHECK(bus.pop(ComponentName{"D"}, Millis(100)) == "other");
}

TEST_CASE("in-memory routing round-trips a message") {
    ComponentRegistry registry;
    registry.register_component({ComponentName{"Registration"}, TransportKind::InMemory, ""});
    registry.register_component({ComponentName{"Certification"}, TransportKind::InMemory, ""});
    MessageRouter router(registry);

    const Message msg = sample_message("m-1", "a-1", "Registration", "Certification");
    const routing::DeliveryReceipt receipt = router.send(msg);
    CHECK(receipt.message_id.value == "m-1");
    CHECK(receipt.recipient.value == "Certification");
    CHECK(receipt.transport == TransportKind::InMemory);

    const auto received = router.receive(ComponentName{"Certification"}, Millis(500));
    REQUIRE(received.has_value());
    CHECK(*received == msg);
    CHECK(router.receive(ComponentName{"Certification"}, Millis(20)) == std::nullopt);

    CHECK(code_of([&] {
              (void)router.send(sample_message("m-2", "a-2", "Registration", "Nowhere"));
          }) == Errc::UnknownComponent);
}

TEST_CASE("file mailboxes hold one message per file and deliver in name order") {
    testing::TempDir dir;
    const std::string mailbox = (dir / "mail/cert").string();
    ComponentRegistry registry;
    registry.register_component({ComponentName{"Registration"}, TransportKind::InMemory, ""});
    registry.register_component({ComponentName{"Certification"}, TransportKind::File, mailbox});
    MessageRouter router(registry);

    router.send(sample_message("m-2", "a-2", "Registration", "Certification"));
    router.send(sample_message("m-1", "a-1", "Registration", "Certification"));
    CHECK(std::filesystem::exists(std::filesystem::path(mailbox) / "m-1.itp.xml"));
    CHECK(std::filesystem::exists(std::filesystem::path(mailbox) / "m-2.itp.xml"));

    const auto first = router.receive(ComponentName{"Certification"}, Millis(100));
    REQUIRE(first.has_value());
    CHECK(first->id.value == "m-1");  // lexicographic pickup
    CHECK_FALSE(std::filesystem::exists(std::filesystem::path(mailbox) / "m-1.itp.xml"));
    const auto second = router.receive(ComponentName{"Certification"}, Millis(100));
    REQUIRE(second.has_value());
    CHECK(second->id.value == "m-2");
}

TEST_CASE("misrouted and malformed mailbox files are quarantined") {
    testing::TempDir dir;
    const std::string mailbox = (dir / "mail/cert").string();
    std::filesystem::create_directories(mailbox);
    ComponentRegistry registry;
    registry.register_component({ComponentName{"Certification"}, TransportKind::File, mailbox});
    MessageRouter router(registry);

    const Message stray = sample_message("m-stray", "a-1", "Registration", "Somewhere Else");
    testing::write_file(std::filesystem::path(mailbox) / "m-stray.itp.xml",
                        codec::serialize(stray));
    CHECK(code_of([&] {
              (void)router.receive(ComponentName{"Certification"}, Millis(100));
          }) == Errc::MisroutedMessage);
    CHECK(std::filesystem::exists(std::filesystem::path(mailbox) / "m-stray.itp.xml.misrouted"));

    testing::write_file(std::filesystem::path(mailbox) / "m-bad.itp.xml", "<not-a-message>");
    CHECK(code_of([&] {
              (void)router.receive(ComponentName{"Certification"}, Millis(100));
          }) == Errc::MalformedDocument);
    CHECK(std::filesystem::exists(std::filesystem::path(mailbox) / "m-bad.itp.xml.malformed"));

    CHECK(router.receive(ComponentName{"Certification"}, Millis(20)) == std::nullopt);
}

TEST_CASE("tcp routing frames one message per connection") {
    ComponentRegistry registry;
    registry.register_component({ComponentName{"Registration"}, TransportKind::InMemory, ""});
    registry.register_component(
        {ComponentName{"Certification"}, TransportKind::Tcp, "127.0.0.1:0"});
    MessageRouter router(registry);

    routing::TcpInbox& inbox = router.ensure_tcp_inbox(ComponentName{"Certification"});
    CHECK(inbox.port() != 0);
    CHECK(router.registry().resolve(ComponentName{"Certification"}).address ==
          "127.0.0.1:" + std::to_string(inbox.port()));

    const Message msg = sample_message("m-tcp", "a-tcp", "Registration", "Certification");
    const routing::DeliveryReceipt receipt = router.send(msg);
    CHECK(receipt.transport == TransportKind::Tcp);

    const auto received = router.receive(ComponentName{"Certification"}, Millis(2000));
    REQUIRE(received.has_value());
    CHECK(*received == msg);
}

TEST_CASE("tcp send failures surface as transport errors") {
    CHECK(code_of([&] { routing::tcp_send_frame("127.0.0.1:9", "payload"); }) ==
          Errc::TransportFailure);
    CHECK(code_of([&] { routing::tcp_send_frame("not-an-address", "payload"); }) ==
          Errc::TransportFailure);
}

TEST_CASE("transport kind names round-trip") {
    for (TransportKind kind :
         {TransportKind::InMemory, TransportKind::File, TransportKind::Tcp}) {
        CHECK(routing::transport_kind_from_string(routing::to_string(kind)) == kind);
    }
}
