// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "itp/audit.hpp"
#include "itp/codec.hpp"
#include "itp/components.hpp"
#include "itp/errors.hpp"
#include "itp/profiles.hpp"
#include "itp/routing.hpp"
#include "itp/security.hpp"
#include "support/test_support.hpp"

using namespace itp;
using namespace itp::components;

namespace {

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ItpError& e) {
        return e.code();
    }
    throw std::runtime_error("expected an ItpError");
}

UtcTime fixed_time() { return parse_iso8601_utc("2004-02-02T16:44:45Z"); }

const std::vector<std::string> kOperatorDns = {
    "CN=Operator One, OU=Operations, O=TrustCenter, C=DE",
    "CN=Operator Two, OU=Operations, O=TrustCenter, C=DE",
    "CN=Operator Three, OU=Operations, O=TrustCenter, C=DE",
};
const std::string kRegistrationDn = "CN=Registration, O=TrustCenter, C=DE";
const std::string kCertificationDn = "CN=Certification, O=TrustCenter, C=DE";
const std::string kCaOwnerDn = "CN=Host A, O=TrustCenter, C=DE";

// A complete in-memory trustcenter: every key, the MultiCert profile, replay
// gates and an audit log, ready to drive the pipeline.
struct Pipeline {
    crypto::SchemeRegistry schemes = crypto::SchemeRegistry::with_defaults();
    security::TrustStore trust;
    profiles::ProfileRegistry profile_registry;
    VirtualCAStore cas;
    routing::ReplayStore certification_replay;
    routing::ReplayStore directory_replay;
    audit::AuditLog audit_log;
    IdGenerator ids{42};

    std::string registration_key;
    std::string certification_key;
    std::vector<std::string> operator_keys;

    Pipeline() {
        const auto make = [&](security::KeyUsage usage, const std::string& owner) {
            auto record = security::keygen(schemes, schemes.default_signature_id(), usage, owner);
            trust.add(record);
            return record.key_id;
        };
        registration_key = make(security::KeyUsage::OperationalSigning, kRegistrationDn);
        certification_key = make(security::KeyUsage::OperationalSigning, kCertificationDn);
        for (const auto& dn : kOperatorDns) {
            operator_keys.push_back(make(security::KeyUsage::OperationalSigning, dn));
        }
        make(security::KeyUsage::CaSigning, kCaOwnerDn);
        profile_registry.register_profile(profiles::builtin_multicert(kOperatorDns));
        cas = VirtualCAStore::from_trust_store(trust);
    }

    Message intake_message(const IntakeData& data = default_intake(), std::size_t co_signers = 2) {
        Registration registration(schemes, profile_registry, trust, audit_log, registration_key,
                                  ids, [] { return fixed_time(); });
        Message msg = registration.process_intake(data);
        for (std::size_t i = 0; i < co_signers; ++i) {
            security::SignRequest request;
            request.key_id = operator_keys.at(i);
            security::sign_application(schemes, trust, msg.applications.front(), request);
        }
        return msg;
    }

    Message certify(const Message& msg) {
        Certification certification(schemes, profile_registry, trust, cas, certification_replay,
                                    audit_log, certification_key, ids, [] { return fixed_time(); });
        return certification.process(msg);
    }
};

} // namespace

// ---------------------------------------------------------------------------
// audit log
// ---------------------------------------------------------------------------

TEST_CASE("audit events chain from the genesis hash") {
    audit::AuditLog log;
    CHECK(audit::AuditLog::genesis() == std::string(64, '0'));

    const auto& first = log.append(kRegistration, "m1", "a1", audit::EventKind::Received,
                                   {"CN=X"}, "from someone", fixed_time());
    CHECK(first.sequence == 1);
    CHECK(first.chain_hash.size() == 64);

    const auto& second =
        log.append(kCertification, "m2", "a1", audit::EventKind::Processed, {}, "", fixed_time());
    CHECK(second.sequence == 2);
    CHECK(second.chain_hash != first.chain_hash);

    const auto trace = log.trace("a1");
    REQUIRE(trace.size() == 2);
    CHECK(trace[0].component.value == "Registration");
    CHECK(trace[1].component.value == "Certification");
    CHECK(log.trace("m2").size() == 1);
    CHECK(log.trace("unknown").empty());
}

TEST_CASE("audit kind names round-trip") {
    using audit::EventKind;
    for (const EventKind kind : {EventKind::Received, EventKind::Verified, EventKind::Authorized,
                                 EventKind::Processed, EventKind::Forwarded, EventKind::Rejected}) {
        CHECK(audit::event_kind_from_string(audit::to_string(kind)) == kind);
    }
    CHECK(code_of([] { (void)audit::event_kind_from_string("misplaced"); }) ==
          Errc::MalformedDocument);
}

TEST_CASE("a persisted audit log reloads and survives hostile text") {
    testing::TempDir dir;
    const auto path = dir / "audit.log";
    {
        audit::AuditLog log(path);
        log.append(kRegistration, "m|1", "a;1", audit::EventKind::Rejected,
                   {"CN=A;B|C", "CN=Plain"}, "detail with | pipe and\nnewline", fixed_time());
        log.append(kCertification, "m2", "", audit::EventKind::Verified, {}, "ok", fixed_time());
    }
    audit::AuditLog reloaded(path);
    REQUIRE(reloaded.events().size() == 2);
    CHECK(reloaded.events()[0].message_id == "m|1");
    CHECK(reloaded.events()[0].application_id == "a;1");
    CHECK(reloaded.events()[0].actor_dns == std::vector<std::string>{"CN=A;B|C", "CN=Plain"});
    CHECK(reloaded.events()[0].detail == "detail with | pipe and\nnewline");
    CHECK(reloaded.events()[1].kind == audit::EventKind::Verified);
    audit::AuditLog::verify_file(path);

    // Appends continue the chain after a restart.
    reloaded.append(kDirectoryServices, "m3", "", audit::EventKind::Processed, {}, "done",
                    fixed_time());
    audit::AuditLog::verify_file(path);
}

TEST_CASE("any edit to a stored audit line breaks the chain") {
    testing::TempDir dir;
    const auto path = dir / "audit.log";
    {
        audit::AuditLog log(path);
        log.append(kRegistration, "m1", "a1", audit::EventKind::Received, {}, "alpha",
                   fixed_time());
        log.append(kRegistration, "m1", "a1", audit::EventKind::Processed, {}, "beta",
                   fixed_time());
    }
    const std::string original = testing::read_file(path);

    std::string detail_flip = original;
    detail_flip.replace(detail_flip.find("alpha"), 5, "aXpha");
    testing::write_file(path, detail_flip);
    CHECK(code_of([&] { audit::AuditLog::verify_file(path); }) == Errc::ChainBroken);

    // Dropping the first record breaks the sequence/hash of the second.
    const std::string dropped = original.substr(original.find('\n') + 1);
    testing::write_file(path, dropped);
    CHECK(code_of([&] { audit::AuditLog::verify_file(path); }) == Errc::ChainBroken);

    testing::write_file(path, "not|enough|fields\n");
    CHECK(code_of([&] { audit::AuditLog::verify_file(path); }) == Errc::ChainBroken);

    testing::write_file(path, original);
    audit::AuditLog::verify_file(path);
}

// ---------------------------------------------------------------------------
// certificates
// ---------------------------------------------------------------------------

TEST_CASE("certificate usages map to field names") {
    CHECK(to_string(CertUsage::Encryption) == "encryption");
    CHECK(to_string(CertUsage::Signature) == "signature");
    CHECK(to_string(CertUsage::NonRepudiation) == "non-repudiation");
    CHECK(field_name_for(CertUsage::Encryption) == "encCertificate");
    CHECK(field_name_for(CertUsage::Signature) == "signCertificate");
    CHECK(field_name_for(CertUsage::NonRepudiation) == "nonRepCertificate");
    CHECK(cert_usage_from_string("non-repudiation") == CertUsage::NonRepudiation);
    CHECK(code_of([] { (void)cert_usage_from_string("attestation"); }) == Errc::MalformedDocument);
}

TEST_CASE("issued certificates verify against their virtual CA") {
    Pipeline env;
    const std::string subject_key = base64_encode(std::string("subject-public-key"));
    const CertificateBlob blob =
        issue_certificate(env.schemes, env.cas, "Host A", "CN=Alice,O=OrgName,C=DE",
                          CertUsage::Signature, subject_key, fixed_time());

    const CertificateInfo info = certificate_info(blob);
    CHECK(info.subject_dn == "CN=Alice,O=OrgName,C=DE");
    CHECK(info.usage == CertUsage::Signature);
    CHECK(info.virtual_ca == "Host A");
    CHECK(info.serial == 1);
    CHECK(info.issued_at == "2004-02-02T16:44:45Z");
    CHECK(info.subject_public_key_b64 == subject_key);

    const auto& ca_key = env.cas.key_of("Host A");
    CHECK(verify_certificate(env.schemes, blob, ca_key));

    // Encode/decode is the identity on the blob.
    const std::string wire = encode_certificate(blob);
    CHECK(decode_certificate(wire) == blob);

    // Any payload change invalidates the issuer signature.
    CertificateBlob tampered = blob;
    const Bytes payload_bytes = base64_decode(tampered.payload_b64);
    std::string payload(payload_bytes.begin(), payload_bytes.end());
    payload.replace(payload.find("Alice"), 5, "Mallory");
    tampered.payload_b64 = base64_encode(payload);
    CHECK_FALSE(verify_certificate(env.schemes, tampered, ca_key));

    // A different CA key does not verify it either.
    const auto other =
        security::keygen(env.schemes, env.schemes.default_signature_id(),
                         security::KeyUsage::CaSigning, "CN=Host B, O=TrustCenter, C=DE");
    CHECK_FALSE(verify_certificate(env.schemes, blob, other));

    // Serials increase per CA.
    const CertificateBlob next =
        issue_certificate(env.schemes, env.cas, "Host A", "CN=Bob,O=OrgName,C=DE",
                          CertUsage::Encryption, subject_key, fixed_time());
    CHECK(certificate_info(next).serial == 2);
    CHECK(env.cas.last_serial("Host A") == 2);
}

TEST_CASE("malformed certificate wire text is rejected") {
    CHECK(code_of([] { (void)decode_certificate(base64_encode(std::string("one\ntwo\n"))); }) ==
          Errc::MalformedDocument);
    CHECK(code_of([] {
              (void)decode_certificate(base64_encode(std::string("other-format/9\nAAAA\nAAAA\n")));
          }) == Errc::MalformedDocument);
    CHECK(code_of([] {
              (void)decode_certificate(
                  base64_encode(std::string(kCertificateFormat) + "\nnot base64!\nAAAA\n"));
          }) == Errc::MalformedDocument);
    // Payload must be the canonical certificate document.
    CertificateBlob blob;
    blob.payload_b64 = base64_encode(std::string("<certificate format=\"x\"></certificate>"));
    blob.signature_b64 = "AAAA";
    CHECK(code_of([&] { (void)certificate_info(blob); }) == Errc::MalformedDocument);
}

TEST_CASE("the virtual CA store guards key usage and uniqueness") {
    Pipeline env;
    CHECK(env.cas.contains("Host A"));
    CHECK(env.cas.names() == std::vector<std::string>{"Host A"});
    CHECK_FALSE(env.cas.contains("Host B"));
    CHECK(code_of([&] { (void)env.cas.key_of("Host B"); }) == Errc::CredentialRejected);
    CHECK(code_of([&] { (void)env.cas.next_serial("Host B"); }) == Errc::CredentialRejected);

    const auto operational = env.trust.require(env.registration_key);
    CHECK(code_of([&] { env.cas.add("Host B", operational); }) == Errc::UsageViolation);

    const auto duplicate =
        security::keygen(env.schemes, env.schemes.default_signature_id(),
                         security::KeyUsage::CaSigning, kCaOwnerDn);
    CHECK(code_of([&] { env.cas.add("Host A", duplicate); }) == Errc::CredentialRejected);
}

TEST_CASE("certificate serials persist across store restarts") {
    testing::TempDir dir;
    const auto log = dir / "ca-serials.log";
    Pipeline env;
    const auto ca_record = env.cas.key_of("Host A");
    {
        VirtualCAStore store(log);
        store.add("Host A", ca_record);
        CHECK(store.next_serial("Host A") == 1);
        CHECK(store.next_serial("Host A") == 2);
    }
    VirtualCAStore reopened(log);
    CHECK(reopened.last_serial("Host A") == 2);
    CHECK_FALSE(reopened.contains("Host A"));  // keys never live in the serial log
    reopened.add("Host A", ca_record);
    CHECK(reopened.next_serial("Host A") == 3);

    testing::write_file(log, "Host A|not-a-number|2004-02-02T16:44:45Z\n");
    CHECK(code_of([&] { VirtualCAStore broken(log); }) == Errc::StorePersistenceFailure);
}

TEST_CASE("from_trust_store names virtual CAs by the owner CN") {
    Pipeline env;
    VirtualCAStore store = VirtualCAStore::from_trust_store(env.trust);
    CHECK(store.names() == std::vector<std::string>{"Host A"});
    CHECK(store.key_of("Host A").usage == security::KeyUsage::CaSigning);
}

// ---------------------------------------------------------------------------
// publication store and notification outbox
// ---------------------------------------------------------------------------

TEST_CASE("published certificates land in per-application files") {
    testing::TempDir dir;
    PublicationStore store(dir / "pub");
    Pipeline env;
    const CertificateBlob blob =
        issue_certificate(env.schemes, env.cas, "Host A", "CN=Alice", CertUsage::Encryption,
                          base64_encode(std::string("k")), fixed_time());

    CHECK(store.list("app1").empty());
    store.publish("app1", CertUsage::Encryption, blob);
    store.publish("app1", CertUsage::Signature, blob);
    store.publish("app1", CertUsage::NonRepudiation, blob);
    CHECK(store.list("app1") == std::vector<std::string>{"encryption.cert", "non-repudiation.cert",
                                                         "signature.cert"});
    CHECK(store.read("app1", CertUsage::Encryption) == blob);
    CHECK(code_of([&] { (void)store.read("app2", CertUsage::Encryption); }) == Errc::IoFailure);
}

TEST_CASE("the notification outbox persists its records") {
    testing::TempDir dir;
    const auto path = dir / "outbox.log";
    {
        NotificationOutbox outbox(path);
        outbox.record("alice@orgunitname.orgname.de", "app1", 3, fixed_time());
        outbox.record("pipe|person@example.org", "app2", 0, fixed_time());
    }
    const auto entries = NotificationOutbox::load(path);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].email == "alice@orgunitname.orgname.de");
    CHECK(entries[0].application_id == "app1");
    CHECK(entries[0].count == 3);
    CHECK(entries[0].at_iso == "2004-02-02T16:44:45Z");
    CHECK(entries[1].email == "pipe|person@example.org");

    NotificationOutbox reopened(path);
    CHECK(reopened.entries().size() == 2);
    CHECK(code_of([&] { (void)NotificationOutbox::load(dir / "absent.log"); }) == Errc::IoFailure);
}

// ---------------------------------------------------------------------------
// Registration
// ---------------------------------------------------------------------------

TEST_CASE("registration composes a signed certification request") {
    Pipeline env;
    Registration registration(env.schemes, env.profile_registry, env.trust, env.audit_log,
                              env.registration_key, env.ids, [] { return fixed_time(); });
    const Message msg = registration.process_intake(default_intake());

    CHECK(msg.sender.value == "Registration");
    CHECK(msg.recipient.value == "Certification");
    REQUIRE(msg.applications.size() == 1);
    const Application& app = msg.applications.front();
    CHECK(app.profile_id == "MultiCert");
    CHECK(app.fields.size() == 5);
    CHECK(get_text_field(app, "clientName") == "Host A");
    CHECK(get_text_field(app, "subjectDN") == "CN=Alice,OU=OrgUnitName,O=OrgName,C=DE");
    CHECK(get_text_field(app, "email") == "alice@orgunitname.orgname.de");
    CHECK(get_text_field(app, "publiclyAvailable") == "true");

    // Only the digest of the revocation secret travels.
    CHECK(get_text_field(app, "revocationPassword") ==
          "0f4466964401a3e2a6744c27438acd6d1ba18e654dd6dcd75addee2651f4d57f");

    REQUIRE(app.signatures.size() == 1);
    CHECK(app.signatures.front().signer_subject_dn == kRegistrationDn);
    const auto report = security::verify_message(env.schemes, env.trust, msg);
    CHECK(report.overall);
    CHECK(report.count(security::Verdict::Valid) == 1);
    CHECK(codec::validate(msg).empty());

    // The intake leaves a processed + forwarded audit pair.
    const auto trace = env.audit_log.trace(app.id.value);
    REQUIRE(trace.size() == 2);
    CHECK(trace[0].kind == audit::EventKind::Processed);
    CHECK(trace[1].kind == audit::EventKind::Forwarded);
    CHECK(trace[1].detail == "to Certification");
}

TEST_CASE("registration refuses applicants that fail the credential check") {
    Pipeline env;
    Registration registration(env.schemes, env.profile_registry, env.trust, env.audit_log,
                              env.registration_key, env.ids, [] { return fixed_time(); });
    const auto deny = [](const IntakeData&) { return false; };
    CHECK(code_of([&] { (void)registration.process_intake(default_intake(), deny); }) ==
          Errc::CredentialRejected);
    REQUIRE_FALSE(env.audit_log.events().empty());
    CHECK(env.audit_log.events().back().kind == audit::EventKind::Rejected);

    const auto allow = [](const IntakeData& d) { return d.client_name == "Host A"; };
    CHECK(registration.process_intake(default_intake(), allow).applications.size() == 1);
}

// ---------------------------------------------------------------------------
// Certification
// ---------------------------------------------------------------------------

TEST_CASE("certification issues three certificates under dual control") {
    Pipeline env;
    const Message hop1 = env.intake_message();
    const std::string app_id = hop1.applications.front().id.value;

    const Message hop2 = env.certify(hop1);
    CHECK(hop2.sender.value == "Certification");
    CHECK(hop2.recipient.value == "Directory Services");
    CHECK(hop2.id.value != hop1.id.value);
    REQUIRE(hop2.applications.size() == 1);

    const Application& app = hop2.applications.front();
    CHECK(app.id.value == app_id);  // the application id never changes
    CHECK_FALSE(has_field(app, "subjectDN"));
    CHECK(get_text_field(app, "clientName") == "Host A");
    CHECK(get_text_field(app, "email") == "alice@orgunitname.orgname.de");
    CHECK(get_text_field(app, "publiclyAvailable") == "true");
    CHECK(has_field(app, "revocationPassword"));

    // Issued certificates verify against the client's virtual CA; serials 1..3.
    std::vector<std::uint64_t> serials;
    for (const CertUsage usage :
         {CertUsage::Encryption, CertUsage::Signature, CertUsage::NonRepudiation}) {
        const auto blob = decode_certificate(get_text_field(app, field_name_for(usage)).value());
        const auto info = certificate_info(blob);
        CHECK(info.subject_dn == "CN=Alice,OU=OrgUnitName,O=OrgName,C=DE");
        CHECK(info.usage == usage);
        CHECK(info.virtual_ca == "Host A");
        CHECK(verify_certificate(env.schemes, blob, env.cas.key_of("Host A")));
        serials.push_back(info.serial);
    }
    CHECK(serials == std::vector<std::uint64_t>{1, 2, 3});

    // Inbound signatures are stripped; the stage signs the transformed form.
    REQUIRE(app.signatures.size() == 1);
    CHECK(app.signatures.front().signer_subject_dn == kCertificationDn);
    const auto report = security::verify_message(env.schemes, env.trust, hop2);
    CHECK(report.overall);
    CHECK(report.count(security::Verdict::Valid) == 1);

    // The stage's audit trail walks received → verified → authorized → processed.
    std::vector<audit::EventKind> kinds;
    std::vector<std::string> authorized_by;
    for (const auto& event : env.audit_log.trace(hop1.id.value)) {
        if (event.component.value != "Certification") continue;
        kinds.push_back(event.kind);
        if (event.kind == audit::EventKind::Authorized) authorized_by = event.actor_dns;
    }
    CHECK(kinds == std::vector<audit::EventKind>{audit::EventKind::Received,
                                                 audit::EventKind::Verified,
                                                 audit::EventKind::Authorized,
                                                 audit::EventKind::Processed});
    CHECK(authorized_by == std::vector<std::string>{kOperatorDns[0], kOperatorDns[1]});
}

TEST_CASE("certification rejects replays of message and application ids") {
    Pipeline env;
    const Message hop1 = env.intake_message();
    (void)env.certify(hop1);

    CHECK(code_of([&] { (void)env.certify(hop1); }) == Errc::ReplayRejected);

    // A fresh envelope around the same application is still a replay.
    Message rewrapped = build_message(env.ids.next(fixed_time()), hop1.sender, hop1.recipient,
                                      hop1.applications);
    CHECK(code_of([&] { (void)env.certify(rewrapped); }) == Errc::ReplayRejected);

    const auto& last = env.audit_log.events().back();
    CHECK(last.kind == audit::EventKind::Rejected);
    CHECK(last.detail.find("replay:") == 0);
}

TEST_CASE("certification denies requests without an operator quorum") {
    Pipeline env;
    const Message lone = env.intake_message(default_intake(), 1);
    try {
        (void)env.certify(lone);
        FAIL("expected AuthorizationDenied");
    } catch (const ItpError& e) {
        CHECK(e.code() == Errc::AuthorizationDenied);
        CHECK(std::string(e.what()).find("requires 2 operator signatures, found 1") !=
              std::string::npos);
    }

    Pipeline env2;
    const Message none = env2.intake_message(default_intake(), 0);
    CHECK(code_of([&] { (void)env2.certify(none); }) == Errc::AuthorizationDenied);
}

TEST_CASE("certification rejects tampered and incomplete applications") {
    Pipeline env;
    Message tampered = env.intake_message();
    tampered.applications.front() =
        set_field(tampered.applications.front(), "email", "mallory@evil.example");
    CHECK(code_of([&] { (void)env.certify(tampered); }) == Errc::SignatureInvalid);

    // Unsigned application missing a required field: stage validation speaks.
    Pipeline env2;
    Application missing;
    missing.id = env2.ids.next(fixed_time());
    missing.profile_id = "MultiCert";
    missing = set_field(missing, "clientName", "Host A");
    missing = set_field(missing, "email", "a@b.c");
    const Message incomplete = build_message(env2.ids.next(fixed_time()), kRegistration,
                                             kCertification, {missing});
    try {
        (void)env2.certify(incomplete);
        FAIL("expected StageValidationFailed");
    } catch (const ItpError& e) {
        CHECK(e.code() == Errc::StageValidationFailed);
        CHECK(std::string(e.what()).find("subjectDN missing") != std::string::npos);
        CHECK(std::string(e.what()).find("revocationPassword missing") != std::string::npos);
    }

    // Unknown profile ids cannot be processed.
    Pipeline env3;
    Application stranger;
    stranger.id = env3.ids.next(fixed_time());
    stranger.profile_id = "Mystery";
    stranger = set_field(stranger, "clientName", "Host A");
    const Message unknown = build_message(env3.ids.next(fixed_time()), kRegistration,
                                          kCertification, {stranger});
    CHECK(code_of([&] { (void)env3.certify(unknown); }) == Errc::UnknownProfile);
}

// ---------------------------------------------------------------------------
// Directory Services
// ---------------------------------------------------------------------------

namespace {

struct Directory {
    testing::TempDir dir;
    PublicationStore publications;
    NotificationOutbox outbox;

    explicit Directory() : publications(dir / "pub"), outbox(dir / "outbox.log") {}

    PublicationRecord process(Pipeline& env, const Message& msg) {
        DirectoryServices directory(env.schemes, env.profile_registry, env.trust,
                                    env.directory_replay, env.audit_log, publications, outbox,
                                    [] { return fixed_time(); });
        return directory.process(msg);
    }
};

} // namespace

TEST_CASE("directory services publishes certificates and notifies the holder") {
    Pipeline env;
    Directory directory;
    const Message hop2 = env.certify(env.intake_message());
    const std::string app_id = hop2.applications.front().id.value;

    const PublicationRecord record = directory.process(env, hop2);
    CHECK(record.application_id.value == app_id);
    CHECK(record.published);
    CHECK(record.certificates.size() == 3);
    CHECK(record.attached_count == 3);
    CHECK(record.notification_email == "alice@orgunitname.orgname.de");

    CHECK(directory.publications.list(app_id) ==
          std::vector<std::string>{"encryption.cert", "non-repudiation.cert", "signature.cert"});
    CHECK(directory.publications.read(app_id, CertUsage::Encryption) == record.certificates[0]);
    CHECK(directory.publications.read(app_id, CertUsage::NonRepudiation) ==
          record.certificates[2]);

    REQUIRE(directory.outbox.entries().size() == 1);
    CHECK(directory.outbox.entries().front().email == "alice@orgunitname.orgname.de");
    CHECK(directory.outbox.entries().front().count == 3);

    // Replays of the publication request are refused.
    CHECK(code_of([&] { (void)directory.process(env, hop2); }) == Errc::ReplayRejected);
}

TEST_CASE("unpublished requests still notify the holder") {
    Pipeline env;
    Directory directory;
    IntakeData intake = default_intake();
    intake.publicly_available = false;
    const Message hop2 = env.certify(env.intake_message(intake));
    const std::string app_id = hop2.applications.front().id.value;

    const PublicationRecord record = directory.process(env, hop2);
    CHECK_FALSE(record.published);
    CHECK(record.certificates.size() == 3);
    CHECK(directory.publications.list(app_id).empty());
    REQUIRE(directory.outbox.entries().size() == 1);
    CHECK(directory.outbox.entries().front().count == 3);
}

TEST_CASE("directory services demands a valid certification signature") {
    Pipeline env;
    Directory directory;
    Message hop2 = env.certify(env.intake_message());
    hop2.applications.front().signatures.clear();
    const Message stripped = build_message(env.ids.next(fixed_time()), hop2.sender,
                                           hop2.recipient, hop2.applications);
    try {
        (void)directory.process(env, stripped);
        FAIL("expected SignatureInvalid");
    } catch (const ItpError& e) {
        CHECK(e.code() == Errc::SignatureInvalid);
        CHECK(std::string(e.what()).find("no valid Certification signature on application") !=
              std::string::npos);
    }
}

TEST_CASE("directory services refuses empty messages") {
    Pipeline env;
    Directory directory;
    Message empty;
    empty.id = env.ids.next(fixed_time());
    empty.sender = kCertification;
    empty.recipient = kDirectoryServices;
    CHECK(code_of([&] { (void)directory.process(env, empty); }) == Errc::EmptyMessage);
}

// ---------------------------------------------------------------------------
// end-to-end scenario
// ---------------------------------------------------------------------------

TEST_CASE("the multicert scenario runs the full pipeline over files") {
    testing::TempDir dir;
    ScenarioOptions options;
    options.workdir = dir.path();
    options.id_seed = 7;
    const ScenarioResult result = run_multicert_scenario(options);

    // The application id is conserved across both hops; subjectDN is consumed.
    const Message hop1 = codec::parse(testing::read_file(result.hop1_file));
    const Message hop2 = codec::parse(testing::read_file(result.hop2_file));
    CHECK(hop1.id.value == result.hop1_message_id.value);
    CHECK(hop2.id.value == result.hop2_message_id.value);
    REQUIRE(hop1.applications.size() == 1);
    REQUIRE(hop2.applications.size() == 1);
    CHECK(hop1.applications.front().id.value == result.application_id.value);
    CHECK(hop2.applications.front().id.value == result.application_id.value);
    CHECK(has_field(hop1.applications.front(), "subjectDN"));
    CHECK_FALSE(has_field(hop2.applications.front(), "subjectDN"));
    CHECK(hop1.sender.value == "Registration");
    CHECK(hop1.recipient.value == "Certification");
    CHECK(hop2.sender.value == "Certification");
    CHECK(hop2.recipient.value == "Directory Services");

    // Both persisted documents verify against the persisted keystore.
    security::TrustStore trust = security::TrustStore::load(result.keystore_file);
    const auto report1 = security::verify_message(crypto::SchemeRegistry::with_defaults(), trust,
                                                  hop1);
    CHECK(report1.overall);
    CHECK(report1.count(security::Verdict::Valid) == 3);  // Registration + two operators
    const auto report2 = security::verify_message(crypto::SchemeRegistry::with_defaults(), trust,
                                                  hop2);
    CHECK(report2.overall);
    CHECK(report2.count(security::Verdict::Valid) == 1);

    // Publication: three certificates on disk, one notification to Alice.
    CHECK(result.publication.published);
    CHECK(result.publication.certificates.size() == 3);
    PublicationStore publications(result.publication_dir);
    CHECK(publications.list(result.application_id.value).size() == 3);
    const auto outbox = NotificationOutbox::load(result.outbox_file);
    REQUIRE(outbox.size() == 1);
    CHECK(outbox.front().email == "alice@orgunitname.orgname.de");
    CHECK(outbox.front().application_id == result.application_id.value);
    CHECK(outbox.front().count == 3);

    // Two distinct operators co-signed.
    REQUIRE(result.operator_dns.size() == 2);
    CHECK(result.operator_dns[0] != result.operator_dns[1]);

    // The audit trail spans all three components and its chain verifies.
    audit::AuditLog::verify_file(result.audit_log_file);
    audit::AuditLog log(result.audit_log_file);
    std::set<std::string> components_seen;
    for (const auto& event : log.trace(result.application_id.value)) {
        components_seen.insert(event.component.value);
    }
    CHECK(components_seen == std::set<std::string>{"Registration", "Certification",
                                                   "Directory Services"});

    // The profile configuration on disk reloads into the same pipeline.
    const auto specs = profiles::load_config(result.profile_config_file);
    REQUIRE(specs.size() == 1);
    CHECK(specs[0].profile_id == "MultiCert");
}

TEST_CASE("scenario runs in separate workdirs are independent") {
    testing::TempDir dir;
    ScenarioOptions first;
    first.workdir = dir / "one";
    first.id_seed = 3;
    ScenarioOptions second;
    second.workdir = dir / "two";
    second.id_seed = 9;
    const ScenarioResult a = run_multicert_scenario(first);
    const ScenarioResult b = run_multicert_scenario(second);
    CHECK(a.application_id.value != b.application_id.value);
    CHECK(a.publication.published);
    CHECK(b.publication.published);
    CHECK(code_of([&] { ScenarioOptions bad; (void)run_multicert_scenario(bad); }) ==
          Errc::IoFailure);
}
