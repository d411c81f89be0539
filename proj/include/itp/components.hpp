// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_COMPONENTS_HPP
#define ITP_COMPONENTS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "itp/audit.hpp"
#include "itp/model.hpp"
#include "itp/profiles.hpp"
#include "itp/routing.hpp"
#include "itp/security.hpp"

// Reference trustcenter components: Registration composes certification
// requests, Certification issues certificates under virtual CAs behind dual
// control, Directory Services publishes and notifies. Together they run the
// MultiCert pipeline end to end.

namespace itp::components {

using Clock = std::function<UtcTime()>;

inline const ComponentName kRegistration{"Registration"};
inline const ComponentName kCertification{"Certification"};
inline const ComponentName kDirectoryServices{"Directory Services"};

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

enum class CertUsage { Encryption, Signature, NonRepudiation };

std::string to_string(CertUsage usage);
CertUsage cert_usage_from_string(const std::string& text);  // throws MalformedDocument
std::string field_name_for(CertUsage usage);  // encCertificate / signCertificate / nonRepCertificate

inline constexpr char kCertificateFormat[] = "itp-simple-cert/1";

// payload is the Base64 of a canonical tuple document; the issuer signature
// covers those payload bytes with the virtual CA key.
struct CertificateBlob {
    std::string format_id = kCertificateFormat;
    std::string payload_b64;
    std::string signature_b64;

    friend bool operator==(const CertificateBlob&, const CertificateBlob&) = default;
};

struct CertificateInfo {
    std::string subject_dn;
    CertUsage usage = CertUsage::Encryption;
    std::string virtual_ca;
    std::uint64_t serial = 0;
    std::string issued_at;  // ISO-8601 UTC
    std::string subject_public_key_b64;
};

// Field value form: Base64 of the three-line wire text
// (format-id, payload Base64, signature Base64).
std::string encode_certificate(const CertificateBlob& blob);
CertificateBlob decode_certificate(const std::string& field_value);  // throws MalformedDocument
CertificateInfo certificate_info(const CertificateBlob& blob);       // throws MalformedDocument

bool verify_certificate(const crypto::SchemeRegistry& schemes, const CertificateBlob& blob,
                        const security::KeyPairRecord& ca_key);

// One ca-signing key per virtual CA name; serials strictly increase and are
// persisted through an append-only `name|serial|iso-timestamp` log.
class VirtualCAStore {
public:
    VirtualCAStore() = default;
    explicit VirtualCAStore(std::filesystem::path serial_log);  // throws StorePersistenceFailure

    void add(const std::string& name, security::KeyPairRecord ca_key);  // throws UsageViolation, CredentialRejected
    bool contains(const std::string& name) const;
    const security::KeyPairRecord& key_of(const std::string& name) const;  // throws CredentialRejected
    std::uint64_t last_serial(const std::string& name) const;  // 0 before first issuance
    std::uint64_t next_serial(const std::string& name);        // throws StorePersistenceFailure
    std::vector<std::string> names() const;

    // Every ca-signing record becomes a virtual CA named by its owner CN.
    static VirtualCAStore from_trust_store(const security::TrustStore& trust,
                                           std::filesystem::path serial_log = {});

private:
    struct Entry {
        std::string name;
        security::KeyPairRecord key;
        std::uint64_t serial = 0;
    };
    Entry& require(const std::string& name);
    const Entry& require(const std::string& name) const;

    std::vector<Entry> entries_;
    std::filesystem::path serial_log_;
    bool persistent_ = false;
};

CertificateBlob issue_certificate(const crypto::SchemeRegistry& schemes, VirtualCAStore& cas,
                                  const std::string& ca_name, const std::string& subject_dn,
                                  CertUsage usage, const std::string& subject_public_key_b64,
                                  UtcTime issued_at);

// ---------------------------------------------------------------------------
// Publication side effects
// ---------------------------------------------------------------------------

// Directory of `<application-id>/<usage>.cert` files holding the wire text.
class PublicationStore {
public:
    explicit PublicationStore(std::filesystem::path root);

    void publish(const std::string& application_id, CertUsage usage,
                 const CertificateBlob& blob);  // throws IoFailure
    std::vector<std::string> list(const std::string& application_id) const;  // sorted file names
    CertificateBlob read(const std::string& application_id, CertUsage usage) const;  // throws IoFailure
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
};

// Newline-delimited `email|application-id|count|iso-timestamp` records.
class NotificationOutbox {
public:
    struct Entry {
        std::string email;
        std::string application_id;
        std::size_t count = 0;
        std::string at_iso;
    };

    NotificationOutbox() = default;
    explicit NotificationOutbox(std::filesystem::path path);

    void record(const std::string& email, const std::string& application_id, std::size_t count,
                UtcTime at);  // throws IoFailure
    const std::vector<Entry>& entries() const { return entries_; }
    static std::vector<Entry> load(const std::filesystem::path& path);  // throws IoFailure

private:
    std::vector<Entry> entries_;
    std::filesystem::path path_;
    bool persistent_ = false;
};

// ---------------------------------------------------------------------------
// Components
// ---------------------------------------------------------------------------

struct IntakeData {
    std::string client_name;
    std::string subject_dn;
    std::string revocation_password;  // raw secret; only its hash travels
    std::string email;
    bool publicly_available = true;
};

using CredentialCheck = std::function<bool(const IntakeData&)>;

struct PublicationRecord {
    Identifier application_id;
    bool published = false;
    std::vector<CertificateBlob> certificates;
    std::string notification_email;
    std::size_t attached_count = 0;
};

// Vets credentials, composes the MultiCert request (five fields, the
// revocation password replaced by its digest) and signs the application.
// The result is ready for operator co-signing and dispatch.
class Registration {
public:
    Registration(const crypto::SchemeRegistry& schemes, const profiles::ProfileRegistry& profiles,
                 const security::TrustStore& trust, audit::AuditLog& audit,
                 std::string signing_key_id, IdGenerator& ids, Clock clock = {},
                 std::string profile_id = "MultiCert");

    Message process_intake(const IntakeData& intake, const CredentialCheck& check = {});  // throws CredentialRejected

private:
    const crypto::SchemeRegistry& schemes_;
    const profiles::ProfileRegistry& profiles_;
    const security::TrustStore& trust_;
    audit::AuditLog& audit_;
    std::string signing_key_id_;
    IdGenerator& ids_;
    Clock clock_;
    std::string profile_id_;
};

// Admits (replay gate), verifies, authorizes under dual control, issues the
// three certificates under the client's virtual CA, consumes subjectDN and
// forwards to the next stage. Rejections are audited before throwing.
class Certification {
public:
    Certification(const crypto::SchemeRegistry& schemes, const profiles::ProfileRegistry& profiles,
                  const security::TrustStore& trust, VirtualCAStore& cas,
                  routing::ReplayStore& replay, audit::AuditLog& audit,
                  std::string signing_key_id, IdGenerator& ids, Clock clock = {});

    // throws ReplayRejected, SignatureInvalid, AuthorizationDenied,
    // StageValidationFailed, UnknownProfile
    Message process(const Message& msg);

private:
    const crypto::SchemeRegistry& schemes_;
    const profiles::ProfileRegistry& profiles_;
    const security::TrustStore& trust_;
    VirtualCAStore& cas_;
    routing::ReplayStore& replay_;
    audit::AuditLog& audit_;
    std::string signing_key_id_;
    IdGenerator& ids_;
    Clock clock_;
};

// Verifies, checks the publish flag, writes blobs to the publication store
// and records the notification.
class DirectoryServices {
public:
    DirectoryServices(const crypto::SchemeRegistry& schemes,
                      const profiles::ProfileRegistry& profiles,
                      const security::TrustStore& trust, routing::ReplayStore& replay,
                      audit::AuditLog& audit, PublicationStore& publications,
                      NotificationOutbox& outbox, Clock clock = {});

    // throws ReplayRejected, SignatureInvalid, StageValidationFailed, UnknownProfile
    PublicationRecord process(const Message& msg);

private:
    const crypto::SchemeRegistry& schemes_;
    const profiles::ProfileRegistry& profiles_;
    const security::TrustStore& trust_;
    routing::ReplayStore& replay_;
    audit::AuditLog& audit_;
    PublicationStore& publications_;
    NotificationOutbox& outbox_;
    Clock clock_;
};

// ---------------------------------------------------------------------------
// Reference scenario
// ---------------------------------------------------------------------------

IntakeData default_intake();  // Alice's certification request

struct ScenarioOptions {
    std::filesystem::path workdir;
    std::uint32_t id_seed = 0;  // 0 = random ids
    IntakeData intake = default_intake();
};

struct ScenarioResult {
    Identifier application_id;
    Identifier hop1_message_id;  // Registration -> Certification
    Identifier hop2_message_id;  // Certification -> Directory Services
    PublicationRecord publication;
    std::vector<std::string> operator_dns;  // the two co-signers

    std::filesystem::path hop1_file;
    std::filesystem::path hop2_file;
    std::filesystem::path keystore_file;
    std::filesystem::path profile_config_file;
    std::filesystem::path audit_log_file;
    std::filesystem::path outbox_file;
    std::filesystem::path publication_dir;
};

// Drives the full pipeline over the file transport inside workdir, leaving
// every artifact (messages, keystore, logs, publications) on disk.
ScenarioResult run_multicert_scenario(const ScenarioOptions& options);

} // namespace itp::components

#endif // ITP_COMPONENTS_HPP
