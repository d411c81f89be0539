// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_SECURITY_HPP
#define ITP_SECURITY_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "itp/crypto.hpp"
#include "itp/model.hpp"

// Key management, scoped signatures, verification verdicts, dual-control
// authorization and field-level encryption.

namespace itp::security {

// ---------------------------------------------------------------------------
// Keys
// ---------------------------------------------------------------------------

enum class KeyUsage {
    OperationalSigning,  // message and application signatures
    CaSigning,           // certificate issuance only
    Encryption,          // field encryption key agreement
};

std::string to_string(KeyUsage usage);
KeyUsage key_usage_from_string(const std::string& text);  // throws MalformedDocument

struct KeyPairRecord {
    std::string key_id;
    std::string algorithm_id;
    KeyUsage usage = KeyUsage::OperationalSigning;
    std::string owner_subject_dn;
    Bytes public_key;
    Bytes private_key;  // empty when only the public half is held

    bool has_private() const { return !private_key.empty(); }
    KeyPairRecord public_half() const;
};

// First 16 hex characters of sha256(public key).
std::string derive_key_id(crypto::ByteView public_key);

KeyPairRecord keygen(const crypto::SchemeRegistry& registry, const std::string& algorithm_id,
                     KeyUsage usage, const std::string& owner_subject_dn);

// Line-oriented store: key-id|algorithm|usage|owner|base64(public)|base64(private or empty).
class TrustStore {
public:
    // Re-adding an identical record merges (private material wins);
    // a conflicting record with the same id throws CredentialRejected.
    void add(KeyPairRecord record);
    void absorb(const TrustStore& other);

    const KeyPairRecord* find(const std::string& key_id) const;
    const KeyPairRecord& require(const std::string& key_id) const;  // throws CredentialRejected
    const KeyPairRecord* find_by_owner(const std::string& owner_subject_dn, KeyUsage usage) const;
    const std::vector<KeyPairRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    std::string serialize() const;
    static TrustStore deserialize(const std::string& text);  // throws MalformedDocument
    void save(const std::filesystem::path& path) const;      // throws IoFailure
    static TrustStore load(const std::filesystem::path& path);

private:
    std::vector<KeyPairRecord> records_;
};

// ---------------------------------------------------------------------------
// Signing
// ---------------------------------------------------------------------------

struct SignRequest {
    std::string key_id;
    SignatureScope scope = SignatureScope::whole();
    std::string digest_algorithm_id = "sha256";
    UtcTime created_at = utc_now();
};

// Appends the new block to the application / message and returns it.
// Throws CredentialRejected (unknown key or no private half), UsageViolation
// (key not enabled for operational signing), UnsupportedAlgorithm,
// UnknownScopeField.
SignatureBlock sign_application(const crypto::SchemeRegistry& registry, const TrustStore& store,
                                Application& application, const SignRequest& request);

// Message signatures always cover the whole message; a field scope throws InvalidModel.
SignatureBlock sign_message(const crypto::SchemeRegistry& registry, const TrustStore& store,
                            Message& message, const SignRequest& request);

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

enum class Verdict {
    Valid,
    Invalid,         // bad signature, unknown key, owner or usage violation
    AdvisoryBroken,  // a field named in the scope is gone; does not fail the message
};

std::string to_string(Verdict verdict);

struct VerificationEntry {
    std::string application_id;  // empty for message-level blocks
    std::string signer_subject_dn;
    std::string key_id;
    Verdict verdict = Verdict::Invalid;
    std::string reason;  // empty when valid
};

struct VerificationReport {
    std::vector<VerificationEntry> entries;
    bool overall = true;  // no Invalid entry (advisory entries do not fail)

    std::size_t count(Verdict verdict) const;
};

VerificationReport verify_application(const crypto::SchemeRegistry& registry,
                                      const TrustStore& store, const Application& application);

// Message-level blocks first, then each application's blocks in order.
VerificationReport verify_message(const crypto::SchemeRegistry& registry, const TrustStore& store,
                                  const Message& message);

// ---------------------------------------------------------------------------
// Authorization (dual control)
// ---------------------------------------------------------------------------

struct AuthorizationPolicy {
    std::vector<std::string> required_signers;     // component names or full DNs
    std::size_t required_operators = 0;            // distinct eligible operator signatures
    std::vector<std::string> eligible_operators;   // full DNs
};

struct AuthorizationDecision {
    bool authorized = false;
    std::vector<std::string> matched_signers;
    std::vector<std::string> matched_operators;
    std::string reason;  // empty when authorized
};

// "" when the DN has no CN attribute.
std::string extract_cn(const std::string& subject_dn);

// Only Valid entries count. A required signer matches by full DN or by CN.
AuthorizationDecision authorize(const VerificationReport& report,
                                const AuthorizationPolicy& policy);
void require_authorized(const VerificationReport& report, const AuthorizationPolicy& policy);

// ---------------------------------------------------------------------------
// Field encryption
// ---------------------------------------------------------------------------

// Replaces the plaintext value in place. Throws FieldAbsent, AlreadyEncrypted,
// CredentialRejected (unknown recipient key), UsageViolation (recipient key is
// not an encryption key), UnsupportedAlgorithm.
void encrypt_field(const crypto::SchemeRegistry& registry, const TrustStore& store,
                   Application& application, const std::string& field_name,
                   const std::string& recipient_key_id);

// Throws FieldAbsent, NotEncrypted, CredentialRejected (no private half),
// DecryptionFailure (wrong key or tampered ciphertext).
std::string decrypt_field_value(const crypto::SchemeRegistry& registry, const TrustStore& store,
                                const Application& application, const std::string& field_name);

// decrypt_field_value, then the field reverts to plaintext in place.
void decrypt_field(const crypto::SchemeRegistry& registry, const TrustStore& store,
                   Application& application, const std::string& field_name);

} // namespace itp::security

#endif // ITP_SECURITY_HPP
