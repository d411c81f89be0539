// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#include "itp/security.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "itp/codec.hpp"
#include "itp/errors.hpp"

namespace itp::security {

namespace {

crypto::ByteView view(const std::string& text) {
    return crypto::ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

std::string trim(const std::string& text) {
    std::size_t begin = text.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    std::size_t end = text.find_last_not_of(" \t");
    return text.substr(begin, end - begin + 1);
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

// ---------------------------------------------------------------------------
// Keys
// ---------------------------------------------------------------------------

std::string to_string(KeyUsage usage) {
    switch (usage) {
        case KeyUsage::OperationalSigning: return "operational-signing";
        case KeyUsage::CaSigning: return "ca-signing";
        case KeyUsage::Encryption: return "encryption";
    }
    return "operational-signing";
}

KeyUsage key_usage_from_string(const std::string& text) {
    if (text == "operational-signing") return KeyUsage::OperationalSigning;
    if (text == "ca-signing") return KeyUsage::CaSigning;
    if (text == "encryption") return KeyUsage::Encryption;
    throw ItpError(Errc::MalformedDocument, "unknown key usage: " + text);
}

KeyPairRecord KeyPairRecord::public_half() const {
    KeyPairRecord copy = *this;
    copy.private_key.clear();
    return copy;
}

std::string derive_key_id(crypto::ByteView public_key) {
    return hex_encode(crypto::digest("sha256", public_key)).substr(0, 16);
}

KeyPairRecord keygen(const crypto::SchemeRegistry& registry, const std::string& algorithm_id,
                     KeyUsage usage, const std::string& owner_subject_dn) {
    crypto::KeyMaterial material;
    if (usage == KeyUsage::Encryption) {
        const auto* scheme = registry.find_encryption(algorithm_id);
        if (scheme == nullptr) {
            if (registry.find_signature(algorithm_id) != nullptr) {
                throw ItpError(Errc::UsageViolation,
                               algorithm_id + " is a signature scheme, not an encryption scheme");
            }
            throw ItpError(Errc::UnsupportedAlgorithm, "unknown encryption scheme: " + algorithm_id);
        }
        material = scheme->generate();
    } else {
        const auto* scheme = registry.find_signature(algorithm_id);
        if (scheme == nullptr) {
            if (registry.find_encryption(algorithm_id) != nullptr) {
                throw ItpError(Errc::UsageViolation,
                               algorithm_id + " is an encryption scheme, not a signature scheme");
            }
            throw ItpError(Errc::UnsupportedAlgorithm, "unknown signature scheme: " + algorithm_id);
        }
        material = scheme->generate();
    }
    KeyPairRecord record;
    record.key_id = derive_key_id(material.public_key);
    record.algorithm_id = algorithm_id;
    record.usage = usage;
    record.owner_subject_dn = owner_subject_dn;
    record.public_key = std::move(material.public_key);
    record.private_key = std::move(material.private_key);
    return record;
}

// ---------------------------------------------------------------------------
// TrustStore
// ---------------------------------------------------------------------------

void TrustStore::add(KeyPairRecord record) {
    for (auto& existing : records_) {
        if (existing.key_id != record.key_id) continue;
        if (existing.algorithm_id != record.algorithm_id ||
            existing.usage != record.usage ||
            existing.owner_subject_dn != record.owner_subject_dn ||
            existing.public_key != record.public_key) {
            throw ItpError(Errc::CredentialRejected,
                           "conflicting record for key " + record.key_id);
        }
        if (existing.private_key.empty()) existing.private_key = std::move(record.private_key);
        return;
    }
    records_.push_back(std::move(record));
}

void TrustStore::absorb(const TrustStore& other) {
    for (const auto& record : other.records_) add(record);
}

const KeyPairRecord* TrustStore::find(const std::string& key_id) const {
    for (const auto& record : records_) {
        if (record.key_id == key_id) return &record;
    }
    return nullptr;
}

const KeyPairRecord& TrustStore::require(const std::string& key_id) const {
    const KeyPairRecord* record = find(key_id);
    if (record == nullptr) {
        throw ItpError(Errc::CredentialRejected, "no key with id " + key_id);
    }
    return *record;
}

const KeyPairRecord* TrustStore::find_by_owner(const std::string& owner_subject_dn,
                                               KeyUsage usage) const {
    for (const auto& record : records_) {
        if (record.owner_subject_dn == owner_subject_dn && record.usage == usage) return &record;
    }
    return nullptr;
}

std::string TrustStore::serialize() const {
    std::ostringstream out;
    out << "# itp keystore v1\n";
    out << "# key-id|algorithm|usage|owner|public|private\n";
    for (const auto& record : records_) {
        out << record.key_id << '|' << record.algorithm_id << '|' << to_string(record.usage)
            << '|' << pipe_escape(record.owner_subject_dn) << '|'
            << base64_encode(record.public_key) << '|';
        if (record.has_private()) out << base64_encode(record.private_key);
        out << '\n';
    }
    return out.str();
}

TrustStore TrustStore::deserialize(const std::string& text) {
    TrustStore store;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::vector<std::string> fields = split_pipes(stripped);
        if (fields.size() != 6) {
            throw ItpError(Errc::MalformedDocument,
                           "keystore line " + std::to_string(line_no) + ": expected 6 fields");
        }
        KeyPairRecord record;
        record.key_id = fields[0];
        record.algorithm_id = fields[1];
        record.usage = key_usage_from_string(fields[2]);
        record.owner_subject_dn = pipe_unescape(fields[3]);
        record.public_key = base64_decode(fields[4]);
        if (!fields[5].empty()) record.private_key = base64_decode(fields[5]);
        if (record.key_id.empty() || record.public_key.empty()) {
            throw ItpError(Errc::MalformedDocument,
                           "keystore line " + std::to_string(line_no) + ": incomplete record");
        }
        store.add(std::move(record));
    }
    return store;
}

void TrustStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ItpError(Errc::IoFailure, "cannot write " + path.string());
    out << serialize();
    if (!out.flush()) throw ItpError(Errc::IoFailure, "cannot write " + path.string());
}

TrustStore TrustStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ItpError(Errc::IoFailure, "cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return deserialize(buffer.str());
}

// ---------------------------------------------------------------------------
// Signing
// ---------------------------------------------------------------------------

namespace {

const KeyPairRecord& signing_record(const TrustStore& store, const std::string& key_id) {
    const KeyPairRecord& record = store.require(key_id);
    if (!record.has_private()) {
        throw ItpError(Errc::CredentialRejected, "no private key material for " + key_id);
    }
    if (record.usage != KeyUsage::OperationalSigning) {
        throw ItpError(Errc::UsageViolation,
                       "key " + key_id + " is not enabled for operational signing");
    }
    return record;
}

SignatureBlock make_block(const crypto::SchemeRegistry& registry, const KeyPairRecord& record,
                          const SignRequest& request, const std::string& canonical) {
    const auto& scheme = registry.signature(record.algorithm_id);
    const Bytes hashed = crypto::digest(request.digest_algorithm_id, canonical);
    const Bytes signature = scheme.sign(record.private_key, hashed);

    SignatureBlock block;
    block.signer_subject_dn = record.owner_subject_dn;
    block.key_id = record.key_id;
    block.algorithm_id = record.algorithm_id;
    block.digest_algorithm_id = request.digest_algorithm_id;
    block.scope = request.scope;
    block.created_at = format_iso8601_utc(request.created_at);
    block.signature_b64 = base64_encode(signature);
    return block;
}

} // namespace

SignatureBlock sign_application(const crypto::SchemeRegistry& registry, const TrustStore& store,
                                Application& application, const SignRequest& request) {
    const KeyPairRecord& record = signing_record(store, request.key_id);
    const std::string canonical = codec::canonicalize_scope(application, request.scope);
    SignatureBlock block = make_block(registry, record, request, canonical);
    application.signatures.push_back(block);
    return block;
}

SignatureBlock sign_message(const crypto::SchemeRegistry& registry, const TrustStore& store,
                            Message& message, const SignRequest& request) {
    if (!request.scope.all) {
        throw ItpError(Errc::InvalidModel, "message signatures cover the whole message");
    }
    const KeyPairRecord& record = signing_record(store, request.key_id);
    const std::string canonical = codec::canonicalize_message(message);
    SignatureBlock block = make_block(registry, record, request, canonical);
    message.signatures.push_back(block);
    return block;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

std::string to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::Valid: return "valid";
        case Verdict::Invalid: return "invalid";
        case Verdict::AdvisoryBroken: return "advisory-broken";
    }
    return "invalid";
}

std::size_t VerificationReport::count(Verdict verdict) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(),
                      [&](const VerificationEntry& e) { return e.verdict == verdict; }));
}

namespace {

// canonical_of() is deferred so a missing scoped field can downgrade the
// verdict to advisory instead of tripping key checks first.
template <typename CanonicalFn>
VerificationEntry check_block(const crypto::SchemeRegistry& registry, const TrustStore& store,
                              const SignatureBlock& block, const std::string& application_id,
                              CanonicalFn&& canonical_of) {
    VerificationEntry entry;
    entry.application_id = application_id;
    entry.signer_subject_dn = block.signer_subject_dn;
    entry.key_id = block.key_id;

    const KeyPairRecord* record = store.find(block.key_id);
    if (record == nullptr) {
        entry.verdict = Verdict::Invalid;
        entry.reason = "unknown key " + block.key_id;
        return entry;
    }
    if (record->owner_subject_dn != block.signer_subject_dn) {
        entry.verdict = Verdict::Invalid;
        entry.reason = "key " + block.key_id + " is not owned by the named signer";
        return entry;
    }
    if (record->usage != KeyUsage::OperationalSigning) {
        entry.verdict = Verdict::Invalid;
        entry.reason = "key " + block.key_id + " is not enabled for operational signing";
        return entry;
    }
    if (record->algorithm_id != block.algorithm_id) {
        entry.verdict = Verdict::Invalid;
        entry.reason = "algorithm mismatch for key " + block.key_id;
        return entry;
    }
    const auto* scheme = registry.find_signature(block.algorithm_id);
    if (scheme == nullptr) {
        entry.verdict = Verdict::Invalid;
        entry.reason = "unsupported signature scheme " + block.algorithm_id;
        return entry;
    }
    if (!block.scope.all && block.scope.fields.empty()) {
        entry.verdict = Verdict::Invalid;
        entry.reason = "empty field scope";
        return entry;
    }

    std::string canonical;
    try {
        canonical = canonical_of(block.scope);
    } catch (const ItpError& err) {
        if (err.code() == Errc::UnknownScopeField) {
            entry.verdict = Verdict::AdvisoryBroken;
            entry.reason = err.what();
            return entry;
        }
        throw;
    }

    Bytes hashed;
    try {
        hashed = crypto::digest(block.digest_algorithm_id, canonical);
    } catch (const ItpError&) {
        entry.verdict = Verdict::Invalid;
        entry.reason = "unsupported digest " + block.digest_algorithm_id;
        return entry;
    }

    Bytes signature;
    try {
        signature = base64_decode(block.signature_b64);
    } catch (const ItpError&) {
        entry.verdict = Verdict::Invalid;
        entry.reason = "signature value is not base64";
        return entry;
    }

    if (!scheme->verify(record->public_key, hashed, signature)) {
        entry.verdict = Verdict::Invalid;
        entry.reason = "signature mismatch";
        return entry;
    }
    entry.verdict = Verdict::Valid;
    return entry;
}

void finish(VerificationReport& report) {
    report.overall = std::none_of(
        report.entries.begin(), report.entries.end(),
        [](const VerificationEntry& e) { return e.verdict == Verdict::Invalid; });
}

} // namespace

VerificationReport verify_application(const crypto::SchemeRegistry& registry,
                                      const TrustStore& store, const Application& application) {
    VerificationReport report;
    for (const auto& block : application.signatures) {
        report.entries.push_back(check_block(
            registry, store, block, application.id.value,
            [&](const SignatureScope& scope) { return codec::canonicalize_scope(application, scope); }));
    }
    finish(report);
    return report;
}

VerificationReport verify_message(const crypto::SchemeRegistry& registry, const TrustStore& store,
                                  const Message& message) {
    VerificationReport report;
    for (const auto& block : message.signatures) {
        report.entries.push_back(check_block(
            registry, store, block, "",
            [&](const SignatureScope&) { return codec::canonicalize_message(message); }));
    }
    for (const auto& application : message.applications) {
        for (const auto& block : application.signatures) {
            report.entries.push_back(check_block(
                registry, store, block, application.id.value,
                [&](const SignatureScope& scope) {
                    return codec::canonicalize_scope(application, scope);
                }));
        }
    }
    finish(report);
    return report;
}

// ---------------------------------------------------------------------------
// Authorization
// ---------------------------------------------------------------------------

std::string extract_cn(const std::string& subject_dn) {
    std::size_t pos = 0;
    while (pos <= subject_dn.size()) {
        std::size_t comma = subject_dn.find(',', pos);
        if (comma == std::string::npos) comma = subject_dn.size();
        const std::string rdn = trim(subject_dn.substr(pos, comma - pos));
        if (rdn.rfind("CN=", 0) == 0) return rdn.substr(3);
        pos = comma + 1;
    }
    return "";
}

AuthorizationDecision authorize(const VerificationReport& report,
                                const AuthorizationPolicy& policy) {
    AuthorizationDecision decision;

    std::vector<std::string> valid_signers;
    for (const auto& entry : report.entries) {
        if (entry.verdict == Verdict::Valid) valid_signers.push_back(entry.signer_subject_dn);
    }

    for (const auto& required : policy.required_signers) {
        const auto matches = [&](const std::string& dn) {
            return dn == required || extract_cn(dn) == required;
        };
        if (std::any_of(valid_signers.begin(), valid_signers.end(), matches)) {
            decision.matched_signers.push_back(required);
        } else {
            decision.reason = "missing required signature from " + required;
            return decision;
        }
    }

    std::vector<std::string> operators;
    for (const auto& dn : valid_signers) {
        const bool eligible = std::find(policy.eligible_operators.begin(),
                                        policy.eligible_operators.end(),
                                        dn) != policy.eligible_operators.end();
        const bool seen = std::find(operators.begin(), operators.end(), dn) != operators.end();
        if (eligible && !seen) operators.push_back(dn);
    }
    if (operators.size() < policy.required_operators) {
        decision.reason = "requires " + std::to_string(policy.required_operators) +
                          " operator signatures, found " + std::to_string(operators.size());
        return decision;
    }
    decision.matched_operators = std::move(operators);
    decision.authorized = true;
    return decision;
}

void require_authorized(const VerificationReport& report, const AuthorizationPolicy& policy) {
    const AuthorizationDecision decision = authorize(report, policy);
    if (!decision.authorized) {
        throw ItpError(Errc::AuthorizationDenied, decision.reason);
    }
}

// ---------------------------------------------------------------------------
// Field encryption
// ---------------------------------------------------------------------------

void encrypt_field(const crypto::SchemeRegistry& registry, const TrustStore& store,
                   Application& application, const std::string& field_name,
                   const std::string& recipient_key_id) {
    const std::optional<FieldValue> value = get_field(application, field_name);
    if (!value.has_value()) {
        throw ItpError(Errc::FieldAbsent, "no field named " + field_name);
    }
    if (std::holds_alternative<EncryptedField>(*value)) {
        throw ItpError(Errc::AlreadyEncrypted, field_name + " is already encrypted");
    }
    const KeyPairRecord& record = store.require(recipient_key_id);
    if (record.usage != KeyUsage::Encryption) {
        throw ItpError(Errc::UsageViolation,
                       "key " + recipient_key_id + " is not an encryption key");
    }
    const auto& scheme = registry.encryption(record.algorithm_id);
    const std::string& plaintext = std::get<std::string>(*value);
    const crypto::HybridCiphertext sealed = scheme.encrypt(record.public_key, view(plaintext));

    EncryptedField cipher;
    cipher.algorithm_id = record.algorithm_id;
    cipher.recipient_key_id = recipient_key_id;
    cipher.ciphertext_b64 = base64_encode(sealed.ciphertext);
    cipher.wrapped_key_b64 = base64_encode(sealed.wrapped_key);
    application = set_field(application, field_name, cipher);
}

std::string decrypt_field_value(const crypto::SchemeRegistry& registry, const TrustStore& store,
                                const Application& application, const std::string& field_name) {
    const std::optional<FieldValue> value = get_field(application, field_name);
    if (!value.has_value()) {
        throw ItpError(Errc::FieldAbsent, "no field named " + field_name);
    }
    const EncryptedField* cipher = std::get_if<EncryptedField>(&*value);
    if (cipher == nullptr) {
        throw ItpError(Errc::NotEncrypted, field_name + " is not encrypted");
    }
    const KeyPairRecord& record = store.require(cipher->recipient_key_id);
    if (!record.has_private()) {
        throw ItpError(Errc::CredentialRejected,
                       "no private key material for " + cipher->recipient_key_id);
    }
    const auto& scheme = registry.encryption(cipher->algorithm_id);
    crypto::HybridCiphertext sealed;
    sealed.ciphertext = base64_decode(cipher->ciphertext_b64);
    sealed.wrapped_key = base64_decode(cipher->wrapped_key_b64);
    const Bytes plain = scheme.decrypt(record.private_key, sealed);
    return std::string(plain.begin(), plain.end());
}

void decrypt_field(const crypto::SchemeRegistry& registry, const TrustStore& store,
                   Application& application, const std::string& field_name) {
    const std::string plaintext = decrypt_field_value(registry, store, application, field_name);
    application = set_field(application, field_name, plaintext);
}

} // namespace itp::security
