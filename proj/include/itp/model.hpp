// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_MODEL_HPP
#define ITP_MODEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "itp/encoding.hpp"

// Object model for ITP 1.0 documents. A <message> routes one or more
// <application> forms between trustcenter components; each application
// carries named profile fields plus enveloped signature blocks. All values
// are immutable after construction: mutators return modified copies, so
// instances are safe to share across threads.

namespace itp {

inline constexpr const char* kProtocolVersion = "1.0";

// Unique id text. Message ids and application ids live in separate
// uniqueness namespaces; the replay store enforces uniqueness, not the type.
struct Identifier {
    std::string value;

    friend bool operator==(const Identifier&, const Identifier&) = default;
};

// A component address: an IP address literal or a symbolic name known
// inside the trustcenter.
struct ComponentName {
    std::string value;

    friend bool operator==(const ComponentName&, const ComponentName&) = default;
};

// A field value confidentiality-protected for one recipient. The content is
// encrypted under a fresh content key; the content key is wrapped to the
// recipient's public key.
struct EncryptedField {
    std::string algorithm_id;
    std::string recipient_key_id;
    std::string ciphertext_b64;
    std::string wrapped_key_b64;

    friend bool operator==(const EncryptedField&, const EncryptedField&) = default;
};

using FieldValue = std::variant<std::string, EncryptedField>;

struct ProfileField {
    std::string name;  // must match [A-Za-z][A-Za-z0-9]*
    FieldValue value;

    bool encrypted() const { return std::holds_alternative<EncryptedField>(value); }

    friend bool operator==(const ProfileField&, const ProfileField&) = default;
};

// What a signature covers: the whole enclosing structure minus its signature
// blocks (enveloped semantics), or an ordered list of named fields.
struct SignatureScope {
    bool all = true;
    std::vector<std::string> fields;  // used when all == false

    static SignatureScope whole() { return {true, {}}; }
    static SignatureScope of_fields(std::vector<std::string> names) {
        return {false, std::move(names)};
    }

    friend bool operator==(const SignatureScope&, const SignatureScope&) = default;
};

struct SignatureBlock {
    std::string signer_subject_dn;
    std::string key_id;
    std::string algorithm_id;
    std::string digest_algorithm_id;
    SignatureScope scope;
    std::string created_at;  // ISO-8601 UTC, informational
    std::string signature_b64;

    friend bool operator==(const SignatureBlock&, const SignatureBlock&) = default;
};

// A service request form. The id stays identical for the lifetime of the
// application across every message that carries it.
struct Application {
    Identifier id;
    std::string profile_id;
    std::vector<ProfileField> fields;
    std::vector<SignatureBlock> signatures;

    friend bool operator==(const Application&, const Application&) = default;
};

// Root of every ITP document.
struct Message {
    std::string version = kProtocolVersion;
    Identifier id;
    ComponentName sender;
    ComponentName recipient;
    std::vector<Application> applications;  // at least one
    std::vector<SignatureBlock> signatures;

    friend bool operator==(const Message&, const Message&) = default;
};

bool is_valid_identifier(const std::string& value);      // non-empty, no whitespace or <>&"'
bool is_valid_component_name(const std::string& value);  // non-empty printable
bool is_valid_field_name(const std::string& name);       // [A-Za-z][A-Za-z0-9]*

// Identifier text is the compact UTC clock reading followed by a 6-hex-digit
// entropy suffix, e.g. 20040202164445a3f90b. Distinct (clock, entropy) pairs
// give distinct identifiers. entropy must provide at least 3 bytes.
Identifier generate_id(UtcTime clock, std::span<const std::uint8_t> entropy);

// Convenience source of fresh identifiers. The suffix starts at a random
// 24-bit value and increments per call, so a single process cannot collide
// with itself within the suffix period.
class IdGenerator {
public:
    IdGenerator();
    explicit IdGenerator(std::uint32_t suffix_seed);

    Identifier next();
    Identifier next(UtcTime clock);

private:
    std::uint32_t counter_;
};

// Message with version 1.0, the given id and parts, and no signatures.
// Throws EmptyMessage / DuplicateApplicationId / InvalidIdentifier.
Message build_message(Identifier id, ComponentName sender, ComponentName recipient,
                      std::vector<Application> apps);

// Returns a copy with the field set to the given value, replacing any prior
// value in place (append if new). Signature blocks are retained untouched;
// their validity is re-evaluated by verification. Throws InvalidFieldName.
Application set_field(const Application& app, const std::string& name, FieldValue value);

// Returns a copy without the field. Removing an absent field is a no-op.
// Prior signatures whose scope referenced the field become advisory at
// verification time.
Application remove_field(const Application& app, const std::string& name);

std::optional<FieldValue> get_field(const Application& app, const std::string& name);

// Plaintext value or nullopt when absent or encrypted.
std::optional<std::string> get_text_field(const Application& app, const std::string& name);

bool has_field(const Application& app, const std::string& name);

} // namespace itp

#endif // ITP_MODEL_HPP
