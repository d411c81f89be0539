// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_CRYPTO_HPP
#define ITP_CRYPTO_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "itp/encoding.hpp"

// Pluggable cryptography. Every signing, wrapping and digest step goes
// through an algorithm id resolved against a SchemeRegistry, so installing
// a different scheme set is a configuration change. The default registry
// ships ed25519 and ecdsa-p256 signatures, x25519-aes256gcm hybrid
// encryption and sha256/sha512 digests, all backed by OpenSSL.

namespace itp::crypto {

using ByteView = std::span<const std::uint8_t>;

Bytes random_bytes(std::size_t count);

Bytes digest(const std::string& digest_id, ByteView data);  // throws UnsupportedAlgorithm
Bytes digest(const std::string& digest_id, const std::string& data);
std::string sha256_hex(const std::string& data);

struct KeyMaterial {
    Bytes public_key;
    Bytes private_key;
};

class SignatureScheme {
public:
    virtual ~SignatureScheme() = default;
    virtual const std::string& id() const = 0;
    virtual KeyMaterial generate() const = 0;
    virtual Bytes sign(ByteView private_key, ByteView data) const = 0;
    virtual bool verify(ByteView public_key, ByteView data, ByteView signature) const = 0;
};

struct HybridCiphertext {
    Bytes ciphertext;   // nonce || body || tag
    Bytes wrapped_key;  // ephemeral public key || nonce || wrapped content key
};

// Hybrid encryption: a fresh content key encrypts the value, the content key
// is wrapped to the recipient's public key. Two encryptions of one value
// never share bytes.
class EncryptionScheme {
public:
    virtual ~EncryptionScheme() = default;
    virtual const std::string& id() const = 0;
    virtual KeyMaterial generate() const = 0;
    virtual HybridCiphertext encrypt(ByteView recipient_public, ByteView plaintext) const = 0;
    // throws DecryptionFailure on wrong key or tampered input
    virtual Bytes decrypt(ByteView recipient_private, const HybridCiphertext& input) const = 0;
};

class SchemeRegistry {
public:
    static SchemeRegistry with_defaults();

    void add_signature(std::unique_ptr<SignatureScheme> scheme);
    void add_encryption(std::unique_ptr<EncryptionScheme> scheme);

    const SignatureScheme& signature(const std::string& algorithm_id) const;   // throws UnsupportedAlgorithm
    const EncryptionScheme& encryption(const std::string& algorithm_id) const; // throws UnsupportedAlgorithm
    const SignatureScheme* find_signature(const std::string& algorithm_id) const;
    const EncryptionScheme* find_encryption(const std::string& algorithm_id) const;

    const std::string& default_signature_id() const { return default_signature_; }
    const std::string& default_encryption_id() const { return default_encryption_; }
    const std::string& default_digest_id() const { return default_digest_; }

private:
    std::vector<std::unique_ptr<SignatureScheme>> signatures_;
    std::vector<std::unique_ptr<EncryptionScheme>> encryptions_;
    std::string default_signature_ = "ed25519";
    std::string default_encryption_ = "x25519-aes256gcm";
    std::string default_digest_ = "sha256";
};

} // namespace itp::crypto

#endif // ITP_CRYPTO_HPP
