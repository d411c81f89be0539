// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#include "itp/crypto.hpp"

#include <cstring>

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/rand.h>
#include <openssl/sha.h>
#include <openssl/x509.h>

#include "itp/errors.hpp"

namespace itp::crypto {

namespace {

// ---------------------------------------------------------------------------
// OpenSSL plumbing
// ---------------------------------------------------------------------------

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxDeleter {
    void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

[[noreturn]] void fail(const std::string& what) {
    ERR_clear_error();
    throw ItpError(Errc::CryptoFailure, what);
}

PkeyPtr raw_private(int type, ByteView key) {
    PkeyPtr p(EVP_PKEY_new_raw_private_key(type, nullptr, key.data(), key.size()));
    if (!p) fail("cannot load raw private key");
    return p;
}

PkeyPtr raw_public(int type, ByteView key) {
    PkeyPtr p(EVP_PKEY_new_raw_public_key(type, nullptr, key.data(), key.size()));
    if (!p) fail("cannot load raw public key");
    return p;
}

KeyMaterial raw_generate(int type) {
    PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(type, nullptr));
    if (!ctx || EVP_PKEY_keygen_init(ctx.get()) <= 0) fail("keygen init");
    EVP_PKEY* out = nullptr;
    if (EVP_PKEY_keygen(ctx.get(), &out) <= 0) fail("keygen");
    PkeyPtr pkey(out);

    KeyMaterial material;
    std::size_t len = 0;
    if (EVP_PKEY_get_raw_public_key(pkey.get(), nullptr, &len) <= 0) fail("raw public size");
    material.public_key.resize(len);
    if (EVP_PKEY_get_raw_public_key(pkey.get(), material.public_key.data(), &len) <= 0) {
        fail("raw public export");
    }
    len = 0;
    if (EVP_PKEY_get_raw_private_key(pkey.get(), nullptr, &len) <= 0) fail("raw private size");
    material.private_key.resize(len);
    if (EVP_PKEY_get_raw_private_key(pkey.get(), material.private_key.data(), &len) <= 0) {
        fail("raw private export");
    }
    return material;
}

// ---------------------------------------------------------------------------
// ed25519
// ---------------------------------------------------------------------------

class Ed25519Scheme final : public SignatureScheme {
public:
    const std::string& id() const override { return id_; }

    KeyMaterial generate() const override { return raw_generate(EVP_PKEY_ED25519); }

    Bytes sign(ByteView private_key, ByteView data) const override {
        PkeyPtr pkey = raw_private(EVP_PKEY_ED25519, private_key);
        MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) <= 0) {
            fail("ed25519 sign init");
        }
        std::size_t sig_len = 0;
        if (EVP_DigestSign(ctx.get(), nullptr, &sig_len, data.data(), data.size()) <= 0) {
            fail("ed25519 sign size");
        }
        Bytes signature(sig_len);
        if (EVP_DigestSign(ctx.get(), signature.data(), &sig_len, data.data(), data.size()) <= 0) {
            fail("ed25519 sign");
        }
        signature.resize(sig_len);
        return signature;
    }

    bool verify(ByteView public_key, ByteView data, ByteView signature) const override {
        PkeyPtr pkey(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                                 public_key.data(), public_key.size()));
        if (!pkey) { ERR_clear_error(); return false; }
        MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) <= 0) {
            ERR_clear_error();
            return false;
        }
        const int rc = EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                                        data.data(), data.size());
        ERR_clear_error();
        return rc == 1;
    }

private:
    std::string id_ = "ed25519";
};

// ---------------------------------------------------------------------------
// ecdsa-p256 (keys travel as DER: SPKI public, PKCS#8 private)
// ---------------------------------------------------------------------------

class EcdsaP256Scheme final : public SignatureScheme {
public:
    const std::string& id() const override { return id_; }

    KeyMaterial generate() const override {
        PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_EC, nullptr));
        if (!ctx || EVP_PKEY_keygen_init(ctx.get()) <= 0) fail("p256 keygen init");
        if (EVP_PKEY_CTX_set_ec_paramgen_curve_nid(ctx.get(), NID_X9_62_prime256v1) <= 0) {
            fail("p256 curve");
        }
        EVP_PKEY* out = nullptr;
        if (EVP_PKEY_keygen(ctx.get(), &out) <= 0) fail("p256 keygen");
        PkeyPtr pkey(out);

        KeyMaterial material;
        material.public_key = encode_public(pkey.get());
        material.private_key = encode_private(pkey.get());
        return material;
    }

    Bytes sign(ByteView private_key, ByteView data) const override {
        PkeyPtr pkey = decode_private(private_key);
        MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, EVP_sha256(), nullptr, pkey.get()) <= 0) {
            fail("p256 sign init");
        }
        std::size_t sig_len = 0;
        if (EVP_DigestSign(ctx.get(), nullptr, &sig_len, data.data(), data.size()) <= 0) {
            fail("p256 sign size");
        }
        Bytes signature(sig_len);
        if (EVP_DigestSign(ctx.get(), signature.data(), &sig_len, data.data(), data.size()) <= 0) {
            fail("p256 sign");
        }
        signature.resize(sig_len);
        return signature;
    }

    bool verify(ByteView public_key, ByteView data, ByteView signature) const override {
        PkeyPtr pkey = decode_public(public_key);
        if (!pkey) return false;
        MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr, pkey.get()) <= 0) {
            ERR_clear_error();
            return false;
        }
        const int rc = EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                                        data.data(), data.size());
        ERR_clear_error();
        return rc == 1;
    }

private:
    static Bytes encode_public(EVP_PKEY* pkey) {
        unsigned char* der = nullptr;
        const int len = i2d_PUBKEY(pkey, &der);
        if (len <= 0) fail("p256 public encode");
        Bytes out(der, der + len);
        OPENSSL_free(der);
        return out;
    }

    static Bytes encode_private(EVP_PKEY* pkey) {
        PKCS8_PRIV_KEY_INFO* info = EVP_PKEY2PKCS8(pkey);
        if (info == nullptr) fail("p256 private encode");
        unsigned char* der = nullptr;
        const int len = i2d_PKCS8_PRIV_KEY_INFO(info, &der);
        PKCS8_PRIV_KEY_INFO_free(info);
        if (len <= 0) fail("p256 private encode");
        Bytes out(der, der + len);
        OPENSSL_free(der);
        return out;
    }

    static PkeyPtr decode_public(ByteView der) {
        const unsigned char* p = der.data();
        PkeyPtr pkey(d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size())));
        if (!pkey) ERR_clear_error();
        return pkey;
    }

    static PkeyPtr decode_private(ByteView der) {
        const unsigned char* p = der.data();
        PKCS8_PRIV_KEY_INFO* info =
            d2i_PKCS8_PRIV_KEY_INFO(nullptr, &p, static_cast<long>(der.size()));
        if (info == nullptr) fail("p256 private decode");
        PkeyPtr pkey(EVP_PKCS82PKEY(info));
        PKCS8_PRIV_KEY_INFO_free(info);
        if (!pkey) fail("p256 private decode");
        return pkey;
    }

    std::string id_ = "ecdsa-p256";
};

// ---------------------------------------------------------------------------
// x25519-aes256gcm hybrid
// ---------------------------------------------------------------------------

constexpr std::size_t kX25519KeyLen = 32;
constexpr std::size_t kNonceLen = 12;
constexpr std::size_t kTagLen = 16;
constexpr std::size_t kContentKeyLen = 32;
constexpr char kKdfInfo[] = "itp-x25519-aes256gcm-v1";

Bytes x25519_shared(ByteView private_key, ByteView peer_public) {
    PkeyPtr priv = raw_private(EVP_PKEY_X25519, private_key);
    PkeyPtr peer = raw_public(EVP_PKEY_X25519, peer_public);
    PkeyCtxPtr ctx(EVP_PKEY_CTX_new(priv.get(), nullptr));
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) <= 0 ||
        EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) <= 0) {
        fail("x25519 derive init");
    }
    std::size_t len = 0;
    if (EVP_PKEY_derive(ctx.get(), nullptr, &len) <= 0) fail("x25519 derive size");
    Bytes shared(len);
    if (EVP_PKEY_derive(ctx.get(), shared.data(), &len) <= 0) fail("x25519 derive");
    shared.resize(len);
    return shared;
}

Bytes hkdf_sha256(ByteView secret, ByteView salt, std::size_t out_len) {
    PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) <= 0 ||
        EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) <= 0 ||
        EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), salt.data(), static_cast<int>(salt.size())) <= 0 ||
        EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), secret.data(), static_cast<int>(secret.size())) <= 0 ||
        EVP_PKEY_CTX_add1_hkdf_info(ctx.get(),
                                    reinterpret_cast<const unsigned char*>(kKdfInfo),
                                    static_cast<int>(sizeof(kKdfInfo) - 1)) <= 0) {
        fail("hkdf init");
    }
    Bytes out(out_len);
    std::size_t len = out_len;
    if (EVP_PKEY_derive(ctx.get(), out.data(), &len) <= 0 || len != out_len) fail("hkdf derive");
    return out;
}

// nonce || body || tag
Bytes aes_gcm_seal(ByteView key, ByteView plaintext) {
    Bytes nonce = random_bytes(kNonceLen);
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceLen, nullptr) != 1 ||
        EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) {
        fail("gcm encrypt init");
    }
    Bytes out(kNonceLen + plaintext.size() + kTagLen);
    std::memcpy(out.data(), nonce.data(), kNonceLen);
    int len = 0;
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.get(), out.data() + kNonceLen, &len,
                          plaintext.data(), static_cast<int>(plaintext.size())) != 1) {
        fail("gcm encrypt");
    }
    int final_len = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kNonceLen + len, &final_len) != 1) {
        fail("gcm encrypt final");
    }
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagLen,
                            out.data() + kNonceLen + len + final_len) != 1) {
        fail("gcm tag");
    }
    return out;
}

Bytes aes_gcm_open(ByteView key, ByteView sealed) {
    if (sealed.size() < kNonceLen + kTagLen) {
        throw ItpError(Errc::DecryptionFailure, "ciphertext too short");
    }
    const std::size_t body_len = sealed.size() - kNonceLen - kTagLen;
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceLen, nullptr) != 1 ||
        EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), sealed.data()) != 1) {
        fail("gcm decrypt init");
    }
    Bytes out(body_len);
    int len = 0;
    if (body_len > 0 &&
        EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data() + kNonceLen,
                          static_cast<int>(body_len)) != 1) {
        ERR_clear_error();
        throw ItpError(Errc::DecryptionFailure, "ciphertext rejected");
    }
    Bytes tag(sealed.end() - kTagLen, sealed.end());
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagLen, tag.data()) != 1) {
        fail("gcm set tag");
    }
    int final_len = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &final_len) != 1) {
        ERR_clear_error();
        throw ItpError(Errc::DecryptionFailure, "authentication tag mismatch");
    }
    out.resize(static_cast<std::size_t>(len + final_len));
    return out;
}

class X25519AesGcmScheme final : public EncryptionScheme {
public:
    const std::string& id() const override { return id_; }

    KeyMaterial generate() const override { return raw_generate(EVP_PKEY_X25519); }

    HybridCiphertext encrypt(ByteView recipient_public, ByteView plaintext) const override {
        if (recipient_public.size() != kX25519KeyLen) {
            throw ItpError(Errc::CryptoFailure, "recipient key must be 32 bytes");
        }
        const KeyMaterial ephemeral = raw_generate(EVP_PKEY_X25519);
        const Bytes shared = x25519_shared(ephemeral.private_key, recipient_public);

        // Bind the wrap key to both public halves of the exchange.
        Bytes salt(ephemeral.public_key);
        salt.insert(salt.end(), recipient_public.begin(), recipient_public.end());
        const Bytes wrap_key = hkdf_sha256(shared, salt, kContentKeyLen);

        const Bytes content_key = random_bytes(kContentKeyLen);
        HybridCiphertext out;
        out.ciphertext = aes_gcm_seal(content_key, plaintext);
        const Bytes wrapped = aes_gcm_seal(wrap_key, content_key);
        out.wrapped_key = ephemeral.public_key;
        out.wrapped_key.insert(out.wrapped_key.end(), wrapped.begin(), wrapped.end());
        return out;
    }

    Bytes decrypt(ByteView recipient_private, const HybridCiphertext& input) const override {
        if (recipient_private.size() != kX25519KeyLen) {
            throw ItpError(Errc::DecryptionFailure, "private key must be 32 bytes");
        }
        if (input.wrapped_key.size() < kX25519KeyLen + kNonceLen + kTagLen) {
            throw ItpError(Errc::DecryptionFailure, "wrapped key too short");
        }
        const ByteView ephemeral_public(input.wrapped_key.data(), kX25519KeyLen);
        const ByteView wrapped(input.wrapped_key.data() + kX25519KeyLen,
                               input.wrapped_key.size() - kX25519KeyLen);
        Bytes shared;
        try {
            shared = x25519_shared(recipient_private, ephemeral_public);
        } catch (const ItpError&) {
            throw ItpError(Errc::DecryptionFailure, "key agreement failed");
        }

        Bytes recipient_public;
        {
            PkeyPtr priv = raw_private(EVP_PKEY_X25519, recipient_private);
            std::size_t len = 0;
            if (EVP_PKEY_get_raw_public_key(priv.get(), nullptr, &len) <= 0) fail("x25519 public");
            recipient_public.resize(len);
            if (EVP_PKEY_get_raw_public_key(priv.get(), recipient_public.data(), &len) <= 0) {
                fail("x25519 public");
            }
        }
        Bytes salt(ephemeral_public.begin(), ephemeral_public.end());
        salt.insert(salt.end(), recipient_public.begin(), recipient_public.end());
        const Bytes wrap_key = hkdf_sha256(shared, salt, kContentKeyLen);

        const Bytes content_key = aes_gcm_open(wrap_key, wrapped);
        if (content_key.size() != kContentKeyLen) {
            throw ItpError(Errc::DecryptionFailure, "content key length mismatch");
        }
        return aes_gcm_open(content_key, input.ciphertext);
    }

private:
    std::string id_ = "x25519-aes256gcm";
};

} // namespace

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

Bytes random_bytes(std::size_t count) {
    Bytes out(count);
    if (count > 0 && RAND_bytes(out.data(), static_cast<int>(count)) != 1) {
        fail("random generator unavailable");
    }
    return out;
}

Bytes digest(const std::string& digest_id, ByteView data) {
    const EVP_MD* md = nullptr;
    if (digest_id == "sha256") {
        md = EVP_sha256();
    } else if (digest_id == "sha512") {
        md = EVP_sha512();
    } else {
        throw ItpError(Errc::UnsupportedAlgorithm, "unknown digest: " + digest_id);
    }
    Bytes out(static_cast<std::size_t>(EVP_MD_size(md)));
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1) {
        fail("digest");
    }
    out.resize(len);
    return out;
}

Bytes digest(const std::string& digest_id, const std::string& data) {
    return digest(digest_id,
                  ByteView(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string sha256_hex(const std::string& data) {
    return hex_encode(digest("sha256", data));
}

// ---------------------------------------------------------------------------
// SchemeRegistry
// ---------------------------------------------------------------------------

SchemeRegistry SchemeRegistry::with_defaults() {
    SchemeRegistry registry;
    registry.add_signature(std::make_unique<Ed25519Scheme>());
    registry.add_signature(std::make_unique<EcdsaP256Scheme>());
    registry.add_encryption(std::make_unique<X25519AesGcmScheme>());
    return registry;
}

void SchemeRegistry::add_signature(std::unique_ptr<SignatureScheme> scheme) {
    signatures_.push_back(std::move(scheme));
}

void SchemeRegistry::add_encryption(std::unique_ptr<EncryptionScheme> scheme) {
    encryptions_.push_back(std::move(scheme));
}

const SignatureScheme* SchemeRegistry::find_signature(const std::string& algorithm_id) const {
    for (const auto& scheme : signatures_) {
        if (scheme->id() == algorithm_id) return scheme.get();
    }
    return nullptr;
}

const EncryptionScheme* SchemeRegistry::find_encryption(const std::string& algorithm_id) const {
    for (const auto& scheme : encryptions_) {
        if (scheme->id() == algorithm_id) return scheme.get();
    }
    return nullptr;
}

const SignatureScheme& SchemeRegistry::signature(const std::string& algorithm_id) const {
    const SignatureScheme* scheme = find_signature(algorithm_id);
    if (scheme == nullptr) {
        throw ItpError(Errc::UnsupportedAlgorithm, "unknown signature scheme: " + algorithm_id);
    }
    return *scheme;
}

const EncryptionScheme& SchemeRegistry::encryption(const std::string& algorithm_id) const {
    const EncryptionScheme* scheme = find_encryption(algorithm_id);
    if (scheme == nullptr) {
        throw ItpError(Errc::UnsupportedAlgorithm, "unknown encryption scheme: " + algorithm_id);
    }
    return *scheme;
}

} // namespace itp::crypto
