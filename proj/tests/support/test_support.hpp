// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_TESTS_SUPPORT_TEST_SUPPORT_HPP
#define ITP_TESTS_SUPPORT_TEST_SUPPORT_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "itp/encoding.hpp"
#include "itp/model.hpp"

// Shared test plumbing: scratch directories, file helpers and a seeded
// generator of schema-valid random messages for property tests.

namespace itp::testing {

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        const auto base = std::filesystem::temp_directory_path();
        for (int attempt = 0; attempt < 100; ++attempt) {
            std::ostringstream name;
            name << "itp-test-" << std::hex << rd() << rd();
            std::filesystem::path candidate = base / name.str();
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create scratch directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// Deterministic source of schema-valid models. The same seed reproduces the
// same sequence, so failures are replayable.
class ModelGen {
public:
    explicit ModelGen(std::uint64_t seed) : rng_(seed) {}

    std::mt19937_64& rng() { return rng_; }

    int between(int lo, int hi) {  // inclusive bounds
        return std::uniform_int_distribution<int>(lo, hi)(rng_);
    }

    bool chance(int percent) { return between(1, 100) <= percent; }

    std::string identifier() {
        static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789.-_:";
        const int len = between(6, 20);
        std::string out;
        for (int i = 0; i < len; ++i) out.push_back(alphabet[between(0, 39)]);
        return out;
    }

    std::string component_name() {
        static const std::vector<std::string> stock = {
            "Registration", "Certification", "Directory Services",
            "10.1.2.3",     "backup-ca",     "Key Archive",
        };
        if (chance(50)) return stock[static_cast<std::size_t>(between(0, 5))];
        std::string out = "unit-" + identifier();
        if (chance(30)) out += " " + identifier();
        return out;
    }

    std::string field_name(int index) {
        static const std::vector<std::string> stock = {
            "clientName", "subjectDN",        "revocationPassword",
            "email",      "publiclyAvailable", "encCertificate",
        };
        if (index < 6 && chance(60)) return stock[static_cast<std::size_t>(index)];
        std::string out = "f";
        const int len = between(1, 10);
        for (int i = 0; i < len; ++i) {
            static const char alphabet[] =
                "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
            out.push_back(alphabet[between(0, 61)]);
        }
        out += std::to_string(index);
        return out;
    }

    // Deliberately hostile plaintext: markup characters, quotes, unicode,
    // tabs, newlines, blanks — everything the escaping layer must survive.
    std::string text_value() {
        static const std::vector<std::string> stock = {
            "",
            " ",
            "true",
            "Host A",
            "CN=Alice,OU=OrgUnitName,O=OrgName,C=DE",
            "a<b&c>d\"e'f",
            "]]>",
            "&amp; literal",
            "tab\tand\nnewline",
            "Gr\xC3\xB6\xC3\x9F" "e \xCF\x80",
            "7c4a8d09ca3762af61e59520943dc26494f8941b",
            "alice@orgunitname.orgname.de",
        };
        if (chance(70)) return stock[static_cast<std::size_t>(between(0, 11))];
        std::string out;
        const int len = between(1, 60);
        for (int i = 0; i < len; ++i) {
            const int c = between(0x20, 0x7E);
            out.push_back(static_cast<char>(c));
        }
        return out;
    }

    Bytes blob(int max_len) {
        Bytes out(static_cast<std::size_t>(between(1, max_len)));
        for (auto& b : out) b = static_cast<std::uint8_t>(between(0, 255));
        return out;
    }

    std::string subject_dn() {
        return "CN=" + identifier() + ",OU=Unit,O=Org,C=DE";
    }

    std::string iso_timestamp() {
        return format_iso8601_utc(make_utc(2004 + between(0, 20), between(1, 12), between(1, 28),
                                           between(0, 23), between(0, 59), between(0, 59)));
    }

    EncryptedField encrypted_field() {
        EncryptedField enc;
        enc.algorithm_id = "x25519-aes256gcm";
        enc.recipient_key_id = hex_encode(blob(8));
        enc.ciphertext_b64 = base64_encode(blob(48));
        enc.wrapped_key_b64 = base64_encode(blob(72));
        return enc;
    }

    SignatureBlock signature_block(const std::vector<std::string>& field_names) {
        SignatureBlock block;
        block.signer_subject_dn = subject_dn();
        block.key_id = hex_encode(blob(8));
        block.algorithm_id = chance(50) ? "ed25519" : "ecdsa-p256";
        block.digest_algorithm_id = "sha256";
        if (field_names.empty() || chance(50)) {
            block.scope = SignatureScope::whole();
        } else {
            std::vector<std::string> picked;
            for (const std::string& name : field_names) {
                if (chance(50)) picked.push_back(name);
            }
            if (picked.empty()) picked.push_back(field_names.front());
            block.scope = SignatureScope::of_fields(std::move(picked));
        }
        block.created_at = iso_timestamp();
        block.signature_b64 = base64_encode(blob(64));
        return block;
    }

    Application application() {
        Application app;
        app.id.value = identifier();
        app.profile_id = chance(50) ? "MultiCert" : "profile-" + identifier();
        const int field_count = between(0, 6);
        std::vector<std::string> names;
        for (int i = 0; i < field_count; ++i) {
            std::string name = field_name(i);
            bool duplicate = false;
            for (const std::string& seen : names) {
                if (seen == name) duplicate = true;
            }
            if (duplicate) continue;
            names.push_back(name);
            ProfileField field;
            field.name = name;
            if (chance(15)) {
                field.value = encrypted_field();
            } else {
                field.value = text_value();
            }
            app.fields.push_back(std::move(field));
        }
        const int sig_count = between(0, 3);
        for (int i = 0; i < sig_count; ++i) app.signatures.push_back(signature_block(names));
        return app;
    }

    Message message() {
        Message msg;
        msg.id.value = identifier();
        msg.sender.value = component_name();
        msg.recipient.value = component_name();
        const int app_count = between(1, 3);
        for (int i = 0; i < app_count; ++i) {
            Application app = application();
            bool duplicate = true;
            while (duplicate) {
                duplicate = false;
                for (const Application& seen : msg.applications) {
                    if (seen.id == app.id) duplicate = true;
                }
                if (duplicate) app.id.value = identifier();
            }
            msg.applications.push_back(std::move(app));
        }
        const int sig_count = between(0, 2);
        for (int i = 0; i < sig_count; ++i) {
            SignatureBlock block = signature_block({});
            block.scope = SignatureScope::whole();
            msg.signatures.push_back(std::move(block));
        }
        return msg;
    }

private:
    std::mt19937_64 rng_;
};

} // namespace itp::testing

#endif // ITP_TESTS_SUPPORT_TEST_SUPPORT_HPP
