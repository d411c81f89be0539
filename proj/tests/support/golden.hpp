// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_TESTS_SUPPORT_GOLDEN_HPP
#define ITP_TESTS_SUPPORT_GOLDEN_HPP

#include <string>
#include <vector>

#include "itp/model.hpp"

// The worked registration/certification/directory exchange, frozen verbatim.
// The canonical renderers below are written out by hand, independent of the
// codec, so serializer changes that would break the wire form fail loudly.

namespace itp::testing {

inline Application registration_example_application() {
    Application app;
    app.id.value = "20040202164832";
    app.profile_id = "MultiCert";
    app.fields = {
        {"clientName", std::string("Host A")},
        {"subjectDN", std::string("CN=Alice,OU=OrgUnitName,O=OrgName,C=DE")},
        {"revocationPassword", std::string("7c4a8 ... 8941c")},
        {"email", std::string("alice@orgunitname.orgname.de")},
        {"publiclyAvailable", std::string("true")},
    };
    return app;
}

inline Message registration_example_message() {
    Message msg;
    msg.id.value = "20040202164445";
    msg.sender.value = "Registration";
    msg.recipient.value = "Certification";
    msg.applications = {registration_example_application()};
    return msg;
}

inline Application directory_example_application() {
    Application app;
    app.id.value = "20040202164832";
    app.profile_id = "MultiCert";
    app.fields = {
        {"clientName", std::string("Host A")},
        {"encCertificate", std::string("Base64 encoded certificate")},
        {"signCertificate", std::string("Base64 encoded certificate")},
        {"nonRepCertificate", std::string("Base64 encoded certificate")},
        {"revocationPassword", std::string("7c4a8 ... 8941")},
        {"email", std::string("alice@orgunitname.orgname.de")},
        {"publiclyAvailable", std::string("true")},
    };
    return app;
}

inline Message directory_example_message() {
    Message msg;
    msg.id.value = "20040202170134";
    msg.sender.value = "Certification";
    msg.recipient.value = "Directory Services";
    msg.applications = {directory_example_application()};
    return msg;
}

// --- hand-rolled canonical rendering (test-side oracle) ---------------------

inline std::string golden_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out.push_back(c);
    }
    return out;
}

inline std::string render_signature(const SignatureBlock& block) {
    std::string out = "<ds:Signature>";
    out += "<signerSubjectDN>" + golden_escape(block.signer_subject_dn) + "</signerSubjectDN>";
    out += "<keyId>" + block.key_id + "</keyId>";
    out += "<algorithm>" + block.algorithm_id + "</algorithm>";
    out += "<digestAlgorithm>" + block.digest_algorithm_id + "</digestAlgorithm>";
    if (block.scope.all) {
        out += "<scope type=\"all\"></scope>";
    } else {
        out += "<scope type=\"fields\">";
        for (const std::string& name : block.scope.fields) out += "<field>" + name + "</field>";
        out += "</scope>";
    }
    out += "<createdAt>" + block.created_at + "</createdAt>";
    out += "<signatureValue>" + block.signature_b64 + "</signatureValue>";
    out += "</ds:Signature>";
    return out;
}

inline std::string registration_example_canonical(const std::vector<SignatureBlock>& signatures) {
    std::string out =
        "<message version=\"1.0\" id=\"20040202164445\">"
        "<sender>Registration</sender>"
        "<recipient>Certification</recipient>"
        "<application id=\"20040202164832\">"
        "<profile id=\"MultiCert\">"
        "<clientName>Host A</clientName>"
        "<subjectDN>CN=Alice,OU=OrgUnitName,O=OrgName,C=DE</subjectDN>"
        "<revocationPassword>7c4a8 ... 8941c</revocationPassword>"
        "<email>alice@orgunitname.orgname.de</email>"
        "<publiclyAvailable>true</publiclyAvailable>"
        "</profile>";
    for (const SignatureBlock& block : signatures) out += render_signature(block);
    out += "</application></message>";
    return out;
}

inline std::string directory_example_canonical(const std::vector<SignatureBlock>& signatures) {
    std::string out =
        "<message version=\"1.0\" id=\"20040202170134\">"
        "<sender>Certification</sender>"
        "<recipient>Directory Services</recipient>"
        "<application id=\"20040202164832\">"
        "<profile id=\"MultiCert\">"
        "<clientName>Host A</clientName>"
        "<encCertificate>Base64 encoded certificate</encCertificate>"
        "<signCertificate>Base64 encoded certificate</signCertificate>"
        "<nonRepCertificate>Base64 encoded certificate</nonRepCertificate>"
        "<revocationPassword>7c4a8 ... 8941</revocationPassword>"
        "<email>alice@orgunitname.orgname.de</email>"
        "<publiclyAvailable>true</publiclyAvailable>"
        "</profile>";
    for (const SignatureBlock& block : signatures) out += render_signature(block);
    out += "</application></message>";
    return out;
}

// A fixed placeholder block for parse-only tests that need no real crypto.
inline SignatureBlock placeholder_signature(const std::string& signer) {
    SignatureBlock block;
    block.signer_subject_dn = signer;
    block.key_id = "0011223344556677";
    block.algorithm_id = "ed25519";
    block.digest_algorithm_id = "sha256";
    block.scope = SignatureScope::whole();
    block.created_at = "2004-02-02T16:48:32Z";
    block.signature_b64 = "c2lnbmF0dXJlLXBsYWNlaG9sZGVy";
    return block;
}

} // namespace itp::testing

#endif // ITP_TESTS_SUPPORT_GOLDEN_HPP
