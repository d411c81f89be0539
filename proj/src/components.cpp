// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#include "itp/components.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "itp/codec.hpp"
#include "itp/errors.hpp"
#include "itp/xml.hpp"

namespace itp::components {

namespace fs = std::filesystem;

namespace {

Clock clock_or_default(Clock clock) {
    if (clock) return clock;
    return [] { return utc_now(); };
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ItpError(Errc::IoFailure, "cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content).flush()) {
        throw ItpError(Errc::IoFailure, "cannot write " + path.string());
    }
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

// Single-application messages tag their audit events with the application id.
std::string sole_app_id(const Message& msg) {
    return msg.applications.size() == 1 ? msg.applications.front().id.value : "";
}

} // namespace

// ---------------------------------------------------------------------------
// Certificate usages
// ---------------------------------------------------------------------------

std::string to_string(CertUsage usage) {
    switch (usage) {
        case CertUsage::Encryption: return "encryption";
        case CertUsage::Signature: return "signature";
        case CertUsage::NonRepudiation: return "non-repudiation";
    }
    return "encryption";
}

CertUsage cert_usage_from_string(const std::string& text) {
    if (text == "encryption") return CertUsage::Encryption;
    if (text == "signature") return CertUsage::Signature;
    if (text == "non-repudiation") return CertUsage::NonRepudiation;
    throw ItpError(Errc::MalformedDocument, "unknown certificate usage: " + text);
}

std::string field_name_for(CertUsage usage) {
    switch (usage) {
        case CertUsage::Encryption: return "encCertificate";
        case CertUsage::Signature: return "signCertificate";
        case CertUsage::NonRepudiation: return "nonRepCertificate";
    }
    return "encCertificate";
}

// ---------------------------------------------------------------------------
// Certificate blobs
// ---------------------------------------------------------------------------

std::string encode_certificate(const CertificateBlob& blob) {
    const std::string wire = blob.format_id + "\n" + blob.payload_b64 + "\n" +
                             blob.signature_b64 + "\n";
    return base64_encode(wire);
}

CertificateBlob decode_certificate(const std::string& field_value) {
    const Bytes raw = base64_decode(field_value);
    const std::string wire(raw.begin(), raw.end());
    std::vector<std::string> lines;
    std::string current;
    for (char c : wire) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) lines.push_back(current);
    if (lines.size() != 3) {
        throw ItpError(Errc::MalformedDocument, "certificate wire form needs 3 lines");
    }
    if (lines[0] != kCertificateFormat) {
        throw ItpError(Errc::MalformedDocument, "unknown certificate format: " + lines[0]);
    }
    if (!is_base64(lines[1]) || !is_base64(lines[2]) || lines[1].empty() || lines[2].empty()) {
        throw ItpError(Errc::MalformedDocument, "certificate payload/signature must be Base64");
    }
    CertificateBlob blob;
    blob.format_id = lines[0];
    blob.payload_b64 = lines[1];
    blob.signature_b64 = lines[2];
    return blob;
}

namespace {

std::string certificate_payload(const CertificateInfo& info) {
    xml::Writer writer;
    writer.open("certificate", {{"format", kCertificateFormat}});
    writer.leaf("subjectDN", info.subject_dn);
    writer.leaf("keyUsage", to_string(info.usage));
    writer.leaf("virtualCA", info.virtual_ca);
    writer.leaf("serial", std::to_string(info.serial));
    writer.leaf("issuedAt", info.issued_at);
    writer.leaf("subjectPublicKey", info.subject_public_key_b64);
    writer.close("certificate");
    return writer.take();
}

const std::string& required_leaf(const xml::Node& root, const char* name) {
    const xml::Node* child = root.child(name);
    if (child == nullptr || !child->children.empty()) {
        throw ItpError(Errc::MalformedDocument,
                       std::string("certificate payload misses ") + name);
    }
    return child->text;
}

} // namespace

CertificateInfo certificate_info(const CertificateBlob& blob) {
    const Bytes payload = base64_decode(blob.payload_b64);
    const xml::Node root = xml::read_document(std::string(payload.begin(), payload.end()));
    if (root.name != "certificate") {
        throw ItpError(Errc::MalformedDocument, "certificate payload root must be certificate");
    }
    const std::string* format = root.attribute("format");
    if (format == nullptr || *format != blob.format_id) {
        throw ItpError(Errc::MalformedDocument, "certificate payload format mismatch");
    }
    CertificateInfo info;
    info.subject_dn = required_leaf(root, "subjectDN");
    info.usage = cert_usage_from_string(required_leaf(root, "keyUsage"));
    info.virtual_ca = required_leaf(root, "virtualCA");
    try {
        info.serial = std::stoull(required_leaf(root, "serial"));
    } catch (const std::exception&) {
        throw ItpError(Errc::MalformedDocument, "certificate serial is not a number");
    }
    info.issued_at = required_leaf(root, "issuedAt");
    info.subject_public_key_b64 = required_leaf(root, "subjectPublicKey");
    return info;
}

bool verify_certificate(const crypto::SchemeRegistry& schemes, const CertificateBlob& blob,
                        const security::KeyPairRecord& ca_key) {
    const auto* scheme = schemes.find_signature(ca_key.algorithm_id);
    if (scheme == nullptr) return false;
    Bytes payload;
    Bytes signature;
    try {
        payload = base64_decode(blob.payload_b64);
        signature = base64_decode(blob.signature_b64);
    } catch (const ItpError&) {
        return false;
    }
    const Bytes hashed = crypto::digest("sha256", payload);
    return scheme->verify(ca_key.public_key, hashed, signature);
}

// ---------------------------------------------------------------------------
// VirtualCAStore
// ---------------------------------------------------------------------------

VirtualCAStore::VirtualCAStore(std::filesystem::path serial_log)
    : serial_log_(std::move(serial_log)), persistent_(true) {
    if (!fs::exists(serial_log_)) return;
    std::ifstream in(serial_log_, std::ios::binary);
    if (!in) {
        throw ItpError(Errc::StorePersistenceFailure, "cannot read " + serial_log_.string());
    }
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::uint64_t> last;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const std::vector<std::string> fields = split_pipes(line);
        if (fields.size() != 3) {
            throw ItpError(Errc::StorePersistenceFailure,
                           "serial log line " + std::to_string(line_no) + ": expected 3 fields");
        }
        std::uint64_t serial = 0;
        try {
            serial = std::stoull(fields[1]);
        } catch (const std::exception&) {
            throw ItpError(Errc::StorePersistenceFailure,
                           "serial log line " + std::to_string(line_no) + ": bad serial");
        }
        const std::string name = pipe_unescape(fields[0]);
        last[name] = std::max(last[name], serial);
    }
    for (auto& [name, serial] : last) {
        Entry entry;
        entry.name = name;
        entry.serial = serial;
        entries_.push_back(std::move(entry));  // key attached later via add()
    }
}

void VirtualCAStore::add(const std::string& name, security::KeyPairRecord ca_key) {
    if (ca_key.usage != security::KeyUsage::CaSigning) {
        throw ItpError(Errc::UsageViolation, "virtual CA " + name + " needs a ca-signing key");
    }
    for (auto& entry : entries_) {
        if (entry.name != name) continue;
        if (!entry.key.key_id.empty()) {
            throw ItpError(Errc::CredentialRejected,
                           "virtual CA " + name + " already has a signing key");
        }
        entry.key = std::move(ca_key);  // counter restored from the serial log
        return;
    }
    Entry entry;
    entry.name = name;
    entry.key = std::move(ca_key);
    entries_.push_back(std::move(entry));
}

bool VirtualCAStore::contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const Entry& e) { return e.name == name && !e.key.key_id.empty(); });
}

VirtualCAStore::Entry& VirtualCAStore::require(const std::string& name) {
    for (auto& entry : entries_) {
        if (entry.name == name && !entry.key.key_id.empty()) return entry;
    }
    throw ItpError(Errc::CredentialRejected, "no virtual CA named " + name);
}

const VirtualCAStore::Entry& VirtualCAStore::require(const std::string& name) const {
    for (const auto& entry : entries_) {
        if (entry.name == name && !entry.key.key_id.empty()) return entry;
    }
    throw ItpError(Errc::CredentialRejected, "no virtual CA named " + name);
}

const security::KeyPairRecord& VirtualCAStore::key_of(const std::string& name) const {
    return require(name).key;
}

std::uint64_t VirtualCAStore::last_serial(const std::string& name) const {
    for (const auto& entry : entries_) {
        if (entry.name == name) return entry.serial;
    }
    return 0;
}

std::uint64_t VirtualCAStore::next_serial(const std::string& name) {
    Entry& entry = require(name);
    const std::uint64_t serial = entry.serial + 1;
    if (persistent_) {
        std::ofstream out(serial_log_, std::ios::binary | std::ios::app);
        if (!out ||
            !(out << pipe_escape(name) << '|' << serial << '|' << format_iso8601_utc(utc_now())
                  << '\n')
                 .flush()) {
            throw ItpError(Errc::StorePersistenceFailure,
                           "cannot append " + serial_log_.string());
        }
    }
    entry.serial = serial;
    return serial;
}

std::vector<std::string> VirtualCAStore::names() const {
    std::vector<std::string> names;
    for (const auto& entry : entries_) {
        if (!entry.key.key_id.empty()) names.push_back(entry.name);
    }
    return names;
}

VirtualCAStore VirtualCAStore::from_trust_store(const security::TrustStore& trust,
                                                std::filesystem::path serial_log) {
    VirtualCAStore store = serial_log.empty() ? VirtualCAStore()
                                              : VirtualCAStore(std::move(serial_log));
    for (const auto& record : trust.records()) {
        if (record.usage != security::KeyUsage::CaSigning) continue;
        const std::string name = security::extract_cn(record.owner_subject_dn);
        if (name.empty()) continue;
        store.add(name, record);
    }
    return store;
}

CertificateBlob issue_certificate(const crypto::SchemeRegistry& schemes, VirtualCAStore& cas,
                                  const std::string& ca_name, const std::string& subject_dn,
                                  CertUsage usage, const std::string& subject_public_key_b64,
                                  UtcTime issued_at) {
    const security::KeyPairRecord& ca_key = cas.key_of(ca_name);
    if (ca_key.usage != security::KeyUsage::CaSigning) {
        throw ItpError(Errc::UsageViolation, "virtual CA key must have ca-signing usage");
    }
    if (!ca_key.has_private()) {
        throw ItpError(Errc::CredentialRejected,
                       "no private key material for virtual CA " + ca_name);
    }
    const auto& scheme = schemes.signature(ca_key.algorithm_id);

    CertificateInfo info;
    info.subject_dn = subject_dn;
    info.usage = usage;
    info.virtual_ca = ca_name;
    info.serial = cas.next_serial(ca_name);
    info.issued_at = format_iso8601_utc(issued_at);
    info.subject_public_key_b64 = subject_public_key_b64;

    const std::string payload = certificate_payload(info);
    const Bytes hashed = crypto::digest(
        "sha256", crypto::ByteView(reinterpret_cast<const std::uint8_t*>(payload.data()),
                                   payload.size()));
    CertificateBlob blob;
    blob.payload_b64 = base64_encode(payload);
    blob.signature_b64 = base64_encode(scheme.sign(ca_key.private_key, hashed));
    return blob;
}

// ---------------------------------------------------------------------------
// PublicationStore / NotificationOutbox
// ---------------------------------------------------------------------------

PublicationStore::PublicationStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw ItpError(Errc::IoFailure, "cannot create " + root_.string());
}

void PublicationStore::publish(const std::string& application_id, CertUsage usage,
                               const CertificateBlob& blob) {
    const fs::path dir = root_ / application_id;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ItpError(Errc::IoFailure, "cannot create " + dir.string());
    const std::string wire = blob.format_id + "\n" + blob.payload_b64 + "\n" +
                             blob.signature_b64 + "\n";
    write_file(dir / (to_string(usage) + ".cert"), wire);
}

std::vector<std::string> PublicationStore::list(const std::string& application_id) const {
    const fs::path dir = root_ / application_id;
    std::vector<std::string> names;
    if (!fs::exists(dir)) return names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

CertificateBlob PublicationStore::read(const std::string& application_id, CertUsage usage) const {
    const std::string wire = read_file(root_ / application_id / (to_string(usage) + ".cert"));
    return decode_certificate(base64_encode(wire));
}

NotificationOutbox::NotificationOutbox(std::filesystem::path path)
    : path_(std::move(path)), persistent_(true) {
    if (fs::exists(path_)) entries_ = load(path_);
}

void NotificationOutbox::record(const std::string& email, const std::string& application_id,
                                std::size_t count, UtcTime at) {
    Entry entry;
    entry.email = email;
    entry.application_id = application_id;
    entry.count = count;
    entry.at_iso = format_iso8601_utc(at);
    if (persistent_) {
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out || !(out << pipe_escape(entry.email) << '|' << pipe_escape(entry.application_id)
                          << '|' << entry.count << '|' << entry.at_iso << '\n')
                         .flush()) {
            throw ItpError(Errc::IoFailure, "cannot append " + path_.string());
        }
    }
    entries_.push_back(std::move(entry));
}

std::vector<NotificationOutbox::Entry> NotificationOutbox::load(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ItpError(Errc::IoFailure, "cannot read " + path.string());
    std::vector<Entry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const std::vector<std::string> fields = split_pipes(line);
        if (fields.size() != 4) {
            throw ItpError(Errc::MalformedDocument,
                           "outbox line " + std::to_string(line_no) + ": expected 4 fields");
        }
        Entry entry;
        entry.email = pipe_unescape(fields[0]);
        entry.application_id = pipe_unescape(fields[1]);
        try {
            entry.count = static_cast<std::size_t>(std::stoull(fields[2]));
        } catch (const std::exception&) {
            throw ItpError(Errc::MalformedDocument,
                           "outbox line " + std::to_string(line_no) + ": bad count");
        }
        entry.at_iso = fields[3];
        entries.push_back(std::move(entry));
    }
    return entries;
}

// ---------------------------------------------------------------------------
// Registration
// ---------------------------------------------------------------------------

Registration::Registration(const crypto::SchemeRegistry& schemes,
                           const profiles::ProfileRegistry& profiles,
                           const security::TrustStore& trust, audit::AuditLog& audit,
                           std::string signing_key_id, IdGenerator& ids, Clock clock,
                           std::string profile_id)
    : schemes_(schemes),
      profiles_(profiles),
      trust_(trust),
      audit_(audit),
      signing_key_id_(std::move(signing_key_id)),
      ids_(ids),
      clock_(clock_or_default(std::move(clock))),
      profile_id_(std::move(profile_id)) {}

Message Registration::process_intake(const IntakeData& intake, const CredentialCheck& check) {
    const UtcTime now = clock_();
    if (check && !check(intake)) {
        audit_.append(kRegistration, "", "", audit::EventKind::Rejected, {},
                      "credentials rejected for " + intake.subject_dn, now);
        throw ItpError(Errc::CredentialRejected, "credentials rejected for " + intake.subject_dn);
    }

    const profiles::ProfileSpec& spec = profiles_.require(profile_id_);
    const std::optional<ComponentName> next = profiles::next_hop(spec, kRegistration);
    if (!next.has_value()) {
        throw ItpError(Errc::InconsistentSpec, "registration stage must have a next hop");
    }

    Application app;
    app.id = ids_.next(now);
    app.profile_id = spec.profile_id;
    app = set_field(app, "clientName", intake.client_name);
    app = set_field(app, "subjectDN", intake.subject_dn);
    app = set_field(app, "revocationPassword",
                    hex_encode(crypto::digest(schemes_.default_digest_id(),
                                              intake.revocation_password)));
    app = set_field(app, "email", intake.email);
    app = set_field(app, "publiclyAvailable", intake.publicly_available ? "true" : "false");

    security::SignRequest request;
    request.key_id = signing_key_id_;
    request.created_at = now;
    security::sign_application(schemes_, trust_, app, request);

    const std::string app_id = app.id.value;
    Message msg = build_message(ids_.next(now), kRegistration, *next, {std::move(app)});

    audit_.append(kRegistration, msg.id.value, app_id, audit::EventKind::Processed, {},
                  "intake accepted; application composed", now);
    audit_.append(kRegistration, msg.id.value, app_id, audit::EventKind::Forwarded, {},
                  "to " + next->value, now);
    return msg;
}

// ---------------------------------------------------------------------------
// Certification
// ---------------------------------------------------------------------------

Certification::Certification(const crypto::SchemeRegistry& schemes,
                             const profiles::ProfileRegistry& profiles,
                             const security::TrustStore& trust, VirtualCAStore& cas,
                             routing::ReplayStore& replay, audit::AuditLog& audit,
                             std::string signing_key_id, IdGenerator& ids, Clock clock)
    : schemes_(schemes),
      profiles_(profiles),
      trust_(trust),
      cas_(cas),
      replay_(replay),
      audit_(audit),
      signing_key_id_(std::move(signing_key_id)),
      ids_(ids),
      clock_(clock_or_default(std::move(clock))) {}

Message Certification::process(const Message& msg) {
    const UtcTime now = clock_();
    audit_.append(kCertification, msg.id.value, sole_app_id(msg), audit::EventKind::Received, {},
                  "from " + msg.sender.value, now);

    const routing::AdmitResult admitted = replay_.admit(msg, kCertification);
    if (!admitted.fresh) {
        audit_.append(kCertification, msg.id.value, sole_app_id(msg), audit::EventKind::Rejected,
                      {}, "replay: " + admitted.detail, now);
        throw ItpError(Errc::ReplayRejected, admitted.detail);
    }

    const security::VerificationReport report = security::verify_message(schemes_, trust_, msg);
    if (!report.overall) {
        std::string reasons;
        for (const auto& entry : report.entries) {
            if (entry.verdict != security::Verdict::Invalid) continue;
            if (!reasons.empty()) reasons += "; ";
            reasons += entry.reason;
        }
        audit_.append(kCertification, msg.id.value, sole_app_id(msg), audit::EventKind::Rejected,
                      {}, "signature verification failed: " + reasons, now);
        throw ItpError(Errc::SignatureInvalid, reasons);
    }

    std::vector<std::string> valid_dns;
    for (const auto& entry : report.entries) {
        if (entry.verdict == security::Verdict::Valid &&
            std::find(valid_dns.begin(), valid_dns.end(), entry.signer_subject_dn) ==
                valid_dns.end()) {
            valid_dns.push_back(entry.signer_subject_dn);
        }
    }
    audit_.append(kCertification, msg.id.value, sole_app_id(msg), audit::EventKind::Verified,
                  valid_dns, std::to_string(report.entries.size()) + " signatures checked", now);

    std::vector<Application> transformed;
    std::optional<ComponentName> next;
    for (const Application& app : msg.applications) {
        const profiles::ProfileSpec& spec = profiles_.require(app.profile_id);
        const profiles::StageSpec& stage = profiles::stage_of(spec, kCertification);

        const std::vector<std::string> violations =
            profiles::validate_stage(app, spec, kCertification);
        if (!violations.empty()) {
            std::string detail = "stage validation failed:";
            for (const auto& violation : violations) detail += " " + violation;
            audit_.append(kCertification, msg.id.value, app.id.value,
                          audit::EventKind::Rejected, {}, detail, now);
            throw ItpError(Errc::StageValidationFailed, detail);
        }

        security::VerificationReport app_report;
        for (const auto& entry : report.entries) {
            if (entry.application_id == app.id.value) app_report.entries.push_back(entry);
        }
        const security::AuthorizationDecision decision =
            security::authorize(app_report, stage.authorization);
        if (!decision.authorized) {
            audit_.append(kCertification, msg.id.value, app.id.value,
                          audit::EventKind::Rejected, {}, decision.reason, now);
            throw ItpError(Errc::AuthorizationDenied, decision.reason);
        }
        audit_.append(kCertification, msg.id.value, app.id.value, audit::EventKind::Authorized,
                      decision.matched_operators, "dual control satisfied", now);

        const std::string client = get_text_field(app, "clientName").value();
        const std::string subject = get_text_field(app, "subjectDN").value();

        Application out = app;
        out.signatures.clear();
        for (const auto& name : stage.consumed_fields) out = remove_field(out, name);

        std::string serials;
        for (const CertUsage usage :
             {CertUsage::Encryption, CertUsage::Signature, CertUsage::NonRepudiation}) {
            const crypto::KeyMaterial subject_key =
                usage == CertUsage::Encryption
                    ? schemes_.encryption(schemes_.default_encryption_id()).generate()
                    : schemes_.signature(schemes_.default_signature_id()).generate();
            const CertificateBlob blob =
                issue_certificate(schemes_, cas_, client, subject, usage,
                                  base64_encode(subject_key.public_key), now);
            out = set_field(out, field_name_for(usage), encode_certificate(blob));
            if (!serials.empty()) serials += ",";
            serials += std::to_string(certificate_info(blob).serial);
        }

        security::SignRequest request;
        request.key_id = signing_key_id_;
        request.created_at = now;
        security::sign_application(schemes_, trust_, out, request);

        audit_.append(kCertification, msg.id.value, app.id.value, audit::EventKind::Processed,
                      decision.matched_operators,
                      "issued-certificates=3 serials=" + serials + " ca=" + client, now);

        const std::optional<ComponentName> hop = stage.next;
        if (!hop.has_value()) {
            throw ItpError(Errc::InconsistentSpec, "certification stage must have a next hop");
        }
        if (next.has_value() && next->value != hop->value) {
            throw ItpError(Errc::InconsistentSpec, "applications disagree on the next hop");
        }
        next = hop;
        transformed.push_back(std::move(out));
    }

    Message out = build_message(ids_.next(now), kCertification, *next, std::move(transformed));
    for (const auto& app : out.applications) {
        audit_.append(kCertification, out.id.value, app.id.value, audit::EventKind::Forwarded, {},
                      "to " + next->value, now);
    }
    return out;
}

// ---------------------------------------------------------------------------
// DirectoryServices
// ---------------------------------------------------------------------------

DirectoryServices::DirectoryServices(const crypto::SchemeRegistry& schemes,
                                     const profiles::ProfileRegistry& profiles,
                                     const security::TrustStore& trust,
                                     routing::ReplayStore& replay, audit::AuditLog& audit,
                                     PublicationStore& publications, NotificationOutbox& outbox,
                                     Clock clock)
    : schemes_(schemes),
      profiles_(profiles),
      trust_(trust),
      replay_(replay),
      audit_(audit),
      publications_(publications),
      outbox_(outbox),
      clock_(clock_or_default(std::move(clock))) {}

PublicationRecord DirectoryServices::process(const Message& msg) {
    const UtcTime now = clock_();
    audit_.append(kDirectoryServices, msg.id.value, sole_app_id(msg), audit::EventKind::Received,
                  {}, "from " + msg.sender.value, now);

    const routing::AdmitResult admitted = replay_.admit(msg, kDirectoryServices);
    if (!admitted.fresh) {
        audit_.append(kDirectoryServices, msg.id.value, sole_app_id(msg),
                      audit::EventKind::Rejected, {}, "replay: " + admitted.detail, now);
        throw ItpError(Errc::ReplayRejected, admitted.detail);
    }

    const security::VerificationReport report = security::verify_message(schemes_, trust_, msg);
    if (!report.overall) {
        std::string reasons;
        for (const auto& entry : report.entries) {
            if (entry.verdict != security::Verdict::Invalid) continue;
            if (!reasons.empty()) reasons += "; ";
            reasons += entry.reason;
        }
        audit_.append(kDirectoryServices, msg.id.value, sole_app_id(msg),
                      audit::EventKind::Rejected, {}, "signature verification failed: " + reasons,
                      now);
        throw ItpError(Errc::SignatureInvalid, reasons);
    }

    std::optional<PublicationRecord> first;
    for (const Application& app : msg.applications) {
        const profiles::ProfileSpec& spec = profiles_.require(app.profile_id);
        const std::vector<std::string> violations =
            profiles::validate_stage(app, spec, kDirectoryServices);
        if (!violations.empty()) {
            std::string detail = "stage validation failed:";
            for (const auto& violation : violations) detail += " " + violation;
            audit_.append(kDirectoryServices, msg.id.value, app.id.value,
                          audit::EventKind::Rejected, {}, detail, now);
            throw ItpError(Errc::StageValidationFailed, detail);
        }

        // An unsigned application would pass overall verification vacuously;
        // publication demands a valid signature from the Certification stage.
        std::vector<std::string> valid_dns;
        bool certified = false;
        for (const auto& entry : report.entries) {
            if (entry.application_id != app.id.value ||
                entry.verdict != security::Verdict::Valid) {
                continue;
            }
            valid_dns.push_back(entry.signer_subject_dn);
            if (entry.signer_subject_dn == kCertification.value ||
                security::extract_cn(entry.signer_subject_dn) == kCertification.value) {
                certified = true;
            }
        }
        if (!certified) {
            audit_.append(kDirectoryServices, msg.id.value, app.id.value,
                          audit::EventKind::Rejected, {},
                          "no valid Certification signature on application", now);
            throw ItpError(Errc::SignatureInvalid,
                           "no valid Certification signature on application");
        }
        audit_.append(kDirectoryServices, msg.id.value, app.id.value, audit::EventKind::Verified,
                      valid_dns, "application signature valid", now);

        PublicationRecord record;
        record.application_id = app.id;
        for (const CertUsage usage :
             {CertUsage::Encryption, CertUsage::Signature, CertUsage::NonRepudiation}) {
            record.certificates.push_back(
                decode_certificate(get_text_field(app, field_name_for(usage)).value()));
        }
        record.published = get_text_field(app, "publiclyAvailable").value() == "true";
        record.notification_email = get_text_field(app, "email").value();
        record.attached_count = record.certificates.size();

        if (record.published) {
            const CertUsage usages[] = {CertUsage::Encryption, CertUsage::Signature,
                                        CertUsage::NonRepudiation};
            for (std::size_t i = 0; i < record.certificates.size(); ++i) {
                publications_.publish(app.id.value, usages[i], record.certificates[i]);
            }
        }
        outbox_.record(record.notification_email, app.id.value, record.attached_count, now);
        audit_.append(kDirectoryServices, msg.id.value, app.id.value,
                      audit::EventKind::Processed, {},
                      std::string("published=") + (record.published ? "true" : "false") +
                          " certificates=" + std::to_string(record.attached_count) +
                          " notified=" + record.notification_email,
                      now);
        if (!first.has_value()) first = std::move(record);
    }

    if (!first.has_value()) {
        throw ItpError(Errc::EmptyMessage, "directory received a message without applications");
    }
    return *first;
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

IntakeData default_intake() {
    IntakeData intake;
    intake.client_name = "Host A";
    intake.subject_dn = "CN=Alice,OU=OrgUnitName,O=OrgName,C=DE";
    intake.revocation_password = "alice-revocation-secret";
    intake.email = "alice@orgunitname.orgname.de";
    intake.publicly_available = true;
    return intake;
}

ScenarioResult run_multicert_scenario(const ScenarioOptions& options) {
    if (options.workdir.empty()) {
        throw ItpError(Errc::IoFailure, "scenario needs a working directory");
    }
    const fs::path workdir = options.workdir;
    std::error_code ec;
    fs::create_directories(workdir / "messages", ec);
    if (ec) throw ItpError(Errc::IoFailure, "cannot create " + workdir.string());

    const crypto::SchemeRegistry schemes = crypto::SchemeRegistry::with_defaults();

    // Keys: one operational key per component, three operators, one virtual CA.
    const std::vector<std::string> operator_dns = {
        "CN=Operator One, OU=Operations, O=TrustCenter, C=DE",
        "CN=Operator Two, OU=Operations, O=TrustCenter, C=DE",
        "CN=Operator Three, OU=Operations, O=TrustCenter, C=DE",
    };
    security::TrustStore trust;
    const auto make_key = [&](security::KeyUsage usage, const std::string& owner) {
        security::KeyPairRecord record = security::keygen(
            schemes,
            usage == security::KeyUsage::Encryption ? schemes.default_encryption_id()
                                                    : schemes.default_signature_id(),
            usage, owner);
        trust.add(record);
        return record.key_id;
    };
    const std::string registration_key =
        make_key(security::KeyUsage::OperationalSigning, "CN=Registration, O=TrustCenter, C=DE");
    const std::string certification_key =
        make_key(security::KeyUsage::OperationalSigning, "CN=Certification, O=TrustCenter, C=DE");
    std::vector<std::string> operator_keys;
    for (const auto& dn : operator_dns) {
        operator_keys.push_back(make_key(security::KeyUsage::OperationalSigning, dn));
    }
    make_key(security::KeyUsage::CaSigning,
             "CN=" + options.intake.client_name + ", O=TrustCenter, C=DE");

    ScenarioResult result;
    result.operator_dns = {operator_dns[0], operator_dns[1]};
    result.keystore_file = workdir / "trust.keys";
    trust.save(result.keystore_file);

    profiles::ProfileRegistry profile_registry;
    profile_registry.register_profile(profiles::builtin_multicert(operator_dns));
    result.profile_config_file = workdir / "profiles.xml";
    profiles::save_config(result.profile_config_file, profile_registry.profiles());

    result.audit_log_file = workdir / "audit.log";
    audit::AuditLog audit_log(result.audit_log_file);

    routing::ReplayStore certification_replay(workdir / "replay-certification.log");
    routing::ReplayStore directory_replay(workdir / "replay-directory.log");
    VirtualCAStore cas = VirtualCAStore::from_trust_store(trust, workdir / "ca-serials.log");

    result.publication_dir = workdir / "publications";
    PublicationStore publications(result.publication_dir);
    result.outbox_file = workdir / "notifications.log";
    NotificationOutbox outbox(result.outbox_file);

    routing::ComponentRegistry component_registry;
    for (const ComponentName& name : {kRegistration, kCertification, kDirectoryServices}) {
        routing::ComponentRegistryEntry entry;
        entry.name = name;
        entry.transport = routing::TransportKind::File;
        entry.address = (workdir / "mail" / name.value).string();
        component_registry.register_component(std::move(entry));
    }
    routing::MessageRouter router(std::move(component_registry));

    IdGenerator ids = options.id_seed == 0 ? IdGenerator() : IdGenerator(options.id_seed);

    Registration registration(schemes, profile_registry, trust, audit_log, registration_key, ids);
    Certification certification(schemes, profile_registry, trust, cas, certification_replay,
                                audit_log, certification_key, ids);
    DirectoryServices directory(schemes, profile_registry, trust, directory_replay, audit_log,
                                publications, outbox);

    // Hop 1: Registration composes, two operators co-sign, file transport.
    Message hop1 = registration.process_intake(options.intake);
    for (std::size_t i = 0; i < 2; ++i) {
        security::SignRequest request;
        request.key_id = operator_keys[i];
        security::sign_application(schemes, trust, hop1.applications.front(), request);
    }
    router.send(hop1);
    result.hop1_message_id = hop1.id;
    result.application_id = hop1.applications.front().id;
    result.hop1_file = workdir / "messages" / "hop1.itp.xml";
    fs::copy_file(fs::path(router.registry().resolve(kCertification).address) /
                      (hop1.id.value + ".itp.xml"),
                  result.hop1_file, fs::copy_options::overwrite_existing);

    // Hop 2: Certification processes and forwards.
    const std::optional<Message> at_certification =
        router.receive(kCertification, routing::Millis(2000));
    if (!at_certification.has_value()) {
        throw ItpError(Errc::TransportFailure, "certification inbox stayed empty");
    }
    const Message hop2 = certification.process(*at_certification);
    router.send(hop2);
    result.hop2_message_id = hop2.id;
    result.hop2_file = workdir / "messages" / "hop2.itp.xml";
    fs::copy_file(fs::path(router.registry().resolve(kDirectoryServices).address) /
                      (hop2.id.value + ".itp.xml"),
                  result.hop2_file, fs::copy_options::overwrite_existing);

    // Publication.
    const std::optional<Message> at_directory =
        router.receive(kDirectoryServices, routing::Millis(2000));
    if (!at_directory.has_value()) {
        throw ItpError(Errc::TransportFailure, "directory inbox stayed empty");
    }
    result.publication = directory.process(*at_directory);
    return result;
}

} // namespace itp::components
