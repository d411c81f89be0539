// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#include "itp/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "itp/audit.hpp"
#include "itp/codec.hpp"
#include "itp/components.hpp"
#include "itp/errors.hpp"
#include "itp/profiles.hpp"
#include "itp/routing.hpp"
#include "itp/security.hpp"

namespace itp::cli {

namespace {

// ---------------------------------------------------------------------------
// Exit codes
// ---------------------------------------------------------------------------

constexpr int kOk = 0;
constexpr int kFailedCheck = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;

int exit_code_for(Errc code) {
    switch (code) {
        case Errc::UnsupportedAlgorithm:
        case Errc::UsageViolation:
        case Errc::CredentialRejected:
        case Errc::UnknownComponent:
        case Errc::DuplicateComponentName:
        case Errc::UnknownProfile:
        case Errc::DuplicateProfileId:
        case Errc::InconsistentSpec:
        case Errc::StageNotFound:
            return kUsage;
        case Errc::TransportFailure:
        case Errc::MisroutedMessage:
        case Errc::StorePersistenceFailure:
        case Errc::CryptoFailure:
        case Errc::IoFailure:
            return kIo;
        default:
            return kFailedCheck;
    }
}

// ---------------------------------------------------------------------------
// Config + file helpers
// ---------------------------------------------------------------------------

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ItpError(Errc::IoFailure, "cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content).flush()) {
        throw ItpError(Errc::IoFailure, "cannot write " + path);
    }
}

std::string trim(const std::string& text) {
    std::size_t begin = text.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    std::size_t end = text.find_last_not_of(" \t\r");
    return text.substr(begin, end - begin + 1);
}

struct Ctx {
    CliConfig config;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
};

// flag > config file > error
std::string need(const std::string& flag_value, const std::optional<std::string>& config_value,
                 const char* what) {
    if (!flag_value.empty()) return flag_value;
    if (config_value.has_value() && !config_value->empty()) return *config_value;
    throw ItpError(Errc::IoFailure, std::string("no ") + what + " path given (flag or config)");
}

std::string pick(const std::string& flag_value, const std::optional<std::string>& config_value,
                 const std::string& fallback) {
    if (!flag_value.empty()) return flag_value;
    if (config_value.has_value() && !config_value->empty()) return *config_value;
    return fallback;
}

Message load_message(const std::string& path) { return codec::parse(read_file(path)); }

// The sole application, or the one named by --application.
Application& select_application(Message& msg, const std::string& application_id) {
    if (!application_id.empty()) {
        for (auto& app : msg.applications) {
            if (app.id.value == application_id) return app;
        }
        throw ItpError(Errc::FieldAbsent, "no application with id " + application_id);
    }
    if (msg.applications.size() != 1) {
        throw ItpError(Errc::FieldAbsent,
                       "message carries several applications; pass --application");
    }
    return msg.applications.front();
}

void print_report(const security::VerificationReport& report, std::ostream& out) {
    for (const auto& entry : report.entries) {
        out << to_string(entry.verdict) << ' '
            << (entry.application_id.empty() ? std::string("message")
                                             : "application " + entry.application_id)
            << " signer=" << entry.signer_subject_dn << " key=" << entry.key_id;
        if (!entry.reason.empty()) out << " reason=" << entry.reason;
        out << '\n';
    }
    out << "overall: " << (report.overall ? "valid" : "invalid") << '\n';
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_keygen(Ctx& ctx, const std::string& keystore, const std::string& algorithm,
               const std::string& usage, const std::string& owner) {
    const std::string path = need(keystore, ctx.config.keystore, "keystore");
    const crypto::SchemeRegistry schemes = crypto::SchemeRegistry::with_defaults();
    security::TrustStore store;
    if (std::filesystem::exists(path)) store = security::TrustStore::load(path);
    const security::KeyUsage parsed_usage = security::key_usage_from_string(usage);
    std::string algorithm_id = algorithm;
    if (algorithm_id.empty()) {
        algorithm_id = parsed_usage == security::KeyUsage::Encryption
                           ? schemes.default_encryption_id()
                           : schemes.default_signature_id();
    }
    const security::KeyPairRecord record =
        security::keygen(schemes, algorithm_id, parsed_usage, owner);
    store.add(record);
    store.save(path);
    *ctx.out << record.key_id << '\n';
    return kOk;
}

int cmd_compose(Ctx& ctx, const std::string& fields_path, const std::string& profile,
                const std::string& sender, const std::string& recipient, const std::string& id,
                const std::string& app_id, const std::string& out_path, bool pretty) {
    Application app;
    IdGenerator ids;
    app.id = app_id.empty() ? ids.next() : Identifier{app_id};
    app.profile_id = profile;

    const std::string text = read_file(fields_path);
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ItpError(Errc::MalformedDocument, "field line needs name=value: " + stripped);
        }
        app = set_field(app, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }

    const Message msg = build_message(id.empty() ? ids.next() : Identifier{id},
                                      ComponentName{sender}, ComponentName{recipient}, {app});
    const std::string serialized = pretty ? codec::pretty_print(msg) : codec::serialize(msg);
    if (out_path.empty()) {
        *ctx.out << serialized;
    } else {
        write_file(out_path, serialized);
        *ctx.out << msg.id.value << '\n';
    }
    return kOk;
}

int cmd_sign(Ctx& ctx, const std::string& msg_path, const std::string& keystore,
             const std::string& as_dn, const std::string& key_id, const std::string& fields_csv,
             const std::string& application_id, bool message_scope, const std::string& out_path) {
    const std::string store_path = need(keystore, ctx.config.keystore, "keystore");
    const crypto::SchemeRegistry schemes = crypto::SchemeRegistry::with_defaults();
    const security::TrustStore store = security::TrustStore::load(store_path);

    std::string chosen_key = key_id;
    if (chosen_key.empty()) {
        if (as_dn.empty()) {
            throw ItpError(Errc::CredentialRejected, "pass --as <subject-dn> or --key-id");
        }
        const security::KeyPairRecord* record =
            store.find_by_owner(as_dn, security::KeyUsage::OperationalSigning);
        if (record == nullptr) {
            throw ItpError(Errc::CredentialRejected, "no operational signing key owned by " + as_dn);
        }
        chosen_key = record->key_id;
    }

    security::SignRequest request;
    request.key_id = chosen_key;
    if (!fields_csv.empty()) {
        std::vector<std::string> fields;
        std::string current;
        for (char c : fields_csv) {
            if (c == ',') {
                if (!current.empty()) fields.push_back(trim(current));
                current.clear();
            } else {
                current.push_back(c);
            }
        }
        if (!current.empty()) fields.push_back(trim(current));
        request.scope = SignatureScope::of_fields(fields);
    }

    Message msg = load_message(msg_path);
    if (message_scope) {
        if (!fields_csv.empty()) {
            throw ItpError(Errc::InvalidModel, "--fields cannot combine with --message-level");
        }
        security::sign_message(schemes, store, msg, request);
    } else {
        Application& app = select_application(msg, application_id);
        security::sign_application(schemes, store, app, request);
    }
    write_file(out_path.empty() ? msg_path : out_path, codec::serialize(msg));
    *ctx.out << "signed " << msg.id.value << " with " << chosen_key << '\n';
    return kOk;
}

int cmd_verify(Ctx& ctx, const std::string& msg_path, const std::string& trust) {
    const std::string store_path = need(trust, ctx.config.keystore, "trust store");
    const crypto::SchemeRegistry schemes = crypto::SchemeRegistry::with_defaults();
    const security::TrustStore store = security::TrustStore::load(store_path);
    const Message msg = load_message(msg_path);
    const security::VerificationReport report = security::verify_message(schemes, store, msg);
    print_report(report, *ctx.out);
    return report.overall ? kOk : kFailedCheck;
}

int cmd_encrypt_field(Ctx& ctx, const std::string& msg_path, const std::string& field,
                      const std::string& recipient_key, const std::string& trust,
                      const std::string& application_id, const std::string& out_path) {
    const std::string store_path = need(trust, ctx.config.keystore, "trust store");
    const crypto::SchemeRegistry schemes = crypto::SchemeRegistry::with_defaults();
    const security::TrustStore store = security::TrustStore::load(store_path);
    Message msg = load_message(msg_path);
    Application& app = select_application(msg, application_id);
    security::encrypt_field(schemes, store, app, field, recipient_key);
    write_file(out_path.empty() ? msg_path : out_path, codec::serialize(msg));
    *ctx.out << "encrypted " << field << " for " << recipient_key << '\n';
    return kOk;
}

int cmd_decrypt_field(Ctx& ctx, const std::string& msg_path, const std::string& field,
                      const std::string& trust, const std::string& application_id,
                      const std::string& out_path) {
    const std::string store_path = need(trust, ctx.config.keystore, "trust store");
    const crypto::SchemeRegistry schemes = crypto::SchemeRegistry::with_defaults();
    const security::TrustStore store = security::TrustStore::load(store_path);
    Message msg = load_message(msg_path);
    Application& app = select_application(msg, application_id);
    if (out_path.empty()) {
        *ctx.out << security::decrypt_field_value(schemes, store, app, field) << '\n';
    } else {
        security::decrypt_field(schemes, store, app, field);
        write_file(out_path, codec::serialize(msg));
        *ctx.out << "decrypted " << field << '\n';
    }
    return kOk;
}

int cmd_send(Ctx& ctx, const std::string& msg_path, const std::string& registry) {
    const std::string registry_path = need(registry, ctx.config.registry, "registry");
    routing::MessageRouter router(routing::load_registry(registry_path));
    const Message msg = load_message(msg_path);
    const routing::DeliveryReceipt receipt = router.send(msg);
    *ctx.out << "delivered " << receipt.message_id.value << " to " << receipt.recipient.value
             << " via " << to_string(receipt.transport) << '\n';
    return kOk;
}

int cmd_receive(Ctx& ctx, const std::string& self, const std::string& registry, int timeout_ms,
                const std::string& out_path, bool pretty) {
    const std::string registry_path = need(registry, ctx.config.registry, "registry");
    routing::MessageRouter router(routing::load_registry(registry_path));
    const std::optional<Message> msg =
        router.receive(ComponentName{self}, routing::Millis(timeout_ms));
    if (!msg.has_value()) {
        *ctx.err << "no message\n";
        return kOk;
    }
    const std::string serialized = pretty ? codec::pretty_print(*msg) : codec::serialize(*msg);
    if (out_path.empty()) {
        *ctx.out << serialized;
    } else {
        write_file(out_path, serialized);
        *ctx.out << msg->id.value << '\n';
    }
    return kOk;
}

int cmd_inspect(Ctx& ctx, const std::string& msg_path) {
    *ctx.out << codec::pretty_print(load_message(msg_path));
    return kOk;
}

int cmd_validate(Ctx& ctx, const std::string& msg_path) {
    const std::string text = read_file(msg_path);
    try {
        codec::parse(text);
    } catch (const codec::SchemaError& err) {
        for (const auto& violation : err.violations()) {
            *ctx.out << violation.to_string() << '\n';
        }
        *ctx.err << "invalid: " << err.what() << '\n';
        return kFailedCheck;
    }
    *ctx.out << "ok\n";
    return kOk;
}

int cmd_trace(Ctx& ctx, const std::string& id, const std::string& audit_path) {
    const std::string path = need(audit_path, ctx.config.audit_log, "audit log");
    const audit::AuditLog log{std::filesystem::path(path)};
    for (const auto& event : log.trace(id)) {
        *ctx.out << event.sequence << ' ' << format_iso8601_utc(event.at) << ' '
                 << event.component.value << ' ' << to_string(event.kind)
                 << " msg=" << event.message_id << " app=" << event.application_id;
        if (!event.actor_dns.empty()) {
            *ctx.out << " actors=";
            for (std::size_t i = 0; i < event.actor_dns.size(); ++i) {
                if (i > 0) *ctx.out << ';';
                *ctx.out << event.actor_dns[i];
            }
        }
        *ctx.out << ' ' << event.detail << '\n';
    }
    return kOk;
}

int cmd_run_component(Ctx& ctx, const std::string& name, const std::string& registry,
                      const std::string& keystore, const std::string& profiles_path,
                      const std::string& replay_path, const std::string& audit_path,
                      const std::string& ca_serials, const std::string& publish_dir,
                      const std::string& outbox_path, int timeout_ms, int max_messages,
                      bool exit_on_idle) {
    const ComponentName self{name};
    if (self.value != components::kCertification.value &&
        self.value != components::kDirectoryServices.value) {
        throw ItpError(Errc::UnknownComponent,
                       name + " is not receive-driven; only Certification and "
                              "Directory Services run as components");
    }

    const crypto::SchemeRegistry schemes = crypto::SchemeRegistry::with_defaults();
    const security::TrustStore trust =
        security::TrustStore::load(need(keystore, ctx.config.keystore, "keystore"));
    profiles::ProfileRegistry profile_registry;
    for (auto& spec :
         profiles::load_config(need(profiles_path, ctx.config.profiles, "profile config"))) {
        profile_registry.register_profile(std::move(spec));
    }
    routing::ReplayStore replay{
        std::filesystem::path(need(replay_path, ctx.config.replay_log, "replay log"))};
    audit::AuditLog audit_log{
        std::filesystem::path(need(audit_path, ctx.config.audit_log, "audit log"))};
    routing::MessageRouter router(
        routing::load_registry(need(registry, ctx.config.registry, "registry")));

    std::unique_ptr<components::VirtualCAStore> cas;
    std::unique_ptr<components::Certification> certification;
    std::unique_ptr<components::PublicationStore> publications;
    std::unique_ptr<components::NotificationOutbox> outbox;
    std::unique_ptr<components::DirectoryServices> directory;
    IdGenerator ids;

    if (self.value == components::kCertification.value) {
        const security::KeyPairRecord* key = nullptr;
        for (const auto& record : trust.records()) {
            if (record.usage == security::KeyUsage::OperationalSigning && record.has_private() &&
                security::extract_cn(record.owner_subject_dn) == self.value) {
                key = &record;
                break;
            }
        }
        if (key == nullptr) {
            throw ItpError(Errc::CredentialRejected,
                           "keystore holds no private operational key with CN=" + self.value);
        }
        cas = std::make_unique<components::VirtualCAStore>(
            components::VirtualCAStore::from_trust_store(
                trust, pick(ca_serials, ctx.config.ca_serials, "")));
        certification = std::make_unique<components::Certification>(
            schemes, profile_registry, trust, *cas, replay, audit_log, key->key_id, ids);
    } else {
        publications = std::make_unique<components::PublicationStore>(
            need(publish_dir, ctx.config.publish_dir, "publication directory"));
        outbox = std::make_unique<components::NotificationOutbox>(
            std::filesystem::path(need(outbox_path, ctx.config.outbox, "notification outbox")));
        directory = std::make_unique<components::DirectoryServices>(
            schemes, profile_registry, trust, replay, audit_log, *publications, *outbox);
    }

    int processed = 0;
    while (max_messages == 0 || processed < max_messages) {
        std::optional<Message> msg;
        try {
            msg = router.receive(self, routing::Millis(timeout_ms));
        } catch (const ItpError& err) {
            *ctx.err << "receive: " << err.what() << '\n';
            continue;
        }
        if (!msg.has_value()) {
            if (exit_on_idle) break;
            continue;
        }
        try {
            if (certification) {
                const Message next = certification->process(*msg);
                router.send(next);
                *ctx.out << "forwarded " << next.id.value << " to " << next.recipient.value
                         << '\n';
            } else {
                const components::PublicationRecord record = directory->process(*msg);
                *ctx.out << "application " << record.application_id.value
                         << " published=" << (record.published ? "true" : "false")
                         << " certificates=" << record.attached_count << '\n';
            }
            ++processed;
        } catch (const ItpError& err) {
            *ctx.err << err.what() << '\n';
        }
    }
    return kOk;
}

int cmd_run_scenario(Ctx& ctx, const std::string& which, const std::string& workdir,
                     unsigned seed) {
    if (which != "multicert") {
        throw ItpError(Errc::UnknownProfile, "unknown scenario: " + which);
    }
    if (workdir.empty()) throw ItpError(Errc::IoFailure, "pass --workdir");
    components::ScenarioOptions options;
    options.workdir = workdir;
    options.id_seed = seed;
    const components::ScenarioResult result = components::run_multicert_scenario(options);
    *ctx.out << "application-id: " << result.application_id.value << '\n'
             << "hop1-message-id: " << result.hop1_message_id.value << '\n'
             << "hop2-message-id: " << result.hop2_message_id.value << '\n'
             << "published: " << (result.publication.published ? "true" : "false") << '\n'
             << "certificates: " << result.publication.attached_count << '\n'
             << "notification: " << result.publication.notification_email << '\n'
             << "hop1-file: " << result.hop1_file.string() << '\n'
             << "hop2-file: " << result.hop2_file.string() << '\n'
             << "audit-log: " << result.audit_log_file.string() << '\n';
    return kOk;
}

} // namespace

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

CliConfig parse_config_text(const std::string& text) {
    CliConfig config;
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ItpError(Errc::MalformedDocument,
                           "config line " + std::to_string(line_no) + " needs name=value");
        }
        const std::string name = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (name == "registry") {
            config.registry = value;
        } else if (name == "keystore") {
            config.keystore = value;
        } else if (name == "profiles") {
            config.profiles = value;
        } else if (name == "replay-log") {
            config.replay_log = value;
        } else if (name == "audit-log") {
            config.audit_log = value;
        } else if (name == "transport") {
            config.transport = value;
        } else if (name == "publish-dir") {
            config.publish_dir = value;
        } else if (name == "outbox") {
            config.outbox = value;
        } else if (name == "ca-serials") {
            config.ca_serials = value;
        } else {
            throw ItpError(Errc::MalformedDocument,
                           "config line " + std::to_string(line_no) + ": unknown name " + name);
        }
    }
    return config;
}

// ---------------------------------------------------------------------------
// run_cli
// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Ctx ctx;
    ctx.out = &out;
    ctx.err = &err;

    CLI::App app{"ITP trustcenter message tool"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "name=value defaults file");

    // keygen
    auto* keygen = app.add_subcommand("keygen", "generate a key pair into a keystore");
    std::string kg_keystore, kg_algorithm, kg_usage = "operational-signing", kg_owner;
    keygen->add_option("--keystore", kg_keystore, "keystore path");
    keygen->add_option("--algorithm", kg_algorithm, "signature or encryption scheme id");
    keygen->add_option("--usage", kg_usage, "operational-signing | ca-signing | encryption");
    keygen->add_option("--owner", kg_owner, "owner subject DN")->required();

    // compose
    auto* compose = app.add_subcommand("compose", "build a message from a field file");
    std::string co_fields, co_profile, co_sender, co_recipient, co_id, co_app_id, co_out;
    bool co_pretty = false;
    compose->add_option("--fields", co_fields, "name=value field file")->required();
    compose->add_option("--profile", co_profile, "profile id")->required();
    compose->add_option("--sender", co_sender, "sending component")->required();
    compose->add_option("--recipient", co_recipient, "receiving component")->required();
    compose->add_option("--id", co_id, "message id (generated when absent)");
    compose->add_option("--app-id", co_app_id, "application id (generated when absent)");
    compose->add_option("--out", co_out, "output path (stdout when absent)");
    compose->add_flag("--pretty", co_pretty, "indented output");

    // sign
    auto* sign = app.add_subcommand("sign", "add a signature block");
    std::string si_msg, si_keystore, si_as, si_key_id, si_fields, si_app;
    std::string si_out;
    bool si_message = false;
    sign->add_option("message", si_msg, "message file")->required();
    sign->add_option("--keystore", si_keystore, "keystore path");
    sign->add_option("--as", si_as, "signer subject DN");
    sign->add_option("--key-id", si_key_id, "explicit key id");
    sign->add_option("--fields", si_fields, "comma list for a field-scoped signature");
    sign->add_option("--application", si_app, "application id to sign");
    sign->add_flag("--message-level", si_message, "sign at message level");
    sign->add_option("--out", si_out, "output path (in-place when absent)");

    // verify
    auto* verify = app.add_subcommand("verify", "verify every signature block");
    std::string ve_msg, ve_trust;
    verify->add_option("message", ve_msg, "message file")->required();
    verify->add_option("--trust", ve_trust, "trust store path");

    // encrypt-field / decrypt-field
    auto* encrypt = app.add_subcommand("encrypt-field", "encrypt one field for a recipient key");
    std::string en_msg, en_field, en_key, en_trust, en_app, en_out;
    encrypt->add_option("message", en_msg, "message file")->required();
    encrypt->add_option("--field", en_field, "field name")->required();
    encrypt->add_option("--recipient-key", en_key, "recipient key id")->required();
    encrypt->add_option("--trust", en_trust, "trust store path");
    encrypt->add_option("--application", en_app, "application id");
    encrypt->add_option("--out", en_out, "output path (in-place when absent)");

    auto* decrypt = app.add_subcommand("decrypt-field", "decrypt one field");
    std::string de_msg, de_field, de_trust, de_app, de_out;
    decrypt->add_option("message", de_msg, "message file")->required();
    decrypt->add_option("--field", de_field, "field name")->required();
    decrypt->add_option("--trust", de_trust, "trust store path");
    decrypt->add_option("--application", de_app, "application id");
    decrypt->add_option("--out", de_out, "rewrite message with the plaintext restored");

    // send / receive
    auto* send = app.add_subcommand("send", "deliver a message via the recipient's transport");
    std::string se_msg, se_registry;
    send->add_option("message", se_msg, "message file")->required();
    send->add_option("--registry", se_registry, "component registry path");

    auto* receive = app.add_subcommand("receive", "fetch the next pending message");
    std::string re_self, re_registry, re_out;
    int re_timeout = 1000;
    bool re_pretty = false;
    receive->add_option("--as", re_self, "receiving component name")->required();
    receive->add_option("--registry", re_registry, "component registry path");
    receive->add_option("--timeout", re_timeout, "milliseconds to wait");
    receive->add_option("--out", re_out, "output path (stdout when absent)");
    receive->add_flag("--pretty", re_pretty, "indented output");

    // inspect / validate / trace
    auto* inspect = app.add_subcommand("inspect", "pretty-print a message");
    std::string in_msg;
    inspect->add_option("message", in_msg, "message file")->required();

    auto* validate = app.add_subcommand("validate", "schema-check a message document");
    std::string va_msg;
    validate->add_option("message", va_msg, "message file")->required();

    auto* trace = app.add_subcommand("trace", "list audit events carrying an id");
    std::string tr_id, tr_audit;
    trace->add_option("id", tr_id, "message or application id")->required();
    trace->add_option("--audit", tr_audit, "audit log path");

    // run-component
    auto* run_component = app.add_subcommand("run-component", "receive/process/forward loop");
    std::string rc_name, rc_registry, rc_keystore, rc_profiles, rc_replay, rc_audit;
    std::string rc_ca_serials, rc_publish, rc_outbox;
    int rc_timeout = 1000;
    int rc_max = 0;
    bool rc_once = false, rc_idle = false;
    run_component->add_option("name", rc_name, "component name")->required();
    run_component->add_option("--registry", rc_registry, "component registry path");
    run_component->add_option("--keystore", rc_keystore, "keystore path");
    run_component->add_option("--profiles", rc_profiles, "profile config path");
    run_component->add_option("--replay", rc_replay, "replay log path");
    run_component->add_option("--audit", rc_audit, "audit log path");
    run_component->add_option("--ca-serials", rc_ca_serials, "virtual CA serial log");
    run_component->add_option("--publish-dir", rc_publish, "publication directory");
    run_component->add_option("--outbox", rc_outbox, "notification outbox path");
    run_component->add_option("--timeout", rc_timeout, "receive poll milliseconds");
    run_component->add_option("--max-messages", rc_max, "stop after N processed (0 = forever)");
    run_component->add_flag("--once", rc_once, "process exactly one message");
    run_component->add_flag("--exit-on-idle", rc_idle, "stop on the first empty poll");

    // run-scenario
    auto* run_scenario = app.add_subcommand("run-scenario", "drive a reference pipeline");
    std::string rs_which, rs_workdir;
    unsigned rs_seed = 0;
    run_scenario->add_option("scenario", rs_which, "scenario name (multicert)")->required();
    run_scenario->add_option("--workdir", rs_workdir, "working directory")->required();
    run_scenario->add_option("--seed", rs_seed, "id generator seed (0 = random)");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("itp");
    for (const auto& arg : args) argv.push_back(arg.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& help) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& parse_error) {
        err << "usage error: " << parse_error.what() << '\n';
        return kUsage;
    }

    try {
        const char* env_config = std::getenv("ITP_CONFIG");
        if (!config_path.empty()) {
            ctx.config = parse_config_text(read_file(config_path));
        } else if (env_config != nullptr && *env_config != '\0') {
            ctx.config = parse_config_text(read_file(env_config));
        }

        if (keygen->parsed()) {
            return cmd_keygen(ctx, kg_keystore, kg_algorithm, kg_usage, kg_owner);
        }
        if (compose->parsed()) {
            return cmd_compose(ctx, co_fields, co_profile, co_sender, co_recipient, co_id,
                               co_app_id, co_out, co_pretty);
        }
        if (sign->parsed()) {
            return cmd_sign(ctx, si_msg, si_keystore, si_as, si_key_id, si_fields, si_app,
                            si_message, si_out);
        }
        if (verify->parsed()) return cmd_verify(ctx, ve_msg, ve_trust);
        if (encrypt->parsed()) {
            return cmd_encrypt_field(ctx, en_msg, en_field, en_key, en_trust, en_app, en_out);
        }
        if (decrypt->parsed()) {
            return cmd_decrypt_field(ctx, de_msg, de_field, de_trust, de_app, de_out);
        }
        if (send->parsed()) return cmd_send(ctx, se_msg, se_registry);
        if (receive->parsed()) {
            return cmd_receive(ctx, re_self, re_registry, re_timeout, re_out, re_pretty);
        }
        if (inspect->parsed()) return cmd_inspect(ctx, in_msg);
        if (validate->parsed()) return cmd_validate(ctx, va_msg);
        if (trace->parsed()) return cmd_trace(ctx, tr_id, tr_audit);
        if (run_component->parsed()) {
            return cmd_run_component(ctx, rc_name, rc_registry, rc_keystore, rc_profiles,
                                     rc_replay, rc_audit, rc_ca_serials, rc_publish, rc_outbox,
                                     rc_timeout, rc_once ? 1 : rc_max, rc_idle);
        }
        if (run_scenario->parsed()) return cmd_run_scenario(ctx, rs_which, rs_workdir, rs_seed);
        err << "usage error: no subcommand\n";
        return kUsage;
    } catch (const codec::SchemaError& schema_error) {
        for (const auto& violation : schema_error.violations()) {
            err << violation.to_string() << '\n';
        }
        err << schema_error.what() << '\n';
        return exit_code_for(schema_error.code());
    } catch (const ItpError& itp_error) {
        err << itp_error.what() << '\n';
        return exit_code_for(itp_error.code());
    } catch (const std::exception& other) {
        err << "error: " << other.what() << '\n';
        return kIo;
    }
}

} // namespace itp::cli
