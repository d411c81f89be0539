// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#include "itp/codec.hpp"

#include <unordered_set>

#include "itp/xml.hpp"

namespace itp::codec {

namespace {

constexpr const char* kSignatureTag = "ds:Signature";

bool is_clean_text(const std::string& text) {
    if (!is_valid_utf8(text)) return false;
    for (unsigned char c : text) {
        if (c < 0x20 && c != '\t' && c != '\n' && c != '\r') return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// canonical writing
// ---------------------------------------------------------------------------

void write_field(xml::Writer& w, const ProfileField& field) {
    if (const std::string* text = std::get_if<std::string>(&field.value)) {
        w.leaf(field.name, *text);
    } else {
        const EncryptedField& enc = std::get<EncryptedField>(field.value);
        w.open(field.name, {{"encrypted", enc.algorithm_id}, {"recipientKey", enc.recipient_key_id}});
        w.leaf("cipherValue", enc.ciphertext_b64);
        w.leaf("wrappedContentKey", enc.wrapped_key_b64);
        w.close(field.name);
    }
}

void write_signature(xml::Writer& w, const SignatureBlock& block) {
    w.open(kSignatureTag);
    w.leaf("signerSubjectDN", block.signer_subject_dn);
    w.leaf("keyId", block.key_id);
    w.leaf("algorithm", block.algorithm_id);
    w.leaf("digestAlgorithm", block.digest_algorithm_id);
    if (block.scope.all) {
        w.open("scope", {{"type", "all"}}).close("scope");
    } else {
        w.open("scope", {{"type", "fields"}});
        for (const std::string& name : block.scope.fields) w.leaf("field", name);
        w.close("scope");
    }
    w.leaf("createdAt", block.created_at);
    w.leaf("signatureValue", block.signature_b64);
    w.close(kSignatureTag);
}

void write_application(xml::Writer& w, const Application& app, bool with_signatures) {
    w.open("application", {{"id", app.id.value}});
    w.open("profile", {{"id", app.profile_id}});
    for (const ProfileField& field : app.fields) write_field(w, field);
    w.close("profile");
    if (with_signatures) {
        for (const SignatureBlock& block : app.signatures) write_signature(w, block);
    }
    w.close("application");
}

void write_message(xml::Writer& w, const Message& msg, bool with_message_signatures) {
    w.open("message", {{"version", msg.version}, {"id", msg.id.value}});
    w.leaf("sender", msg.sender.value);
    w.leaf("recipient", msg.recipient.value);
    for (const Application& app : msg.applications) write_application(w, app, true);
    if (with_message_signatures) {
        for (const SignatureBlock& block : msg.signatures) write_signature(w, block);
    }
    w.close("message");
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

class Violations {
public:
    void add(std::string path, std::string rule, std::string detail) {
        list_.push_back({std::move(path), std::move(rule), std::move(detail)});
    }
    std::vector<SchemaViolation> take() { return std::move(list_); }
    bool empty() const { return list_.empty(); }

private:
    std::vector<SchemaViolation> list_;
};

void validate_signature_block(const SignatureBlock& block, const std::string& path, Violations& v) {
    if (block.signer_subject_dn.empty() || !is_clean_text(block.signer_subject_dn))
        v.add(path + "/signerSubjectDN", "signer-subject-dn", "must be non-empty text");
    if (block.key_id.empty() || !is_valid_identifier(block.key_id))
        v.add(path + "/keyId", "key-id", "must be a valid identifier");
    if (block.algorithm_id.empty() || !is_clean_text(block.algorithm_id))
        v.add(path + "/algorithm", "algorithm-id", "must be non-empty text");
    if (block.digest_algorithm_id.empty() || !is_clean_text(block.digest_algorithm_id))
        v.add(path + "/digestAlgorithm", "digest-algorithm-id", "must be non-empty text");
    if (!block.scope.all) {
        if (block.scope.fields.empty())
            v.add(path + "/scope", "scope", "field scope must list at least one field");
        for (const std::string& name : block.scope.fields) {
            if (!is_valid_field_name(name))
                v.add(path + "/scope", "scope-field-name", "invalid field name: " + name);
        }
    }
    if (block.created_at.empty() || !is_clean_text(block.created_at))
        v.add(path + "/createdAt", "created-at", "must be non-empty text");
    if (!is_base64(block.signature_b64))
        v.add(path + "/signatureValue", "signature-value", "must decode from base64");
}

void validate_application(const Application& app, const std::string& path, Violations& v) {
    if (!is_valid_identifier(app.id.value))
        v.add(path + "/@id", "application-id", "invalid identifier: " + app.id.value);
    if (app.profile_id.empty() || !is_clean_text(app.profile_id))
        v.add(path + "/profile/@id", "profile-id", "must be non-empty text");
    std::unordered_set<std::string> names;
    for (std::size_t i = 0; i < app.fields.size(); ++i) {
        const ProfileField& field = app.fields[i];
        std::string fpath = path + "/profile/" + (field.name.empty() ? "field" : field.name) +
                            "[" + std::to_string(i + 1) + "]";
        if (!is_valid_field_name(field.name)) {
            v.add(fpath, "field-name", "invalid element name: " + field.name);
        } else if (!names.insert(field.name).second) {
            v.add(fpath, "field-name-unique", "duplicate field name: " + field.name);
        }
        if (const std::string* text = std::get_if<std::string>(&field.value)) {
            if (!is_clean_text(*text))
                v.add(fpath, "field-value", "plaintext value must be UTF-8 text");
        } else {
            const EncryptedField& enc = std::get<EncryptedField>(field.value);
            if (enc.algorithm_id.empty() || !is_clean_text(enc.algorithm_id))
                v.add(fpath, "encrypted-algorithm", "must be non-empty text");
            if (enc.recipient_key_id.empty() || !is_valid_identifier(enc.recipient_key_id))
                v.add(fpath, "encrypted-recipient", "must be a valid key id");
            if (!is_base64(enc.ciphertext_b64))
                v.add(fpath + "/cipherValue", "encrypted-ciphertext", "must decode from base64");
            if (!is_base64(enc.wrapped_key_b64))
                v.add(fpath + "/wrappedContentKey", "encrypted-wrapped-key", "must decode from base64");
        }
    }
    for (std::size_t i = 0; i < app.signatures.size(); ++i) {
        validate_signature_block(app.signatures[i],
                                 path + "/ds:Signature[" + std::to_string(i + 1) + "]", v);
    }
}

// ---------------------------------------------------------------------------
// binding (XML tree -> model)
// ---------------------------------------------------------------------------

class Binder {
public:
    Message bind(const xml::Node& root) {
        if (root.name != "message") {
            v_.add("/", "root-element", "expected <message>, found <" + root.name + ">");
            throw_violations();
        }
        Message msg;
        bind_message(root, msg);
        throw_violations();
        return msg;
    }

private:
    void throw_violations() {
        if (!v_.empty()) throw SchemaError(Errc::SchemaViolations, v_.take());
    }

    // text of a leaf element; whitespace-only text between child elements is
    // insignificant and discarded, mixed content is rejected
    std::string leaf_text(const xml::Node& node, const std::string& path) {
        if (!node.children.empty()) {
            v_.add(path, "leaf", "<" + node.name + "> must not contain child elements");
            return {};
        }
        return node.text;
    }

    void check_container_text(const xml::Node& node, const std::string& path) {
        if (!node.children.empty() && !node.text_is_whitespace())
            v_.add(path, "mixed-content", "character data mixed with child elements");
    }

    void check_attributes(const xml::Node& node, const std::string& path,
                          std::initializer_list<const char*> allowed) {
        for (const auto& [name, _] : node.attributes) {
            bool ok = false;
            for (const char* a : allowed) {
                if (name == a) ok = true;
            }
            if (!ok) v_.add(path, "attribute", "unexpected attribute " + name + " on <" + node.name + ">");
        }
    }

    std::string required_attribute(const xml::Node& node, const char* name, const std::string& path) {
        if (const std::string* value = node.attribute(name)) return *value;
        v_.add(path, "attribute", std::string("missing attribute ") + name + " on <" + node.name + ">");
        return {};
    }

    void bind_message(const xml::Node& node, Message& msg) {
        const std::string path = "/message";
        check_attributes(node, path, {"version", "id"});
        msg.version = required_attribute(node, "version", path + "/@version");
        if (!msg.version.empty() && msg.version != kProtocolVersion)
            v_.add(path + "/@version", "version", "unsupported version \"" + msg.version + "\"");
        msg.id.value = required_attribute(node, "id", path + "/@id");
        if (!msg.id.value.empty() && !is_valid_identifier(msg.id.value))
            v_.add(path + "/@id", "message-id", "invalid identifier: " + msg.id.value);
        check_container_text(node, path);

        int senders = 0, recipients = 0, app_index = 0, sig_index = 0;
        for (const xml::Node& child : node.children) {
            if (child.name == "sender") {
                ++senders;
                msg.sender.value = leaf_text(child, path + "/sender");
            } else if (child.name == "recipient") {
                ++recipients;
                msg.recipient.value = leaf_text(child, path + "/recipient");
            } else if (child.name == "application") {
                ++app_index;
                Application app;
                bind_application(child, path + "/application[" + std::to_string(app_index) + "]", app);
                msg.applications.push_back(std::move(app));
            } else if (child.name == kSignatureTag) {
                ++sig_index;
                SignatureBlock block;
                bind_signature(child, path + "/ds:Signature[" + std::to_string(sig_index) + "]", block);
                msg.signatures.push_back(std::move(block));
            } else {
                v_.add(path, "element", "unexpected element <" + child.name + "> in <message>");
            }
        }
        if (senders != 1)
            v_.add(path + "/sender", "sender", "exactly one <sender> required, found " + std::to_string(senders));
        if (recipients != 1)
            v_.add(path + "/recipient", "recipient",
                   "exactly one <recipient> required, found " + std::to_string(recipients));
        if (senders == 1 && !is_valid_component_name(msg.sender.value))
            v_.add(path + "/sender", "component-name", "invalid component name");
        if (recipients == 1 && !is_valid_component_name(msg.recipient.value))
            v_.add(path + "/recipient", "component-name", "invalid component name");
        if (app_index == 0)
            v_.add(path, "applications", "a message must contain at least one <application>");
        std::unordered_set<std::string> ids;
        for (std::size_t i = 0; i < msg.applications.size(); ++i) {
            const std::string& id = msg.applications[i].id.value;
            if (!id.empty() && !ids.insert(id).second)
                v_.add(path + "/application[" + std::to_string(i + 1) + "]/@id",
                       "application-id-unique", "duplicate application id: " + id);
        }
    }

    void bind_application(const xml::Node& node, const std::string& path, Application& app) {
        check_attributes(node, path, {"id"});
        app.id.value = required_attribute(node, "id", path + "/@id");
        if (!app.id.value.empty() && !is_valid_identifier(app.id.value))
            v_.add(path + "/@id", "application-id", "invalid identifier: " + app.id.value);
        check_container_text(node, path);

        int profiles = 0, sig_index = 0;
        for (const xml::Node& child : node.children) {
            if (child.name == "profile") {
                ++profiles;
                if (profiles == 1) bind_profile(child, path + "/profile", app);
            } else if (child.name == kSignatureTag) {
                ++sig_index;
                SignatureBlock block;
                bind_signature(child, path + "/ds:Signature[" + std::to_string(sig_index) + "]", block);
                app.signatures.push_back(std::move(block));
            } else {
                v_.add(path, "element", "unexpected element <" + child.name + "> in <application>");
            }
        }
        if (profiles != 1)
            v_.add(path + "/profile", "profile",
                   "exactly one <profile> required, found " + std::to_string(profiles));
    }

    void bind_profile(const xml::Node& node, const std::string& path, Application& app) {
        check_attributes(node, path, {"id"});
        app.profile_id = required_attribute(node, "id", path + "/@id");
        if (app.profile_id.empty())
            v_.add(path + "/@id", "profile-id", "must be non-empty");
        check_container_text(node, path);
        if (node.markup_anywhere())
            v_.add(path, "profile-content",
                   "comments and processing instructions are not allowed inside <profile>");

        std::unordered_set<std::string> names;
        int index = 0;
        for (const xml::Node& child : node.children) {
            ++index;
            std::string fpath = path + "/" + child.name + "[" + std::to_string(index) + "]";
            ProfileField field;
            field.name = child.name;
            if (!is_valid_field_name(child.name))
                v_.add(fpath, "field-name", "invalid element name: " + child.name);
            else if (!names.insert(child.name).second)
                v_.add(fpath, "field-name-unique", "duplicate field name: " + child.name);
            bind_field_value(child, fpath, field);
            app.fields.push_back(std::move(field));
        }
    }

    void bind_field_value(const xml::Node& node, const std::string& path, ProfileField& field) {
        if (node.attributes.empty()) {
            field.value = leaf_text(node, path);
            return;
        }
        check_attributes(node, path, {"encrypted", "recipientKey"});
        EncryptedField enc;
        enc.algorithm_id = required_attribute(node, "encrypted", path);
        enc.recipient_key_id = required_attribute(node, "recipientKey", path);
        check_container_text(node, path);
        bool cipher = false, wrapped = false;
        for (const xml::Node& child : node.children) {
            if (child.name == "cipherValue" && !cipher) {
                cipher = true;
                enc.ciphertext_b64 = leaf_text(child, path + "/cipherValue");
            } else if (child.name == "wrappedContentKey" && !wrapped) {
                wrapped = true;
                enc.wrapped_key_b64 = leaf_text(child, path + "/wrappedContentKey");
            } else {
                v_.add(path, "encrypted-shape",
                       "unexpected element <" + child.name + "> in encrypted field");
            }
        }
        if (!cipher) v_.add(path, "encrypted-shape", "missing <cipherValue>");
        if (!wrapped) v_.add(path, "encrypted-shape", "missing <wrappedContentKey>");
        if (cipher && !is_base64(enc.ciphertext_b64))
            v_.add(path + "/cipherValue", "encrypted-ciphertext", "must decode from base64");
        if (wrapped && !is_base64(enc.wrapped_key_b64))
            v_.add(path + "/wrappedContentKey", "encrypted-wrapped-key", "must decode from base64");
        field.value = std::move(enc);
    }

    void bind_signature(const xml::Node& node, const std::string& path, SignatureBlock& block) {
        check_attributes(node, path, {});
        check_container_text(node, path);
        bool seen[6] = {};
        bool scope_seen = false;
        for (const xml::Node& child : node.children) {
            if (child.name == "signerSubjectDN" && !seen[0]) {
                seen[0] = true;
                block.signer_subject_dn = leaf_text(child, path + "/signerSubjectDN");
            } else if (child.name == "keyId" && !seen[1]) {
                seen[1] = true;
                block.key_id = leaf_text(child, path + "/keyId");
            } else if (child.name == "algorithm" && !seen[2]) {
                seen[2] = true;
                block.algorithm_id = leaf_text(child, path + "/algorithm");
            } else if (child.name == "digestAlgorithm" && !seen[3]) {
                seen[3] = true;
                block.digest_algorithm_id = leaf_text(child, path + "/digestAlgorithm");
            } else if (child.name == "createdAt" && !seen[4]) {
                seen[4] = true;
                block.created_at = leaf_text(child, path + "/createdAt");
            } else if (child.name == "signatureValue" && !seen[5]) {
                seen[5] = true;
                block.signature_b64 = leaf_text(child, path + "/signatureValue");
            } else if (child.name == "scope" && !scope_seen) {
                scope_seen = true;
                bind_scope(child, path + "/scope", block.scope);
            } else {
                v_.add(path, "signature-shape",
                       "unexpected or repeated element <" + child.name + "> in signature block");
            }
        }
        const char* required[6] = {"signerSubjectDN", "keyId", "algorithm",
                                   "digestAlgorithm", "createdAt", "signatureValue"};
        for (int i = 0; i < 6; ++i) {
            if (!seen[i])
                v_.add(path, "signature-shape", std::string("missing <") + required[i] + ">");
        }
        if (!scope_seen) v_.add(path, "signature-shape", "missing <scope>");
        validate_signature_block(block, path, v_);
    }

    void bind_scope(const xml::Node& node, const std::string& path, SignatureScope& scope) {
        check_attributes(node, path, {"type"});
        std::string type = required_attribute(node, "type", path);
        if (type == "all") {
            scope = SignatureScope::whole();
            if (!node.children.empty() || !node.text_is_whitespace())
                v_.add(path, "scope", "scope type \"all\" carries no content");
        } else if (type == "fields") {
            scope.all = false;
            check_container_text(node, path);
            for (const xml::Node& child : node.children) {
                if (child.name == "field")
                    scope.fields.push_back(leaf_text(child, path + "/field"));
                else
                    v_.add(path, "scope", "unexpected element <" + child.name + "> in scope");
            }
        } else {
            v_.add(path, "scope", "unknown scope type \"" + type + "\"");
        }
    }

    Violations v_;
};

}  // namespace

std::string SchemaViolation::to_string() const {
    return path + ": " + rule + ": " + detail;
}

SchemaError::SchemaError(Errc code, std::vector<SchemaViolation> violations)
    : ItpError(code, violations.empty()
                         ? "no detail"
                         : violations.front().to_string() +
                               (violations.size() > 1
                                    ? " (+" + std::to_string(violations.size() - 1) + " more)"
                                    : "")),
      violations_(std::move(violations)) {}

std::vector<SchemaViolation> validate(const Message& msg) {
    Violations v;
    const std::string path = "/message";
    if (msg.version != kProtocolVersion)
        v.add(path + "/@version", "version", "unsupported version \"" + msg.version + "\"");
    if (!is_valid_identifier(msg.id.value))
        v.add(path + "/@id", "message-id", "invalid identifier: " + msg.id.value);
    if (!is_valid_component_name(msg.sender.value))
        v.add(path + "/sender", "component-name", "invalid component name");
    if (!is_valid_component_name(msg.recipient.value))
        v.add(path + "/recipient", "component-name", "invalid component name");
    if (msg.applications.empty())
        v.add(path, "applications", "a message must contain at least one <application>");
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < msg.applications.size(); ++i) {
        std::string apath = path + "/application[" + std::to_string(i + 1) + "]";
        const Application& app = msg.applications[i];
        if (is_valid_identifier(app.id.value) && !ids.insert(app.id.value).second)
            v.add(apath + "/@id", "application-id-unique",
                  "duplicate application id: " + app.id.value);
        validate_application(app, apath, v);
    }
    for (std::size_t i = 0; i < msg.signatures.size(); ++i) {
        validate_signature_block(msg.signatures[i],
                                 path + "/ds:Signature[" + std::to_string(i + 1) + "]", v);
    }
    return v.take();
}

CanonicalBytes serialize(const Message& msg) {
    std::vector<SchemaViolation> violations = validate(msg);
    if (!violations.empty()) throw SchemaError(Errc::InvalidModel, std::move(violations));
    xml::Writer w;
    write_message(w, msg, true);
    return w.take();
}

std::string pretty_print(const Message& msg) {
    std::vector<SchemaViolation> violations = validate(msg);
    if (!violations.empty()) throw SchemaError(Errc::InvalidModel, std::move(violations));
    xml::Writer w;
    write_message(w, msg, true);
    return xml::write_pretty(xml::read_document(w.str()));
}

Message parse(const std::string& bytes) {
    xml::Node root = xml::read_document(bytes);
    Binder binder;
    return binder.bind(root);
}

CanonicalBytes canonicalize_scope(const Application& app, const SignatureScope& scope) {
    xml::Writer w;
    if (scope.all) {
        write_application(w, app, false);
        return w.take();
    }
    for (const std::string& name : scope.fields) {
        auto value = get_field(app, name);
        if (!value) throw ItpError(Errc::UnknownScopeField, name);
        w.open("bound", {{"application", app.id.value}, {"profile", app.profile_id}});
        write_field(w, ProfileField{name, *value});
        w.close("bound");
    }
    return w.take();
}

CanonicalBytes canonicalize_message(const Message& msg) {
    xml::Writer w;
    write_message(w, msg, false);
    return w.take();
}

} // namespace itp::codec
