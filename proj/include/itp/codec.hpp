// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_CODEC_HPP
#define ITP_CODEC_HPP

#include <string>
#include <vector>

#include "itp/errors.hpp"
#include "itp/model.hpp"

// Canonical document form. serialize is a pure function of the model:
// fixed element order (sender, recipient, applications, message signatures;
// profile before application signatures), fixed attribute order (version
// before id), explicit end tags, no whitespace between elements, UTF-8,
// escaped character data. parse accepts pretty-printed input and discards
// whitespace between elements; character data of leaf elements is preserved
// verbatim. Signing and verification consume these bytes, so the canonical
// rules are part of the wire contract.

namespace itp::codec {

using CanonicalBytes = std::string;  // UTF-8, canonical form

struct SchemaViolation {
    std::string path;    // e.g. /message/application[1]/profile
    std::string rule;
    std::string detail;

    std::string to_string() const;

    friend bool operator==(const SchemaViolation&, const SchemaViolation&) = default;
};

// Raised by parse when the document is well-formed XML but violates the
// message grammar, and by serialize via InvalidModel when the model does.
class SchemaError : public ItpError {
public:
    SchemaError(Errc code, std::vector<SchemaViolation> violations);

    const std::vector<SchemaViolation>& violations() const { return violations_; }

private:
    std::vector<SchemaViolation> violations_;
};

// Empty when every model invariant holds.
std::vector<SchemaViolation> validate(const Message& msg);

// Canonical bytes of a valid message. Throws SchemaError(InvalidModel).
CanonicalBytes serialize(const Message& msg);

// Human-readable rendering (2-space indent); parses back to the same model.
std::string pretty_print(const Message& msg);

// Throws ItpError(MalformedDocument) for non-well-formed input and
// SchemaError(SchemaViolations) for grammar violations. Unknown child
// elements of <profile> are accepted as profile fields; comments and
// processing instructions are rejected inside <profile> and ignored
// elsewhere.
Message parse(const std::string& bytes);

// Signing input for an application-level signature.
//   whole-application scope: the <application> element with every signature
//   block excluded (enveloped semantics).
//   field-list scope: the listed fields in listed order, each wrapped in a
//   binding envelope carrying the application id and profile id, so equal
//   values in different applications never share bytes.
// Throws ItpError(UnknownScopeField).
CanonicalBytes canonicalize_scope(const Application& app, const SignatureScope& scope);

// Signing input for a message-level signature: the canonical message with
// message-level signature blocks excluded (application-level blocks stay).
CanonicalBytes canonicalize_message(const Message& msg);

} // namespace itp::codec

#endif // ITP_CODEC_HPP
