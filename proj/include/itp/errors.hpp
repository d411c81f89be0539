// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_ERRORS_HPP
#define ITP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace itp {

// Failure categories raised across the library. Operations whose contract
// treats a failure as a normal outcome (validate, verify, admit, authorize)
// return it as a value instead of throwing.
enum class Errc {
    EmptyMessage,
    DuplicateApplicationId,
    InvalidFieldName,
    InvalidIdentifier,
    InvalidModel,
    MalformedDocument,
    SchemaViolations,
    UnknownScopeField,
    UnsupportedAlgorithm,
    UsageViolation,
    FieldAbsent,
    AlreadyEncrypted,
    NotEncrypted,
    DecryptionFailure,
    DuplicateComponentName,
    UnknownComponent,
    TransportFailure,
    MisroutedMessage,
    StorePersistenceFailure,
    DuplicateProfileId,
    UnknownProfile,
    InconsistentSpec,
    StageNotFound,
    StageValidationFailed,
    CredentialRejected,
    ReplayRejected,
    SignatureInvalid,
    AuthorizationDenied,
    ChainBroken,
    CryptoFailure,
    IoFailure,
};

const char* errc_name(Errc code);

class ItpError : public std::runtime_error {
public:
    ItpError(Errc code, const std::string& detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

} // namespace itp

#endif // ITP_ERRORS_HPP
