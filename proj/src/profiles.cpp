// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#include "itp/profiles.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "itp/errors.hpp"
#include "itp/xml.hpp"

namespace itp::profiles {

// ---------------------------------------------------------------------------
// Spec checking
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void inconsistent(const std::string& profile_id, const std::string& detail) {
    throw ItpError(Errc::InconsistentSpec, "profile " + profile_id + ": " + detail);
}

void check_field_names(const std::string& profile_id, const StageSpec& stage,
                       const std::vector<std::string>& names, const char* set_name) {
    std::set<std::string> seen;
    for (const auto& name : names) {
        if (!is_valid_field_name(name)) {
            inconsistent(profile_id, "stage " + stage.component.value + ": bad field name in " +
                                         set_name + ": " + name);
        }
        if (!seen.insert(name).second) {
            inconsistent(profile_id, "stage " + stage.component.value + ": duplicate " +
                                         set_name + " entry " + name);
        }
    }
}

} // namespace

void check_spec(const ProfileSpec& spec) {
    if (spec.profile_id.empty()) {
        throw ItpError(Errc::InconsistentSpec, "profile id must be non-empty");
    }
    if (spec.stages.empty()) inconsistent(spec.profile_id, "needs at least one stage");

    std::set<std::string> components;
    std::set<std::string> available;  // produced by earlier stages
    for (std::size_t i = 0; i < spec.stages.size(); ++i) {
        const StageSpec& stage = spec.stages[i];
        if (!is_valid_component_name(stage.component.value)) {
            inconsistent(spec.profile_id, "bad stage component name");
        }
        if (!components.insert(stage.component.value).second) {
            inconsistent(spec.profile_id, "stage component " + stage.component.value + " repeats");
        }
        check_field_names(spec.profile_id, stage, stage.required_fields, "requires");
        check_field_names(spec.profile_id, stage, stage.consumed_fields, "consumes");
        check_field_names(spec.profile_id, stage, stage.produced_fields, "produces");

        for (const auto& name : stage.consumed_fields) {
            const bool required = std::find(stage.required_fields.begin(),
                                            stage.required_fields.end(),
                                            name) != stage.required_fields.end();
            if (!required && available.count(name) == 0) {
                inconsistent(spec.profile_id, "stage " + stage.component.value + " consumes " +
                                                  name + " which no earlier stage provides");
            }
        }

        const bool last = i + 1 == spec.stages.size();
        if (last) {
            if (stage.next.has_value()) {
                inconsistent(spec.profile_id, "last stage must be terminal");
            }
        } else {
            if (!stage.next.has_value() ||
                stage.next->value != spec.stages[i + 1].component.value) {
                inconsistent(spec.profile_id, "stage " + stage.component.value +
                                                  " must name the following stage as next hop");
            }
        }

        for (const auto& signer : stage.authorization.required_signers) {
            if (signer.empty()) inconsistent(spec.profile_id, "empty required signer");
        }
        for (const auto& dn : stage.authorization.eligible_operators) {
            if (dn.empty()) inconsistent(spec.profile_id, "empty eligible operator");
        }

        for (const auto& name : stage.produced_fields) available.insert(name);
    }
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

void ProfileRegistry::register_profile(ProfileSpec spec) {
    check_spec(spec);
    if (find(spec.profile_id) != nullptr) {
        throw ItpError(Errc::DuplicateProfileId, spec.profile_id + " already registered");
    }
    profiles_.push_back(std::move(spec));
}

const ProfileSpec* ProfileRegistry::find(const std::string& profile_id) const {
    for (const auto& spec : profiles_) {
        if (spec.profile_id == profile_id) return &spec;
    }
    return nullptr;
}

const ProfileSpec& ProfileRegistry::require(const std::string& profile_id) const {
    const ProfileSpec* spec = find(profile_id);
    if (spec == nullptr) {
        throw ItpError(Errc::UnknownProfile, "no profile with id " + profile_id);
    }
    return *spec;
}

// ---------------------------------------------------------------------------
// Stage queries
// ---------------------------------------------------------------------------

const StageSpec& stage_of(const ProfileSpec& spec, const ComponentName& component) {
    for (const auto& stage : spec.stages) {
        if (stage.component.value == component.value) return stage;
    }
    throw ItpError(Errc::StageNotFound,
                   component.value + " is not a stage of profile " + spec.profile_id);
}

std::vector<std::string> validate_stage(const Application& app, const ProfileSpec& spec,
                                        const ComponentName& component) {
    const StageSpec& stage = stage_of(spec, component);
    std::vector<std::string> violations;
    for (const auto& name : stage.required_fields) {
        if (!has_field(app, name)) violations.push_back(name + " missing");
    }
    return violations;
}

std::optional<ComponentName> next_hop(const ProfileSpec& spec, const ComponentName& component) {
    return stage_of(spec, component).next;
}

// ---------------------------------------------------------------------------
// Built-in MultiCert
// ---------------------------------------------------------------------------

ProfileSpec builtin_multicert(std::vector<std::string> operator_dns) {
    ProfileSpec spec;
    spec.profile_id = "MultiCert";

    StageSpec registration;
    registration.component = ComponentName{"Registration"};
    registration.produced_fields = {"clientName", "subjectDN", "revocationPassword", "email",
                                    "publiclyAvailable"};
    registration.next = ComponentName{"Certification"};
    spec.stages.push_back(std::move(registration));

    StageSpec certification;
    certification.component = ComponentName{"Certification"};
    certification.required_fields = {"clientName", "subjectDN", "revocationPassword", "email",
                                     "publiclyAvailable"};
    certification.consumed_fields = {"subjectDN"};
    certification.produced_fields = {"encCertificate", "signCertificate", "nonRepCertificate"};
    certification.authorization.required_signers = {"Registration"};
    certification.authorization.required_operators = 2;
    certification.authorization.eligible_operators = std::move(operator_dns);
    certification.next = ComponentName{"Directory Services"};
    spec.stages.push_back(std::move(certification));

    StageSpec directory;
    directory.component = ComponentName{"Directory Services"};
    directory.required_fields = {"encCertificate", "signCertificate", "nonRepCertificate",
                                 "email", "publiclyAvailable"};
    spec.stages.push_back(std::move(directory));

    return spec;
}

// ---------------------------------------------------------------------------
// Configuration document
// ---------------------------------------------------------------------------

namespace {

xml::Node node_of(const std::string& name, std::string text = "") {
    xml::Node node;
    node.name = name;
    node.text = std::move(text);
    return node;
}

xml::Node stage_to_node(const StageSpec& stage) {
    xml::Node node = node_of("stage");
    node.attributes.push_back({"component", stage.component.value});
    if (stage.next.has_value()) node.attributes.push_back({"next", stage.next->value});
    for (const auto& name : stage.required_fields) node.children.push_back(node_of("requires", name));
    for (const auto& name : stage.consumed_fields) node.children.push_back(node_of("consumes", name));
    for (const auto& name : stage.produced_fields) node.children.push_back(node_of("produces", name));

    const security::AuthorizationPolicy& policy = stage.authorization;
    if (!policy.required_signers.empty() || policy.required_operators > 0 ||
        !policy.eligible_operators.empty()) {
        xml::Node authorization = node_of("authorization");
        authorization.attributes.push_back(
            {"operators", std::to_string(policy.required_operators)});
        for (const auto& signer : policy.required_signers) {
            authorization.children.push_back(node_of("signer", signer));
        }
        for (const auto& dn : policy.eligible_operators) {
            authorization.children.push_back(node_of("operator", dn));
        }
        node.children.push_back(std::move(authorization));
    }
    return node;
}

[[noreturn]] void bad_config(const std::string& detail) {
    throw ItpError(Errc::MalformedDocument, "profile config: " + detail);
}

security::AuthorizationPolicy parse_authorization(const xml::Node& node) {
    security::AuthorizationPolicy policy;
    const std::string* operators = node.attribute("operators");
    if (operators != nullptr) {
        try {
            const long count = std::stol(*operators);
            if (count < 0) bad_config("negative operators count");
            policy.required_operators = static_cast<std::size_t>(count);
        } catch (const std::exception&) {
            bad_config("bad operators count: " + *operators);
        }
    }
    for (const auto& child : node.children) {
        if (child.name == "signer") {
            policy.required_signers.push_back(child.text);
        } else if (child.name == "operator") {
            policy.eligible_operators.push_back(child.text);
        } else {
            bad_config("unexpected element " + child.name + " in authorization");
        }
    }
    return policy;
}

StageSpec parse_stage(const xml::Node& node) {
    StageSpec stage;
    const std::string* component = node.attribute("component");
    if (component == nullptr) bad_config("stage without component attribute");
    stage.component = ComponentName{*component};
    const std::string* next = node.attribute("next");
    if (next != nullptr && !next->empty()) stage.next = ComponentName{*next};

    bool saw_authorization = false;
    for (const auto& child : node.children) {
        if (child.name == "requires") {
            stage.required_fields.push_back(child.text);
        } else if (child.name == "consumes") {
            stage.consumed_fields.push_back(child.text);
        } else if (child.name == "produces") {
            stage.produced_fields.push_back(child.text);
        } else if (child.name == "authorization") {
            if (saw_authorization) bad_config("stage with two authorization blocks");
            saw_authorization = true;
            stage.authorization = parse_authorization(child);
        } else {
            bad_config("unexpected element " + child.name + " in stage");
        }
    }
    return stage;
}

} // namespace

std::string serialize_config(const std::vector<ProfileSpec>& specs) {
    xml::Node root = node_of("profileConfig");
    root.attributes.push_back({"version", kProtocolVersion});
    for (const auto& spec : specs) {
        xml::Node profile = node_of("profileSpec");
        profile.attributes.push_back({"id", spec.profile_id});
        for (const auto& stage : spec.stages) profile.children.push_back(stage_to_node(stage));
        root.children.push_back(std::move(profile));
    }
    return xml::write_pretty(root);
}

std::vector<ProfileSpec> parse_config(const std::string& text) {
    const xml::Node root = xml::read_document(text);
    if (root.name != "profileConfig") bad_config("root element must be profileConfig");
    std::vector<ProfileSpec> specs;
    for (const auto& child : root.children) {
        if (child.name != "profileSpec") bad_config("unexpected element " + child.name);
        const std::string* id = child.attribute("id");
        if (id == nullptr || id->empty()) bad_config("profileSpec without id");
        ProfileSpec spec;
        spec.profile_id = *id;
        for (const auto& stage_node : child.children) {
            if (stage_node.name != "stage") {
                bad_config("unexpected element " + stage_node.name + " in profileSpec");
            }
            spec.stages.push_back(parse_stage(stage_node));
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

void save_config(const std::filesystem::path& path, const std::vector<ProfileSpec>& specs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << serialize_config(specs)).flush()) {
        throw ItpError(Errc::IoFailure, "cannot write " + path.string());
    }
}

std::vector<ProfileSpec> load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ItpError(Errc::IoFailure, "cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

} // namespace itp::profiles
