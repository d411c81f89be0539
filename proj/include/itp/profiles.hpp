// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_PROFILES_HPP
#define ITP_PROFILES_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "itp/model.hpp"
#include "itp/security.hpp"

// Declarative profile registry: a profile id maps to an ordered pipeline of
// stages, each declaring the fields it needs, removes and adds, its
// authorization policy and the next hop. New application kinds are a
// configuration change, not a code change.

namespace itp::profiles {

struct StageSpec {
    ComponentName component;
    std::vector<std::string> required_fields;
    std::vector<std::string> consumed_fields;  // removed after this stage
    std::vector<std::string> produced_fields;
    security::AuthorizationPolicy authorization;
    std::optional<ComponentName> next;  // nullopt = terminal stage
};

struct ProfileSpec {
    std::string profile_id;
    std::vector<StageSpec> stages;
};

// Spec invariants: ≥1 stage, distinct stage components, valid field names,
// consumed ⊆ required ∪ produced-by-earlier-stages, and each stage's next
// names the following stage (the last stage is terminal).
// Throws InconsistentSpec.
void check_spec(const ProfileSpec& spec);

class ProfileRegistry {
public:
    void register_profile(ProfileSpec spec);  // throws DuplicateProfileId, InconsistentSpec
    const ProfileSpec* find(const std::string& profile_id) const;
    const ProfileSpec& require(const std::string& profile_id) const;  // throws UnknownProfile
    const std::vector<ProfileSpec>& profiles() const { return profiles_; }

private:
    std::vector<ProfileSpec> profiles_;
};

const StageSpec& stage_of(const ProfileSpec& spec, const ComponentName& component);  // throws StageNotFound

// One "<field> missing" entry per required field absent from the application.
std::vector<std::string> validate_stage(const Application& app, const ProfileSpec& spec,
                                        const ComponentName& component);

// nullopt means the pipeline terminates at this component.
std::optional<ComponentName> next_hop(const ProfileSpec& spec, const ComponentName& component);

// The certification pipeline of the reference scenario: Registration fills
// the request, Certification (dual control: Registration signature plus two
// of the given operators) consumes subjectDN and adds the three certificate
// fields, Directory Services publishes.
ProfileSpec builtin_multicert(std::vector<std::string> operator_dns = {});

// Configuration document: <profileConfig> holding one <profileSpec id=…> per
// profile; stages as <stage component=… next=…> with <requires>/<consumes>/
// <produces> field entries and an optional <authorization operators=…> block
// of <signer> and <operator> entries.
std::string serialize_config(const std::vector<ProfileSpec>& specs);
std::vector<ProfileSpec> parse_config(const std::string& text);  // throws MalformedDocument
void save_config(const std::filesystem::path& path, const std::vector<ProfileSpec>& specs);
std::vector<ProfileSpec> load_config(const std::filesystem::path& path);  // throws IoFailure

} // namespace itp::profiles

#endif // ITP_PROFILES_HPP
