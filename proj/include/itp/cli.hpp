// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_CLI_HPP
#define ITP_CLI_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

// Scriptable command-line surface. Exit codes: 0 success, 1 validation or
// verification failure, 2 usage error, 3 I/O or transport failure.

namespace itp::cli {

// Defaults shared by subcommands, loadable from a `name=value` file named by
// --config or the ITP_CONFIG environment variable. Recognized names:
// registry, keystore, profiles, replay-log, audit-log, transport,
// publish-dir, outbox, ca-serials.
struct CliConfig {
    std::optional<std::string> registry;
    std::optional<std::string> keystore;
    std::optional<std::string> profiles;
    std::optional<std::string> replay_log;
    std::optional<std::string> audit_log;
    std::optional<std::string> transport;
    std::optional<std::string> publish_dir;
    std::optional<std::string> outbox;
    std::optional<std::string> ca_serials;
};

CliConfig parse_config_text(const std::string& text);  // throws MalformedDocument

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace itp::cli

#endif // ITP_CLI_HPP
