#ifndef RISKREGION_TOOLS_CLI_HPP
#define RISKREGION_TOOLS_CLI_HPP

// Command-line front end. Every command writes its outputs and a manifest
// (manifest.txt) into the output directory; the manifest is a config file
// holding the fully resolved settings, so
//
//   riskregion --config out/manifest.txt --out replay
//
// re-executes the run.

#include <iosfwd>
#include <string>
#include <vector>

#include "riskregion/table_io.hpp"

namespace riskregion::cli {

/// X_{i,j} = log(Y_{i+1,j} / Y_{i,j}) for the selected price columns, given
/// by header name or 1-based index (all columns when empty).
NumericTable log_returns(const NumericTable& prices, const std::vector<std::string>& columns);

/// Reads "key = value" lines ('#' comments, TOML-style lists) and splices the
/// keys into the argument list as --key flags. Keys already given as flags
/// are skipped, so flags win over the file. A `command` key supplies the
/// subcommand when the arguments name none.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

/// Arguments without the program name. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace riskregion::cli

#endif  // RISKREGION_TOOLS_CLI_HPP
