#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hsdef {

/// Entry point of the command-line tool. Returns 0 on success, 1 on a
/// validation or configuration error, 2 on a runtime or backend error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hsdef
