#pragma once

#include <string_view>
#include <vector>

namespace hsdef {

/// Contents of a file under data/, compiled into the library. `path` is
/// relative to data/, e.g. "taxonomy/spans.json". Throws ConfigError if absent.
std::string_view embedded_file(std::string_view path);

std::vector<std::string_view> embedded_files();

} // namespace hsdef
