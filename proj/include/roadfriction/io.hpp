// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace roadfriction {

std::string read_file(const std::filesystem::path& path);

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written output.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

}  // namespace roadfriction
