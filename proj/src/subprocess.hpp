#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace churnforge::detail {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs argv[0] (PATH lookup) with the given working directory, feeding
/// `input` to stdin and capturing stdout and stderr. Throws std::system_error
/// if the process cannot be spawned.
ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                          std::string_view input = {});

}  // namespace churnforge::detail
