#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ussci {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one `ussci` invocation. `args` excludes the program name.
/// Exit status: 0 success, 1 invalid input or runtime failure (one-line
/// diagnostic on `err`), 2 usage error (message and usage text on `err`).
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, char** argv);

}  // namespace ussci
