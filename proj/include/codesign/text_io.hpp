#pragma once
// Small filesystem helpers shared by the CLI and tests.  All failures are
// reported as IoError with the offending path in the message.

#include <string>

namespace codesign::io {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);
bool file_exists(const std::string& path);

// mkdir -p semantics; succeeding on an existing directory.
void ensure_dir(const std::string& path);

}  // namespace codesign::io
