#include "codesign/text_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "codesign/errors.hpp"

namespace codesign::io {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed on '" + path + "'");
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), std::streamsize(text.size()));
  out.flush();
  if (!out.good()) throw IoError("write failed on '" + path + "'");
}

bool file_exists(const std::string& path) {
  std::error_code ec;
  return fs::exists(path, ec) && !ec;
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory '" + path + "': " + ec.message());
}

}  // namespace codesign::io
