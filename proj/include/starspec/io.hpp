#ifndef STARSPEC_IO_HPP
#define STARSPEC_IO_HPP

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>

#include "starspec/errors.hpp"

namespace starspec {

/// Shortest round-trippable decimal rendering
inline std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Write-then-rename so readers never observe a partial file.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os.flush()) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace starspec

#endif  // STARSPEC_IO_HPP
