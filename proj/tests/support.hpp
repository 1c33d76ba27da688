#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testsup {

inline const std::filesystem::path kDataDir =
    std::filesystem::path(SELFALIGN_SOURCE_DIR) / "data";

// Fresh empty scratch directory under the system temp root. Recreated on
// every call so tests never see leftovers from a previous run.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir =
      std::filesystem::temp_directory_path() / ("selfalign-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace testsup
