#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "memweave/calibration.hpp"

namespace testing_support {

inline memweave::ProfileSet bundled_profiles() {
  return memweave::load_profiles(MEMWEAVE_DATA_DIR "/profiles/micron_xeon6.json");
}

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("memweave_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

  std::filesystem::path write(const std::string& name, const std::string& text) const {
    auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
