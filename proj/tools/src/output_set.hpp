#pragma once

#include <filesystem>
#include <utility>
#include <vector>

namespace srff::cli {

/// Files are written under temporary names and renamed into place together on
/// commit(); anything staged but not committed is removed.
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet();

  /// Creates the parent directory and returns the temporary path to write.
  std::filesystem::path stage(const std::filesystem::path& final_path);
  void commit();

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;  // tmp, final
  std::vector<std::filesystem::path> created_dirs_;
  bool committed_ = false;
};

}  // namespace srff::cli
