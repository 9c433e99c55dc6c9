#include "output_set.hpp"

#include <system_error>

namespace srff::cli {

namespace fs = std::filesystem;

OutputSet::~OutputSet() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& [tmp, final_path] : staged_) fs::remove(tmp, ec);
  for (const auto& dir : created_dirs_) fs::remove(dir, ec);
}

fs::path OutputSet::stage(const fs::path& final_path) {
  const fs::path parent = final_path.parent_path();
  if (!parent.empty() && !fs::exists(parent)) {
    std::vector<fs::path> missing;
    for (fs::path p = parent; !p.empty() && !fs::exists(p); p = p.parent_path()) missing.push_back(p);
    fs::create_directories(parent);
    created_dirs_.insert(created_dirs_.end(), missing.begin(), missing.end());
  }
  fs::path tmp = final_path;
  tmp += ".partial";
  staged_.emplace_back(tmp, final_path);
  return tmp;
}

void OutputSet::commit() {
  for (const auto& [tmp, final_path] : staged_) fs::rename(tmp, final_path);
  committed_ = true;
}

}  // namespace srff::cli
