#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace flcrmf::cli {

/// Output files are rendered in memory first and only written by commit(),
/// each through a temporary file and a rename, so a failed command leaves no
/// partial files behind.
class PendingOutputs {
 public:
  void add(std::string name, std::string content);
  void commit(const std::filesystem::path& dir) const;
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace flcrmf::cli
