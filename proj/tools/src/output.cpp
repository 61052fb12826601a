#include "flcrmf_cli/output.hpp"

#include <fstream>
#include <system_error>

#include "flcrmf/error.hpp"

namespace flcrmf::cli {

void PendingOutputs::add(std::string name, std::string content) {
  files_.emplace_back(std::move(name), std::move(content));
}

void PendingOutputs::commit(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& [name, content] : files_) write_file_atomic(dir / name, content);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot move " + tmp.string() + " into place");
  }
}

}  // namespace flcrmf::cli
