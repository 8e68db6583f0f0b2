#include "io.hpp"

#include <fstream>
#include <system_error>

#include "docrel/errors.hpp"

namespace docrel::cli {

namespace fs = std::filesystem;

void write_files_atomically(const std::vector<std::pair<fs::path, std::string>>& files) {
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& [path, contents] : files) {
    fs::path tmp = path;
    tmp += ".tmp";
    temps.push_back(tmp);
    if (path.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.close();
    if (!out) {
      cleanup();
      throw ParseError("cannot write " + path.string());
    }
  }
  // Existing targets are moved aside first so a failed rename can restore them.
  std::vector<fs::path> backups(files.size());
  std::size_t done = 0;
  auto roll_back = [&] {
    std::error_code ec;
    for (std::size_t i = 0; i < done; ++i) {
      fs::remove(files[i].first, ec);
      if (!backups[i].empty()) fs::rename(backups[i], files[i].first, ec);
    }
    if (done < files.size() && !backups[done].empty()) fs::rename(backups[done], files[done].first, ec);
    cleanup();
  };
  for (; done < files.size(); ++done) {
    const fs::path& target = files[done].first;
    std::error_code ec;
    if (fs::is_directory(target, ec)) {
      roll_back();
      throw ParseError("cannot write " + target.string() + ": is a directory");
    }
    if (fs::exists(target, ec)) {
      backups[done] = target;
      backups[done] += ".bak";
      fs::rename(target, backups[done], ec);
      if (ec) {
        backups[done].clear();
        roll_back();
        throw ParseError("cannot replace " + target.string() + ": " + ec.message());
      }
    }
    fs::rename(temps[done], target, ec);
    if (ec) {
      roll_back();
      throw ParseError("cannot write " + target.string() + ": " + ec.message());
    }
  }
  std::error_code ec;
  for (const auto& b : backups) {
    if (!b.empty()) fs::remove(b, ec);
  }
}

void write_file_atomically(const fs::path& path, const std::string& contents) {
  write_files_atomically({{path, contents}});
}

}  // namespace docrel::cli
