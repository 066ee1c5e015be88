#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace patchwork {

/// Environment variable naming the default root for run directories.
inline constexpr const char* kRunRootEnv = "PATCHWORK_RUN_ROOT";

/// Explicit directory if given, else $PATCHWORK_RUN_ROOT/<name>, else
/// ./runs/<name>. The directory is created.
std::filesystem::path resolve_run_dir(const std::optional<std::filesystem::path>& explicit_dir,
                                      const std::string& name);

/// Exclusive advisory lock on <dir>/.lock for the lifetime of the object.
/// Throws IoError when another process holds it.
class RunDirLock {
 public:
  explicit RunDirLock(const std::filesystem::path& dir);
  ~RunDirLock();
  RunDirLock(const RunDirLock&) = delete;
  RunDirLock& operator=(const RunDirLock&) = delete;

 private:
  int fd_ = -1;
};

struct RunManifest {
  std::string command;
  std::string tool_version;
  std::string config_json;  // snapshot of the effective configuration
  std::string input_path;
  std::string input_hash;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;

  std::string to_json() const;
};

std::string file_hash(const std::filesystem::path& path);  // fnv1a64 of the bytes
std::string utc_timestamp();
std::string library_version();

}  // namespace patchwork
