#include "patchwork/run.hpp"

#include "patchwork/checkpoint.hpp"
#include "patchwork/error.hpp"

#include "json.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iterator>

#ifndef PATCHWORK_VERSION
#define PATCHWORK_VERSION "unknown"
#endif

namespace patchwork {
namespace fs = std::filesystem;

std::string library_version() { return PATCHWORK_VERSION; }

fs::path resolve_run_dir(const std::optional<fs::path>& explicit_dir,
                         const std::string& name) {
  fs::path dir;
  if (explicit_dir) {
    dir = *explicit_dir;
  } else if (const char* root = std::getenv(kRunRootEnv); root && *root) {
    dir = fs::path(root) / name;
  } else {
    dir = fs::path("runs") / name;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorCode::IoError, "cannot create run directory '" + dir.string() + "'");
  return dir;
}

RunDirLock::RunDirLock(const fs::path& dir) {
  const fs::path lock = dir / ".lock";
  fd_ = ::open(lock.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (fd_ < 0) raise(ErrorCode::IoError, "cannot open lock file '" + lock.string() + "'");
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    raise(ErrorCode::IoError, "run directory '" + dir.string() + "' is in use");
  }
}

RunDirLock::~RunDirLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  const std::string data(std::istreambuf_iterator<char>(in), {});
  return fnv1a64_hex(data);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["config"] = config_json.empty() ? nlohmann::json() : nlohmann::json::parse(config_json);
  j["input"] = {{"path", input_path}, {"hash", input_hash}};
  j["seed"] = seed;
  j["threads"] = threads;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

}  // namespace patchwork
