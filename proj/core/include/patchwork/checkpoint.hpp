#pragma once

#include "patchwork/field.hpp"
#include "patchwork/train.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace patchwork {

inline constexpr int kCheckpointVersion = 1;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);  // "fnv1a64:<16 hex digits>"

/// Canonical JSON: sorted keys, shortest round-trip floats, no whitespace,
/// trailing newline. The checksum covers the document without its
/// "checksum" member.
std::string checkpoint_to_json(const PatchworkModel& model);
/// Throws ParseError, VersionMismatch or CorruptCheckpoint.
PatchworkModel checkpoint_from_json(std::string_view text);

void save_checkpoint(const PatchworkModel& model, const std::filesystem::path& path);
PatchworkModel load_checkpoint(const std::filesystem::path& path);

/// Human-editable fit configuration (pretty JSON). Unknown keys are
/// rejected with InvalidConfig; missing keys keep their defaults.
std::string fit_config_to_json(const FitConfig& config);
FitConfig fit_config_from_json(std::string_view text);
FitConfig load_fit_config(const std::filesystem::path& path);

}  // namespace patchwork
