#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace exid::cli {

/// Git blob id: SHA-1 over "blob <size>\0" followed by the content, as lowercase hex.
std::string git_blob_sha1(std::string_view content);
std::string git_blob_sha1_file(const std::filesystem::path& path);

struct Artifact {
  std::string role;  // "dataset", "checkpoint", "log", ...
  std::filesystem::path path;
  std::string sha1;
};

/// Provenance record written next to a command's outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::string env_id;
  std::vector<std::uint64_t> seeds;
  std::string config_path;
  std::vector<Artifact> inputs;
  std::vector<Artifact> outputs;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;

  void add_input(std::string role, const std::filesystem::path& path);
  /// Hashes the file as it is now; call after the output has been written.
  void add_output(std::string role, const std::filesystem::path& path);

  std::string to_json() const;
  static RunManifest from_json(std::string_view text);

  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);

  /// Paths whose current content no longer matches the recorded hash.
  std::vector<std::filesystem::path> stale_artifacts() const;
};

std::string utc_timestamp();

}  // namespace exid::cli
