#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "exid/common/error.hpp"
#include "json.hpp"

namespace exid::cli {
namespace {

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json artifacts_json(const std::vector<Artifact>& list) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& a : list) out.push_back({{"role", a.role}, {"path", a.path.string()}, {"sha1", a.sha1}});
  return out;
}

std::vector<Artifact> artifacts_from(const nlohmann::json& j) {
  std::vector<Artifact> out;
  for (const auto& a : j) out.push_back({a.at("role"), a.at("path").get<std::string>(), a.at("sha1")});
  return out;
}

}  // namespace

std::string git_blob_sha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx != nullptr && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest.data(), &length) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("SHA-1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    const unsigned char byte = digest[i];
    std::snprintf(buf, sizeof buf, "%02x", byte);
    hex += buf;
  }
  return hex;
}

std::string git_blob_sha1_file(const std::filesystem::path& path) { return git_blob_sha1(read_all(path)); }

void RunManifest::add_input(std::string role, const std::filesystem::path& path) {
  inputs.push_back({std::move(role), path, git_blob_sha1_file(path)});
}

void RunManifest::add_output(std::string role, const std::filesystem::path& path) {
  outputs.push_back({std::move(role), path, git_blob_sha1_file(path)});
}

std::string RunManifest::to_json() const {
  const nlohmann::json j = {
      {"command", command},         {"arguments", arguments},          {"env_id", env_id},
      {"seeds", seeds},             {"config", config_path},           {"inputs", artifacts_json(inputs)},
      {"outputs", artifacts_json(outputs)}, {"started_at", started_at}, {"finished_at", finished_at},
  };
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what(), 0);
  }
  RunManifest m;
  m.command = j.at("command");
  m.arguments = j.at("arguments").get<std::vector<std::string>>();
  m.env_id = j.at("env_id");
  m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  m.config_path = j.at("config");
  m.inputs = artifacts_from(j.at("inputs"));
  m.outputs = artifacts_from(j.at("outputs"));
  m.started_at = j.at("started_at");
  m.finished_at = j.at("finished_at");
  return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << to_json();
}

RunManifest RunManifest::load(const std::filesystem::path& path) { return from_json(read_all(path)); }

std::vector<std::filesystem::path> RunManifest::stale_artifacts() const {
  std::vector<std::filesystem::path> stale;
  for (const auto* list : {&inputs, &outputs}) {
    for (const auto& a : *list) {
      if (!std::filesystem::exists(a.path) || git_blob_sha1_file(a.path) != a.sha1) stale.push_back(a.path);
    }
  }
  return stale;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace exid::cli
