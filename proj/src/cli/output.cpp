#include "zdpool/cli/output.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "zdpool/cli/config.hpp"

namespace zdpool::cli {

std::string format_number(double x) {
  if (std::isnan(x)) return {};
  if (x == 0.0) return "0";
  return fmt::format("{}", x);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
  if (!out_) throw UsageError(fmt::format("cannot write '{}'", path.string()));
  out_ << fmt::format("{}\n", fmt::join(header, ","));
}

void CsvWriter::row(std::initializer_list<Field> fields) {
  if (fields.size() != columns_)
    throw std::logic_error(fmt::format("{}: row has {} fields, header has {}", path_.string(), fields.size(), columns_));
  bool first = true;
  for (const auto& f : fields) {
    if (!first) out_ << ',';
    out_ << f.text;
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw UsageError(fmt::format("failed writing '{}'", path_.string()));
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw UsageError(fmt::format("cannot create output directory '{}'", dir.string()));
  const auto probe = dir / ".zdpool_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw UsageError(fmt::format("output directory '{}' is not writable", dir.string()));
  }
  std::filesystem::remove(probe, ec);
}

std::filesystem::path resolve_output_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ZDPOOL_OUT_DIR"); env && *env) return env;
  return "zdpool_out";
}

nlohmann::json RunManifest::to_json() const {
  return nlohmann::json{
      {"config_digest", config_digest},
      {"seed", seed},
      {"tool_version", tool_version},
      {"csv_schema_version", kCsvSchemaVersion},
      {"outputs", outputs},
      {"timestamp", timestamp},
  };
}

std::string config_digest(const nlohmann::json& resolved) { return sha256_hex(resolved.dump()); }

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError(fmt::format("cannot write '{}'", path.string()));
  out << manifest.to_json().dump(2) << '\n';
  if (!out) throw UsageError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace zdpool::cli
