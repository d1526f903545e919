#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace zdpool::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";
// Bumped whenever a CSV header changes.
inline constexpr int kCsvSchemaVersion = 1;

// Shortest round-trip text for doubles; NaN and missing values are empty.
std::string format_number(double x);

struct Field {
  std::string text;
  Field(double x) : text(format_number(x)) {}
  Field(int x) : text(std::to_string(x)) {}
  Field(std::size_t x) : text(std::to_string(x)) {}
  Field(std::string_view s) : text(s) {}
  Field(const char* s) : text(s) {}
  Field(const std::string& s) : text(s) {}
  Field(std::optional<std::size_t> x) : text(x ? std::to_string(*x) : std::string()) {}
};

class CsvWriter {
 public:
  // Throws UsageError when the file cannot be created.
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);
  void row(std::initializer_list<Field> fields);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
};

std::string sha256_hex(std::string_view data);
std::string utc_timestamp();

// Creates `dir` if needed; throws UsageError when it is not writable.
void prepare_output_dir(const std::filesystem::path& dir);

// Flag value, else $ZDPOOL_OUT_DIR, else ./zdpool_out.
std::filesystem::path resolve_output_dir(const std::string& flag_value);

struct RunManifest {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string tool_version{kToolVersion};
  std::vector<std::string> outputs;  // relative to the output directory
  std::string timestamp;

  nlohmann::json to_json() const;
};

// Digest of the resolved configuration's canonical serialization.
std::string config_digest(const nlohmann::json& resolved);

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

}  // namespace zdpool::cli
