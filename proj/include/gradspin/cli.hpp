#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace gradspin::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kFailure = 3, kIo = 4 };

/// A configuration value that is missing, of the wrong type or out of range.
class ValidationError : public std::invalid_argument {
public:
  ValidationError(std::string field, const std::string& message);
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Subcommand names in help order.
const std::vector<std::string>& command_names();

/// Reads a JSON object from a file (IoError / ValidationError).
nlohmann::json load_config(const std::filesystem::path& path);

/// Applies "key=value". The value is parsed as JSON when possible and kept as
/// a string otherwise, so `--set model=dKMP` and `--set N=64` both work.
void apply_override(nlohmann::json& config, std::string_view assignment);

/// Git blob hash, SHA-1 over "blob <size>\0" + content, as lowercase hex.
std::string content_hash(std::string_view content);

/// Runs a subcommand on a resolved configuration, writing files below
/// out_dir and a human-readable summary to `out`. Errors are reported on
/// `err` and mapped to exit codes; nothing is thrown.
int run_command(std::string_view command, const nlohmann::json& config,
                const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

/// Thread count resolution: explicit value if positive, else the
/// GRADSPIN_THREADS environment variable, else the OpenMP default.
/// Returns the value applied.
int configure_threads(int requested);

}  // namespace gradspin::cli
