#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "active_eval/core.hpp"
#include "active_eval/estimators.hpp"

namespace active_eval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Parsed `acquire` / `curate` manifest. Relative paths are resolved
/// against the manifest's directory.
struct RunManifest {
  std::string version = "1";
  std::filesystem::path surrogate;
  std::optional<std::filesystem::path> target;
  std::filesystem::path labels;
  AcquisitionConfig acquisition;
  LossSpec loss;
  std::vector<EstimatorTag> estimators{EstimatorTag::lure};
  std::filesystem::path output_dir = "out";
  std::optional<double> filter_nll;
};

RunManifest load_manifest(const std::filesystem::path& path);

/// Entry point shared by the executable and the tests. Errors are reported
/// as one JSON line on `err`: {"error":"<kind>","message":"..."}.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace active_eval::cli
