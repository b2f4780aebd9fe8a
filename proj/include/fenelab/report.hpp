#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

// Machine-readable outputs: CSV tables with documented headers and a JSON
// summary per run. Data files embed the resolved config hash and are
// byte-identical across reruns of the same config; wall-clock timings go to
// the separate, non-reproducible timings.json.

namespace fenelab::report {

std::string config_hash(const nlohmann::json& cfg);
std::string version_string();

// Shortest round-trip decimal formatting (deterministic across runs).
std::string fmt(double v);

void write_csv(const std::filesystem::path& file, const std::string& hash,
               std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows);

void write_summary(const std::filesystem::path& out_dir, const nlohmann::json& summary);
void write_timings(const std::filesystem::path& out_dir, const nlohmann::json& timings);

// Schema check for summary.json; throws std::invalid_argument on violation.
void validate_summary(const nlohmann::json& s);

} // namespace fenelab::report
