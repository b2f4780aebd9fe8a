#include "fenelab/report.hpp"

#include <charconv>
#include <fstream>

namespace fenelab::report {

std::string config_hash(const nlohmann::json& cfg) {
    const std::string dump = cfg.dump(); // nlohmann keeps object keys sorted
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string version_string() { return "fenelab-0.1.0"; }

std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& file, const std::string& hash,
               std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("write_csv: cannot open " + file.string());
    os << "# config_hash=" << hash << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) os << header[i] << (i + 1 < header.size() ? "," : "");
    os << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << row[i] << (i + 1 < row.size() ? "," : "");
        os << "\n";
    }
    if (!os) throw std::runtime_error("write_csv: write failed for " + file.string());
}

void write_summary(const std::filesystem::path& out_dir, const nlohmann::json& summary) {
    validate_summary(summary);
    std::ofstream os(out_dir / "summary.json");
    if (!os) throw std::runtime_error("write_summary: cannot open summary.json");
    os << summary.dump(2) << "\n";
}

void write_timings(const std::filesystem::path& out_dir, const nlohmann::json& timings) {
    std::ofstream os(out_dir / "timings.json");
    if (!os) throw std::runtime_error("write_timings: cannot open timings.json");
    os << timings.dump(2) << "\n";
}

void validate_summary(const nlohmann::json& s) {
    auto need = [&](const char* key, bool ok) {
        if (!s.contains(key) || !ok) throw std::invalid_argument(std::string("summary schema: bad field ") + key);
    };
    need("experiment", s.contains("experiment") && s["experiment"].is_string());
    need("config", s.contains("config") && s["config"].is_object());
    need("config_hash", s.contains("config_hash") && s["config_hash"].is_string());
    need("version", s.contains("version") && s["version"].is_string());
    need("results", s.contains("results") && s["results"].is_object());
    need("checks_passed", s.contains("checks_passed") && s["checks_passed"].is_boolean());
}

} // namespace fenelab::report
