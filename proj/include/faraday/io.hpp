#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace faraday::io {

/// Shortest representation that round-trips a double exactly.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Ordered `key = value` file with '#' comments. Parse errors carry the
/// origin name and 1-based line number.
class KvFile {
public:
    static KvFile parse(const std::string& text, const std::string& origin);

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;       // throws config_error
    double get_double(const std::string& key) const;
    std::optional<std::string> find(const std::string& key) const;

    /// Keys never passed to get/find; used for unknown-key rejection.
    std::vector<std::string> unconsumed() const;
    int line_of(const std::string& key) const;

    std::string serialize() const;
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    const std::string& origin() const { return origin_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::vector<int> lines_;
    mutable std::vector<bool> consumed_;
    std::string origin_;
};

/// 8-bit binary PGM; data mapped linearly min -> 0, max -> 255.
void write_p5(const std::filesystem::path& path, const double* data, int rows, int cols);

/// CSV with '#' comment header lines, written with exact doubles.
class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path);
    void comment(const std::string& line);
    void row(const std::vector<double>& values);
    void raw_row(const std::string& line);
    void close();

private:
    std::string buffer_;
    std::filesystem::path path_;
    bool open_ = true;
};

std::uint64_t fnv1a_hash(const std::string& text);

/// Per-output-directory manifest (scenario hash, version, seeds, wall time).
struct Manifest {
    std::string scenario_name;
    std::uint64_t scenario_hash = 0;
    std::uint64_t root_seed = 0;
    std::string version;
    double wall_time_s = 0;
    std::vector<std::pair<std::string, std::string>> artifacts; // kind, path
    void save(const std::filesystem::path& dir) const;
};

} // namespace faraday::io
