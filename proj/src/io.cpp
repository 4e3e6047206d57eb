#include "faraday/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "faraday/errors.hpp"
#include "faraday/rng.hpp"

namespace faraday::io {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    if (f.bad()) throw io_error("read failed: " + path.string());
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open for write: " + path.string());
    f << text;
    if (!f) throw io_error("write failed: " + path.string());
}

namespace {

std::string trim(std::string_view s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string_view::npos) return {};
    size_t b = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(a, b - a + 1));
}

} // namespace

KvFile KvFile::parse(const std::string& text, const std::string& origin) {
    KvFile kv;
    kv.origin_ = origin;
    std::istringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw config_error(origin + ":" + std::to_string(lineno) + ": empty key");
        if (kv.has(key))
            throw config_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv.entries_.emplace_back(key, value);
        kv.lines_.push_back(lineno);
        kv.consumed_.push_back(false);
    }
    return kv;
}

void KvFile::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
    lines_.push_back(0);
    consumed_.push_back(false);
}

void KvFile::set_double(const std::string& key, double value) { set(key, format_double(value)); }

bool KvFile::has(const std::string& key) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& e) { return e.first == key; });
}

const std::string& KvFile::get(const std::string& key) const {
    for (size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first == key) {
            consumed_[i] = true;
            return entries_[i].second;
        }
    }
    throw config_error(origin_ + ": missing key '" + key + "'");
}

double KvFile::get_double(const std::string& key) const {
    const std::string& s = get(key);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw config_error(origin_ + ": key '" + key + "' is not a number: '" + s + "'");
    return v;
}

std::optional<std::string> KvFile::find(const std::string& key) const {
    for (size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first == key) {
            consumed_[i] = true;
            return entries_[i].second;
        }
    }
    return std::nullopt;
}

std::vector<std::string> KvFile::unconsumed() const {
    std::vector<std::string> out;
    for (size_t i = 0; i < entries_.size(); ++i)
        if (!consumed_[i]) out.push_back(entries_[i].first);
    return out;
}

int KvFile::line_of(const std::string& key) const {
    for (size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].first == key) return lines_[i];
    return 0;
}

std::string KvFile::serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

void write_p5(const std::filesystem::path& path, const double* data, int rows, int cols) {
    double lo = data[0], hi = data[0];
    for (int i = 0; i < rows * cols; ++i) {
        lo = std::min(lo, data[i]);
        hi = std::max(hi, data[i]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
    out.reserve(out.size() + size_t(rows) * cols);
    for (int i = 0; i < rows * cols; ++i) {
        int v = int(255.0 * (data[i] - lo) / span + 0.5);
        out.push_back(char(std::clamp(v, 0, 255)));
    }
    write_text_file(path, out);
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : path_(path) {}

void CsvWriter::comment(const std::string& line) { buffer_ += "# " + line + "\n"; }

void CsvWriter::row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += format_double(values[i]);
    }
    buffer_ += '\n';
}

void CsvWriter::raw_row(const std::string& line) {
    buffer_ += line;
    buffer_ += '\n';
}

void CsvWriter::close() {
    if (open_) {
        write_text_file(path_, buffer_);
        open_ = false;
    }
}

std::uint64_t fnv1a_hash(const std::string& text) { return rng::fnv1a(text); }

void Manifest::save(const std::filesystem::path& dir) const {
    std::string out;
    out += "scenario = " + scenario_name + "\n";
    out += "scenario_hash = " + std::to_string(scenario_hash) + "\n";
    out += "seed = " + std::to_string(root_seed) + "\n";
    out += "version = " + version + "\n";
    out += "wall_time_s = " + format_double(wall_time_s) + "\n";
    for (const auto& [kind, path] : artifacts) out += "artifact_" + kind + " = " + path + "\n";
    write_text_file(dir / "manifest.txt", out);
}

} // namespace faraday::io
