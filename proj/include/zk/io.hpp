#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace zk {

const char* version();

// Flat key = value configuration. Lines starting with '#' are comments.
// Every get() records the value it returns, so dump() lists defaults too.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig from_file(const std::string& path);

    void set(const std::string& key, const std::string& value);
    // "key=value" strings, later ones win
    void apply_overrides(const std::vector<std::string>& kv);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    double get_double(const std::string& key, double fallback);
    int get_int(const std::string& key, int fallback);
    bool get_bool(const std::string& key, bool fallback);
    std::string get_string(const std::string& key, const std::string& fallback);

    std::string dump() const;  // sorted key=value lines
    std::string hash() const;  // 16 hex digits over dump()
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// FNV-1a, 64 bit
std::uint64_t fnv1a(const std::string& s);
std::string hex64(std::uint64_t v);

// "# zklab <version>\n# experiment: ...\n# config_hash: ...\n# key=value ..." block
std::string csv_header(const std::string& experiment, const KeyValueConfig& cfg);

struct Series {
    std::string label;
    std::vector<double> x, y;
};

// Minimal static line plot (linear axes, one polyline per series).
void write_svg_plot(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<Series>& series);

// Columns to CSV with the given header block.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& names, const std::vector<std::vector<double>>& columns);

}  // namespace zk
