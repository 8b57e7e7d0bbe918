#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "merdg/matrix.hpp"

namespace merdg {

/// On-disk feature matrix: 8-byte magic "MERFEAT1", then u64-LE rows, u64-LE
/// cols, then rows*cols f64-LE values row-major. Round-trips are bit-exact.
void write_feature_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_feature_file(const std::filesystem::path& path);

/// Text label file: one non-negative integer per line, line i labels row i.
void write_label_file(const std::filesystem::path& path, const std::vector<int>& labels);
std::vector<int> read_label_file(const std::filesystem::path& path);

/// Locale-independent shortest-general formatting with the given number of
/// significant digits ('.' decimal separator always).
std::string format_double(double v, int significant_digits = 12);
std::string format_u64(std::uint64_t v);

double parse_double(const std::string& s);  // strict, full-token
std::uint64_t parse_u64(const std::string& s);

/// Ordered key = value text config with duplicate detection and strict
/// unknown-key rejection. '#' starts a comment line; blank lines are ignored.
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig parse_file(const std::filesystem::path& path);
    static KvConfig parse_text(const std::string& text, const std::string& origin);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::uint64_t> get_u64_list(const std::string& key) const;

    std::string get_string_or(const std::string& key, const std::string& fallback) const;
    double get_double_or(const std::string& key, double fallback) const;
    std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value);

    /// Throws ContractError naming the first key not in `allowed`.
    void reject_unknown_keys(const std::vector<std::string>& allowed) const;

    std::string serialize() const;
    void write_file(const std::filesystem::path& path) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    const std::string* find(const std::string& key) const;
    std::string require(const std::string& key) const;

    std::vector<std::pair<std::string, std::string>> entries_;
    std::string origin_ = "<config>";
};

/// Minimal strict CSV support: ',' separators, '\n' line endings, no quoting.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::string csv_to_string(const std::vector<std::string>& header,
                          const std::vector<std::vector<std::string>>& rows);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace merdg
