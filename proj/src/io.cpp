#include "merdg/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

namespace merdg {

namespace {

constexpr char kFeatureMagic[8] = {'M', 'E', 'R', 'F', 'E', 'A', 'T', '1'};
constexpr std::size_t kMaxFeatureEntries = 1ULL << 32;

void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t at = s.find(sep, start);
        if (at == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, at - start));
        start = at + 1;
    }
}

}  // namespace

void write_feature_file(const std::filesystem::path& path, const Matrix& m) {
    std::string buf;
    buf.reserve(24 + 8 * m.size());
    buf.append(kFeatureMagic, sizeof(kFeatureMagic));
    put_u64_le(buf, m.rows());
    put_u64_le(buf, m.cols());
    for (double v : m.values()) put_u64_le(buf, std::bit_cast<std::uint64_t>(v));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open for writing: " + path.string());
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw FormatError("write failed: " + path.string());
}

Matrix read_feature_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open feature file: " + path.string());
    std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());

    if (raw.size() < 8 || std::memcmp(raw.data(), kFeatureMagic, 8) != 0) {
        throw FormatError(path.string() + ": bad magic at byte offset 0");
    }
    if (raw.size() < 24) {
        throw FormatError(path.string() + ": truncated header at byte offset " +
                          std::to_string(raw.size()));
    }
    const std::uint64_t rows = get_u64_le(p + 8);
    const std::uint64_t cols = get_u64_le(p + 16);
    if (cols != 0 && rows > kMaxFeatureEntries / std::max<std::uint64_t>(cols, 1)) {
        throw FormatError(path.string() + ": implausible dimensions in header");
    }
    const std::uint64_t need = 24 + 8 * rows * cols;
    if (raw.size() < need) {
        throw FormatError(path.string() + ": truncated payload at byte offset " +
                          std::to_string(raw.size()) + ", expected " + std::to_string(need) +
                          " bytes");
    }
    if (raw.size() > need) {
        throw FormatError(path.string() + ": trailing data at byte offset " + std::to_string(need));
    }
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.data()[i] = std::bit_cast<double>(get_u64_le(p + 24 + 8 * i));
    }
    return m;
}

void write_label_file(const std::filesystem::path& path, const std::vector<int>& labels) {
    std::string buf;
    for (int y : labels) {
        if (y < 0) throw ContractError("write_label_file: labels must be non-negative");
        buf += std::to_string(y);
        buf += '\n';
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open for writing: " + path.string());
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<int> read_label_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open label file: " + path.string());
    std::vector<int> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) {
            throw FormatError(path.string() + ": empty line " + std::to_string(line_no));
        }
        int v = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || ptr != t.data() + t.size() || v < 0) {
            throw FormatError(path.string() + ": bad label on line " + std::to_string(line_no));
        }
        out.push_back(v);
    }
    return out;
}

std::string format_double(double v, int significant_digits) {
    char buf[64];
    auto [ptr, ec] =
        std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, significant_digits);
    if (ec != std::errc()) throw NumericError("format_double failed");
    return std::string(buf, ptr);
}

std::string format_u64(std::uint64_t v) { return std::to_string(v); }

double parse_double(const std::string& s) {
    const std::string t = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw ContractError("not a number: '" + s + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    const std::string t = trim(s);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw ContractError("not a non-negative integer: '" + s + "'");
    }
    return v;
}

KvConfig KvConfig::parse_file(const std::filesystem::path& path) {
    return parse_text(read_text_file(path), path.string());
}

KvConfig KvConfig::parse_text(const std::string& text, const std::string& origin) {
    KvConfig cfg;
    cfg.origin_ = origin;
    std::size_t line_no = 0;
    for (const std::string& raw_line : split(text, '\n')) {
        ++line_no;
        const std::string line = trim(raw_line);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ContractError(origin + ": line " + std::to_string(line_no) +
                                " is not 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ContractError(origin + ": empty key on line " + std::to_string(line_no));
        }
        if (cfg.find(key) != nullptr) {
            throw ContractError(origin + ": duplicate key '" + key + "'");
        }
        cfg.entries_.emplace_back(key, value);
    }
    return cfg;
}

const std::string* KvConfig::find(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return &v;
    }
    return nullptr;
}

std::string KvConfig::require(const std::string& key) const {
    const std::string* v = find(key);
    if (v == nullptr) throw ContractError(origin_ + ": missing required key '" + key + "'");
    return *v;
}

bool KvConfig::has(const std::string& key) const { return find(key) != nullptr; }

std::string KvConfig::get_string(const std::string& key) const { return require(key); }

double KvConfig::get_double(const std::string& key) const {
    try {
        return parse_double(require(key));
    } catch (const ContractError&) {
        throw ContractError(origin_ + ": key '" + key + "' is not a number");
    }
}

std::uint64_t KvConfig::get_u64(const std::string& key) const {
    try {
        return parse_u64(require(key));
    } catch (const ContractError&) {
        throw ContractError(origin_ + ": key '" + key + "' is not a non-negative integer");
    }
}

bool KvConfig::get_bool(const std::string& key) const {
    const std::string v = require(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ContractError(origin_ + ": key '" + key + "' must be true or false");
}

std::vector<double> KvConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& part : split(require(key), ',')) out.push_back(parse_double(part));
    return out;
}

std::vector<std::uint64_t> KvConfig::get_u64_list(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const std::string& part : split(require(key), ',')) out.push_back(parse_u64(part));
    return out;
}

std::string KvConfig::get_string_or(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double KvConfig::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::uint64_t KvConfig::get_u64_or(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

bool KvConfig::get_bool_or(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}

void KvConfig::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void KvConfig::reject_unknown_keys(const std::vector<std::string>& allowed) const {
    for (const auto& [k, v] : entries_) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw ContractError(origin_ + ": unknown key '" + k + "'");
        }
    }
}

std::string KvConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

void KvConfig::write_file(const std::filesystem::path& path) const {
    write_text_file(path, serialize());
}

std::string csv_to_string(const std::vector<std::string>& header,
                          const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    auto append_row = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    append_row(header);
    for (const auto& r : rows) append_row(r);
    return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    write_text_file(path, csv_to_string(header, rows));
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    if (text.find('\r') != std::string::npos) {
        throw FormatError(path.string() + ": carriage return in CSV");
    }
    std::vector<std::vector<std::string>> out;
    for (const std::string& line : split(text, '\n')) {
        if (line.empty()) continue;
        out.push_back(split(line, ','));
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open for writing: " + path.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw FormatError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open: " + path.string());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace merdg
