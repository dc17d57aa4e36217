#pragma once
// Flat key=value configuration files: dotted section names ("mcmc.steps"),
// '#' comments, duplicate keys rejected.  Typed accessors record which keys
// were read, and a canonical FNV-1a hash of the sorted entries is embedded in
// every output file so results can be traced back to their configuration.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace hopnet {

class Config {
public:
    // throws std::runtime_error naming the path when unreadable or malformed
    static Config from_file(const std::string& path);
    static Config from_text(const std::string& text, const std::string& origin = "<text>");

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key) const; // comma-separated
    std::vector<std::int64_t> get_int_list(const std::string& key) const;

    // keys present but never accessed through a getter
    std::vector<std::string> unread_keys() const;

    // FNV-1a 64 over the sorted "key=value" lines
    std::uint64_t hash() const;
    std::string hash_hex() const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> read_;
};

} // namespace hopnet
