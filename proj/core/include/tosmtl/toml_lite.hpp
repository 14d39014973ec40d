#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

namespace tosmtl {

// Minimal TOML subset for run configs: [section] headers, key = value with
// integers, floats, booleans and double-quoted strings, # comments.
// Arrays, dates and nested tables are out of scope.
class TomlTable {
public:
    using Value = std::variant<std::int64_t, double, bool, std::string>;

    static TomlTable parse_file(const std::string& path);
    static TomlTable parse_string(const std::string& text, const std::string& origin = "<string>");

    bool contains(const std::string& section, const std::string& key) const;

    // Typed getters with defaults; integer values coerce to double.
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;

private:
    std::map<std::string, std::map<std::string, Value>> sections_;
};

}  // namespace tosmtl
