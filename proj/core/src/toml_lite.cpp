#include "tosmtl/toml_lite.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tosmtl/errors.hpp"

namespace tosmtl {

namespace {

std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Removes a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

}  // namespace

TomlTable TomlTable::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

TomlTable TomlTable::parse_string(const std::string& text, const std::string& origin) {
    TomlTable table;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip(strip_comment(line));
        if (line.empty()) continue;

        auto fail = [&](const std::string& msg) {
            throw ParseError(origin + ":" + std::to_string(line_no) + ": " + msg);
        };

        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            section = strip(line.substr(1, line.size() - 2));
            if (section.empty()) fail("empty section name");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        const std::string key = strip(line.substr(0, eq));
        const std::string raw = strip(line.substr(eq + 1));
        if (key.empty()) fail("empty key");
        if (raw.empty()) fail("empty value for key " + key);

        Value value;
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"') fail("unterminated string for key " + key);
            value = raw.substr(1, raw.size() - 2);
        } else if (raw == "true") {
            value = true;
        } else if (raw == "false") {
            value = false;
        } else {
            // integer first, then float
            char* end = nullptr;
            const long long iv = std::strtoll(raw.c_str(), &end, 10);
            if (end && *end == '\0') {
                value = static_cast<std::int64_t>(iv);
            } else {
                end = nullptr;
                const double dv = std::strtod(raw.c_str(), &end);
                if (!end || *end != '\0') fail("cannot parse value '" + raw + "' for key " + key);
                value = dv;
            }
        }
        table.sections_[section][key] = std::move(value);
    }
    return table;
}

bool TomlTable::contains(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

double TomlTable::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return fallback;
    if (const auto* d = std::get_if<double>(&k->second)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&k->second)) return static_cast<double>(*i);
    throw ParseError("config key " + section + "." + key + " is not a number");
}

std::int64_t TomlTable::get_int(const std::string& section, const std::string& key,
                                std::int64_t fallback) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return fallback;
    if (const auto* i = std::get_if<std::int64_t>(&k->second)) return *i;
    throw ParseError("config key " + section + "." + key + " is not an integer");
}

bool TomlTable::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return fallback;
    if (const auto* b = std::get_if<bool>(&k->second)) return *b;
    throw ParseError("config key " + section + "." + key + " is not a boolean");
}

std::string TomlTable::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return fallback;
    if (const auto* str = std::get_if<std::string>(&k->second)) return *str;
    throw ParseError("config key " + section + "." + key + " is not a string");
}

}  // namespace tosmtl
