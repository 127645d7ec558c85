#include "formkac/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace formkac {

namespace {

std::string trim(const std::string& s)
{
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) {
        ++a;
    }
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) {
        --b;
    }
    return s.substr(a, b - a);
}

[[noreturn]] void error_at(const std::string& source, int line, const std::string& message)
{
    throw ConfigError(source + ":" + std::to_string(line) + ": " + message);
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& s)
{
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') {
            quoted = !quoted;
        } else if (s[i] == '#' && !quoted) {
            return s.substr(0, i);
        }
    }
    return s;
}

bool parse_number(const std::string& s, double& out)
{
    if (s.empty()) {
        return false;
    }
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_string(const std::string& s, std::string& out)
{
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') {
        return false;
    }
    out = s.substr(1, s.size() - 2);
    return out.find('"') == std::string::npos;
}

ConfigValue parse_value(const std::string& raw, const std::string& source, int line)
{
    ConfigValue v;
    v.line = line;
    double d = 0.0;
    std::string str;
    if (raw == "true" || raw == "false") {
        v.data = raw == "true";
    } else if (parse_number(raw, d)) {
        v.data = d;
    } else if (parse_string(raw, str)) {
        v.data = str;
    } else if (raw.size() >= 2 && raw.front() == '[' && raw.back() == ']') {
        const std::string inner = trim(raw.substr(1, raw.size() - 2));
        std::vector<double> nums;
        std::vector<std::string> strs;
        if (!inner.empty()) {
            std::vector<std::string> items(1);
            bool quoted = false;
            for (char c : inner) {
                if (c == '"') {
                    quoted = !quoted;
                }
                if (c == ',' && !quoted) {
                    items.emplace_back();
                } else {
                    items.back() += c;
                }
            }
            for (std::string item : items) {
                item = trim(item);
                if (parse_number(item, d)) {
                    nums.push_back(d);
                } else if (parse_string(item, str)) {
                    strs.push_back(str);
                } else {
                    error_at(source, line, "bad array element '" + item + "'");
                }
            }
        }
        if (!nums.empty() && !strs.empty()) {
            error_at(source, line, "arrays must not mix numbers and strings");
        }
        if (!strs.empty()) {
            v.data = strs;
        } else {
            v.data = nums;
        }
    } else {
        error_at(source, line, "cannot parse value '" + raw + "'");
    }
    return v;
}

}  // namespace

void ConfigTable::set(const std::string& key, ConfigValue v, int line)
{
    if (values_.count(key)) {
        error_at(source_, line, "duplicate key '" + key + "' in [" + name_ + "]");
    }
    values_.emplace(key, std::move(v));
}

void ConfigTable::fail(const std::string& key, const std::string& message) const
{
    auto it = values_.find(key);
    const int line = it == values_.end() ? line_ : it->second.line;
    error_at(source_, line, "[" + name_ + "] " + key + ": " + message);
}

void ConfigTable::check_keys(const std::vector<std::string>& allowed) const
{
    for (const auto& [key, value] : values_) {
        bool ok = false;
        for (const auto& a : allowed) {
            ok = ok || a == key;
        }
        if (!ok) {
            error_at(source_, value.line, "[" + name_ + "] unknown key '" + key + "'");
        }
    }
}

const ConfigValue& ConfigTable::require(const std::string& key) const
{
    auto it = values_.find(key);
    if (it == values_.end()) {
        error_at(source_, line_, "[" + name_ + "] missing required key '" + key + "'");
    }
    return it->second;
}

double ConfigTable::number(const std::string& key) const
{
    const auto& v = require(key);
    if (const double* d = std::get_if<double>(&v.data)) {
        return *d;
    }
    fail(key, "expected a number");
}

double ConfigTable::number(const std::string& key, double fallback) const
{
    return has(key) ? number(key) : fallback;
}

std::int64_t ConfigTable::integer(const std::string& key) const
{
    const double d = number(key);
    if (d != std::floor(d) || std::abs(d) > 9.0e15) {
        fail(key, "expected an integer");
    }
    return static_cast<std::int64_t>(d);
}

std::int64_t ConfigTable::integer(const std::string& key, std::int64_t fallback) const
{
    return has(key) ? integer(key) : fallback;
}

std::uint64_t ConfigTable::seed(const std::string& key) const
{
    const std::int64_t v = integer(key);
    if (v < 0) {
        fail(key, "seed must be non-negative");
    }
    return static_cast<std::uint64_t>(v);
}

bool ConfigTable::boolean(const std::string& key, bool fallback) const
{
    if (!has(key)) {
        return fallback;
    }
    const auto& v = require(key);
    if (const bool* b = std::get_if<bool>(&v.data)) {
        return *b;
    }
    fail(key, "expected true or false");
}

std::string ConfigTable::string(const std::string& key) const
{
    const auto& v = require(key);
    if (const std::string* s = std::get_if<std::string>(&v.data)) {
        return *s;
    }
    fail(key, "expected a quoted string");
}

std::string ConfigTable::string(const std::string& key, const std::string& fallback) const
{
    return has(key) ? string(key) : fallback;
}

std::vector<double> ConfigTable::numbers(const std::string& key) const
{
    const auto& v = require(key);
    if (const auto* a = std::get_if<std::vector<double>>(&v.data)) {
        return *a;
    }
    if (const double* d = std::get_if<double>(&v.data)) {
        return {*d};
    }
    fail(key, "expected an array of numbers");
}

std::vector<double> ConfigTable::numbers(const std::string& key, const std::vector<double>& fallback) const
{
    return has(key) ? numbers(key) : fallback;
}

std::vector<std::string> ConfigTable::strings(const std::string& key) const
{
    const auto& v = require(key);
    if (const auto* a = std::get_if<std::vector<std::string>>(&v.data)) {
        return *a;
    }
    if (const std::string* s = std::get_if<std::string>(&v.data)) {
        return {*s};
    }
    if (const auto* a = std::get_if<std::vector<double>>(&v.data); a && a->empty()) {
        return {};
    }
    fail(key, "expected an array of strings");
}

Config Config::parse(const std::string& text, const std::string& source)
{
    Config cfg;
    cfg.source_ = source;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    ConfigTable* current = nullptr;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) {
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) {
                error_at(source, line, "malformed table header");
            }
            const std::string name = trim(s.substr(1, s.size() - 2));
            for (char c : name) {
                if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
                    error_at(source, line, "bad table name '" + name + "'");
                }
            }
            if (cfg.tables_.count(name)) {
                error_at(source, line, "duplicate table [" + name + "]");
            }
            current = &cfg.tables_.emplace(name, ConfigTable(source, name, line)).first->second;
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            error_at(source, line, "expected key = value");
        }
        if (!current) {
            error_at(source, line, "key outside of any table");
        }
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) {
            error_at(source, line, "empty key");
        }
        for (char c : key) {
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
                error_at(source, line, "bad key '" + key + "'");
            }
        }
        current->set(key, parse_value(trim(s.substr(eq + 1)), source, line), line);
    }
    return cfg;
}

Config Config::load(const std::string& path)
{
    std::ifstream f(path);
    if (!f) {
        throw ConfigError(path + ": cannot open config file");
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
}

const ConfigTable& Config::table(const std::string& name) const
{
    auto it = tables_.find(name);
    if (it == tables_.end()) {
        throw ConfigError(source_ + ":1: missing table [" + name + "]");
    }
    return it->second;
}

}  // namespace formkac
