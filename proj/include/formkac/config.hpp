#pragma once

// Experiment configuration files: flat key = value tables.
//
//   # comment
//   [experiment]
//   kind = "fk"
//   seed = 42
//   times = [0.25, 1.0]
//
//   [model]
//   id = "half_space"
//   dim = 3
//
// Values are numbers, booleans, "strings", or one-line arrays of numbers or
// strings. Every error names the file and line.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace formkac {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConfigValue {
    std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>> data;
    int line = 0;
};

class ConfigTable {
public:
    ConfigTable() = default;
    ConfigTable(std::string source, std::string name, int line)
        : source_(std::move(source)), name_(std::move(name)), line_(line)
    {
    }

    const std::string& name() const { return name_; }
    int line() const { return line_; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, ConfigValue>& values() const { return values_; }
    void set(const std::string& key, ConfigValue v, int line);

    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    std::int64_t integer(const std::string& key) const;
    std::int64_t integer(const std::string& key, std::int64_t fallback) const;
    std::uint64_t seed(const std::string& key) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string string(const std::string& key) const;
    std::string string(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::string> strings(const std::string& key) const;

    /// Error anchored at the line of `key` (or of the table header).
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;
    /// Rejects keys outside `allowed`.
    void check_keys(const std::vector<std::string>& allowed) const;

private:
    const ConfigValue& require(const std::string& key) const;

    std::string source_;
    std::string name_;
    int line_ = 0;
    std::map<std::string, ConfigValue> values_;
};

class Config {
public:
    static Config parse(const std::string& text, const std::string& source = "<config>");
    static Config load(const std::string& path);

    bool has_table(const std::string& name) const { return tables_.count(name) > 0; }
    const ConfigTable& table(const std::string& name) const;
    const std::string& source() const { return source_; }

private:
    std::string source_;
    std::map<std::string, ConfigTable> tables_;
};

}  // namespace formkac
