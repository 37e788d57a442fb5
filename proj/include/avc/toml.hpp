#pragma once

// Minimal TOML subset: top-level key/value pairs, [table] sections,
// [[array-of-table]] sections, scalar values (string, integer, float, bool)
// and flat arrays of scalars. Enough for network files and run configs;
// unknown syntax is rejected loudly.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "avc/common.hpp"

namespace avc::toml {

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<std::string, std::int64_t, double, bool, Array> v;

    bool is_string() const { return std::holds_alternative<std::string>(v); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
    bool is_float() const { return std::holds_alternative<double>(v); }
    bool is_bool() const { return std::holds_alternative<bool>(v); }
    bool is_array() const { return std::holds_alternative<Array>(v); }

    const std::string& as_string() const {
        if (!is_string()) throw ParseError("expected string value");
        return std::get<std::string>(v);
    }
    std::int64_t as_int() const {
        if (!is_int()) throw ParseError("expected integer value");
        return std::get<std::int64_t>(v);
    }
    // Integers promote to float on demand.
    double as_float() const {
        if (is_int()) return static_cast<double>(std::get<std::int64_t>(v));
        if (!is_float()) throw ParseError("expected float value");
        return std::get<double>(v);
    }
    bool as_bool() const {
        if (!is_bool()) throw ParseError("expected boolean value");
        return std::get<bool>(v);
    }
    const Array& as_array() const {
        if (!is_array()) throw ParseError("expected array value");
        return std::get<Array>(v);
    }
};

class Table {
  public:
    std::map<std::string, Value> values;
    std::map<std::string, Table> tables;
    std::map<std::string, std::vector<Table>> table_arrays;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    const Value& get(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw ParseError("missing required key '" + key + "'");
        return it->second;
    }

    std::string get_string(const std::string& key) const { return get(key).as_string(); }
    std::int64_t get_int(const std::string& key) const { return get(key).as_int(); }
    double get_float(const std::string& key) const { return get(key).as_float(); }
    bool get_bool(const std::string& key) const { return get(key).as_bool(); }

    std::string get_string_or(const std::string& key, const std::string& dflt) const {
        return has(key) ? get(key).as_string() : dflt;
    }
    std::int64_t get_int_or(const std::string& key, std::int64_t dflt) const {
        return has(key) ? get(key).as_int() : dflt;
    }
    double get_float_or(const std::string& key, double dflt) const {
        return has(key) ? get(key).as_float() : dflt;
    }
    bool get_bool_or(const std::string& key, bool dflt) const {
        return has(key) ? get(key).as_bool() : dflt;
    }

    const Table* table(const std::string& name) const {
        auto it = tables.find(name);
        return it == tables.end() ? nullptr : &it->second;
    }
    const Table& require_table(const std::string& name) const {
        const Table* t = table(name);
        if (!t) throw ParseError("missing required table [" + name + "]");
        return *t;
    }
    const std::vector<Table>& array_of(const std::string& name) const {
        static const std::vector<Table> empty;
        auto it = table_arrays.find(name);
        return it == table_arrays.end() ? empty : it->second;
    }

    // Strict-schema helper: rejects any key not in the allow-list.
    void expect_only(const std::set<std::string>& keys, const std::string& ctx) const {
        for (const auto& [k, _] : values)
            if (!keys.count(k))
                throw ParseError("unknown field '" + k + "' in " + ctx);
    }
    void expect_only_tables(const std::set<std::string>& names, const std::string& ctx) const {
        for (const auto& [k, _] : tables)
            if (!names.count(k)) throw ParseError("unknown table [" + k + "] in " + ctx);
        for (const auto& [k, _] : table_arrays)
            if (!names.count(k)) throw ParseError("unknown table [[" + k + "]] in " + ctx);
    }
};

namespace detail {

inline void skip_ws(std::string_view s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

inline std::string parse_bare_key(std::string_view s, std::size_t& i, int line) {
    std::size_t start = i;
    while (i < s.size() && is_bare_key_char(s[i])) ++i;
    if (i == start) throw ParseError("line " + std::to_string(line) + ": expected key");
    return std::string(s.substr(start, i - start));
}

inline Value parse_scalar(std::string_view tok, int line) {
    if (tok.empty()) throw ParseError("line " + std::to_string(line) + ": empty value");
    if (tok == "true") return Value{true};
    if (tok == "false") return Value{false};
    if (tok.front() == '"') {
        if (tok.size() < 2 || tok.back() != '"')
            throw ParseError("line " + std::to_string(line) + ": unterminated string");
        return Value{std::string(tok.substr(1, tok.size() - 2))};
    }
    // Integer iff it parses fully as one and has no float-ish characters.
    const bool floaty = tok.find_first_of(".eE") != std::string_view::npos ||
                        tok == "inf" || tok == "nan" || tok == "-inf";
    if (!floaty) {
        std::int64_t iv = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
        if (ec == std::errc() && p == tok.data() + tok.size()) return Value{iv};
    }
    double dv = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), dv);
    if (ec == std::errc() && p == tok.data() + tok.size()) return Value{dv};
    throw ParseError("line " + std::to_string(line) + ": bad value '" + std::string(tok) + "'");
}

// Scans one value token starting at i; handles quoted strings and arrays.
inline Value parse_value(std::string_view s, std::size_t& i, int line) {
    skip_ws(s, i);
    if (i >= s.size()) throw ParseError("line " + std::to_string(line) + ": missing value");
    if (s[i] == '[') {
        ++i;
        Array arr;
        for (;;) {
            skip_ws(s, i);
            if (i < s.size() && s[i] == ']') { ++i; break; }
            arr.push_back(parse_value(s, i, line));
            skip_ws(s, i);
            if (i < s.size() && s[i] == ',') { ++i; continue; }
            if (i < s.size() && s[i] == ']') { ++i; break; }
            throw ParseError("line " + std::to_string(line) + ": malformed array");
        }
        return Value{arr};
    }
    if (s[i] == '"') {
        std::size_t end = s.find('"', i + 1);
        if (end == std::string_view::npos)
            throw ParseError("line " + std::to_string(line) + ": unterminated string");
        Value v{std::string(s.substr(i + 1, end - i - 1))};
        i = end + 1;
        return v;
    }
    std::size_t start = i;
    while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != ' ' && s[i] != '\t') ++i;
    return parse_scalar(s.substr(start, i - start), line);
}

}  // namespace detail

inline Table parse(std::istream& in) {
    Table root;
    Table* current = &root;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // Strip comment (strings in this subset never contain '#').
        if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
        std::size_t i = 0;
        detail::skip_ws(line, i);
        if (i >= line.size() || line[i] == '\r') continue;

        if (line[i] == '[') {
            const bool is_array = i + 1 < line.size() && line[i + 1] == '[';
            i += is_array ? 2 : 1;
            std::string name = detail::parse_bare_key(line, i, lineno);
            const std::string closer = is_array ? "]]" : "]";
            if (line.compare(i, closer.size(), closer) != 0)
                throw ParseError("line " + std::to_string(lineno) + ": malformed table header");
            i += closer.size();
            detail::skip_ws(line, i);
            if (i < line.size() && line[i] != '\r')
                throw ParseError("line " + std::to_string(lineno) + ": trailing text after table header");
            if (is_array) {
                root.table_arrays[name].emplace_back();
                current = &root.table_arrays[name].back();
            } else {
                if (root.tables.count(name))
                    throw ParseError("line " + std::to_string(lineno) + ": duplicate table [" + name + "]");
                current = &root.tables[name];
            }
            continue;
        }

        std::string key = detail::parse_bare_key(line, i, lineno);
        detail::skip_ws(line, i);
        if (i >= line.size() || line[i] != '=')
            throw ParseError("line " + std::to_string(lineno) + ": expected '=' after key '" + key + "'");
        ++i;
        Value v = detail::parse_value(line, i, lineno);
        detail::skip_ws(line, i);
        if (i < line.size() && line[i] != '\r')
            throw ParseError("line " + std::to_string(lineno) + ": trailing text after value");
        if (current->values.count(key))
            throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        current->values[key] = std::move(v);
    }
    return root;
}

inline Table parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

inline Table parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    return parse(in);
}

}  // namespace avc::toml
