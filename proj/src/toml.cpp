#include "imv/toml.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "imv/errors.hpp"

namespace imv {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// strips a trailing comment that is not inside a string
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* b = s.c_str();
    char* e = nullptr;
    out = std::strtod(b, &e);
    return e == b + s.size();
}

TomlValue parse_value(const std::string& raw, const std::string& origin, std::size_t lineno) {
    TomlValue v;
    std::string s = trim(raw);
    if (s.empty()) throw ParseError(origin + ":" + std::to_string(lineno) + ": missing value");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw ParseError(origin + ":" + std::to_string(lineno) + ": unterminated string");
        v.kind = TomlValue::Kind::String;
        v.str = s.substr(1, s.size() - 2);
        return v;
    }
    if (s == "true" || s == "false") {
        v.kind = TomlValue::Kind::Boolean;
        v.boolean = (s == "true");
        return v;
    }
    if (s.front() == '[') {
        if (s.back() != ']')
            throw ParseError(origin + ":" + std::to_string(lineno) + ": unterminated array");
        v.kind = TomlValue::Kind::NumberArray;
        std::string body = s.substr(1, s.size() - 2);
        std::istringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            double d;
            if (!parse_number(item, d))
                throw ParseError(origin + ":" + std::to_string(lineno) + ": '" + item +
                                 "' is not a number");
            v.array.push_back(d);
        }
        return v;
    }
    double d;
    if (parse_number(s, d)) {
        v.kind = TomlValue::Kind::Number;
        v.num = d;
        return v;
    }
    throw ParseError(origin + ":" + std::to_string(lineno) + ": cannot parse value '" + s + "'");
}

}  // namespace

TomlTable parse_toml(const std::string& text, const std::string& origin) {
    TomlTable table;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ParseError(origin + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty())
                throw ParseError(origin + ":" + std::to_string(lineno) + ": empty section name");
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        if (key.empty())
            throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
        std::string full = section.empty() ? key : section + "." + key;
        table[full] = parse_value(s.substr(eq + 1), origin, lineno);
    }
    return table;
}

TomlTable load_toml(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_toml: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml(buf.str(), path);
}

}  // namespace imv
