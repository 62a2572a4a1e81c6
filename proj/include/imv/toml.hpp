#ifndef IMV_TOML_HPP
#define IMV_TOML_HPP

#include <map>
#include <string>
#include <vector>

namespace imv {

/// Minimal TOML subset for run configs: [section] tables, string / number /
/// boolean values, arrays of numbers, and # comments. Keys are flattened to
/// "section.key".
struct TomlValue {
    enum class Kind { String, Number, Boolean, NumberArray } kind = Kind::String;
    std::string str;
    double num = 0.0;
    bool boolean = false;
    std::vector<double> array;
};

using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml(const std::string& text, const std::string& origin);
TomlTable load_toml(const std::string& path);

}  // namespace imv

#endif  // IMV_TOML_HPP
