#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sewing {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Flat sectioned key-value configuration. Order is preserved so parsing
/// the serialized form reproduces the value exactly.
struct Config {
    using Section = std::vector<std::pair<std::string, std::string>>;
    std::vector<std::pair<std::string, Section>> sections;

    static Config parse_text(const std::string& text) {
        Config c;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        Section* cur = nullptr;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = detail::trim(line);
            if (t.empty() || t[0] == '#') continue;
            if (t.front() == '[') {
                if (t.back() != ']' || t.size() < 3)
                    throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
                std::string name = detail::trim(t.substr(1, t.size() - 2));
                for (const auto& s : c.sections)
                    if (s.first == name)
                        throw ConfigError("line " + std::to_string(lineno) + ": duplicate section [" +
                                          name + "]");
                c.sections.emplace_back(name, Section{});
                cur = &c.sections.back().second;
                continue;
            }
            std::size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
            if (!cur)
                throw ConfigError("line " + std::to_string(lineno) + ": key before any section");
            std::string key = detail::trim(t.substr(0, eq));
            std::string val = detail::trim(t.substr(eq + 1));
            if (key.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty key");
            for (const auto& kv : *cur)
                if (kv.first == key)
                    throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + key);
            cur->emplace_back(key, val);
        }
        return c;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_text(buf.str());
    }

    std::string serialize() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < sections.size(); ++i) {
            if (i) out << "\n";
            out << "[" << sections[i].first << "]\n";
            for (const auto& kv : sections[i].second)
                out << kv.first << " = " << kv.second << "\n";
        }
        return out.str();
    }

    bool operator==(const Config& o) const { return sections == o.sections; }

    const Section* find(const std::string& section) const {
        for (const auto& s : sections)
            if (s.first == section) return &s.second;
        return nullptr;
    }

    bool has(const std::string& section, const std::string& key) const {
        const Section* s = find(section);
        if (!s) return false;
        for (const auto& kv : *s)
            if (kv.first == key) return true;
        return false;
    }

    std::string get(const std::string& section, const std::string& key) const {
        const Section* s = find(section);
        if (s)
            for (const auto& kv : *s)
                if (kv.first == key) return kv.second;
        throw ConfigError("missing key " + section + "." + key);
    }

    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& def) const {
        return has(section, key) ? get(section, key) : def;
    }

    double num(const std::string& section, const std::string& key) const {
        const std::string v = get(section, key);
        try {
            std::size_t pos = 0;
            double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError("key " + section + "." + key + ": not a number: " + v);
        }
    }

    double num_or(const std::string& section, const std::string& key, double def) const {
        return has(section, key) ? num(section, key) : def;
    }
};

/// Rejects any section or key outside the allowed schema.
inline void validate_keys(const Config& c,
                          const std::map<std::string, std::set<std::string>>& allowed) {
    for (const auto& sec : c.sections) {
        auto it = allowed.find(sec.first);
        if (it == allowed.end()) throw ConfigError("unknown section [" + sec.first + "]");
        for (const auto& kv : sec.second)
            if (!it->second.count(kv.first))
                throw ConfigError("unknown key " + sec.first + "." + kv.first);
    }
}

}  // namespace sewing
