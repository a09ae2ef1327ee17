#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace wattprof {

#ifndef WATTPROF_ASSET_DIR
#define WATTPROF_ASSET_DIR "assets"
#endif

// Versioned text assets (prompt templates, registries). Overridable via the
// WATTPROF_ASSET_DIR environment variable.
inline std::string asset_path(const std::string& rel) {
    if (const char* dir = std::getenv("WATTPROF_ASSET_DIR"); dir && *dir)
        return std::string(dir) + "/" + rel;
    return std::string(WATTPROF_ASSET_DIR) + "/" + rel;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Replaces every occurrence of {key} in a template.
inline std::string fill_template(std::string tmpl, const std::string& key,
                                 const std::string& value) {
    const std::string needle = "{" + key + "}";
    size_t pos = 0;
    while ((pos = tmpl.find(needle, pos)) != std::string::npos) {
        tmpl.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return tmpl;
}

}  // namespace wattprof
