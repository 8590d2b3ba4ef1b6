#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdns/dnswire/message.hpp"

#ifndef SDNS_FIXTURE_DIR
#error "SDNS_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace sdns::testfx {

inline std::string fixture_path(const std::string& name) { return std::string(SDNS_FIXTURE_DIR) + "/" + name; }

inline std::string read_text(const std::string& name) {
    std::ifstream in(fixture_path(name));
    if (!in) throw std::runtime_error("missing fixture " + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// A file holding one hex blob, whitespace ignored.
inline std::vector<std::uint8_t> read_hex(const std::string& name) {
    std::string text = read_text(name), digits;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) digits += c;
    return dns::from_hex(digits);
}

/// "name hex" lines; '#' starts a comment line.
inline std::map<std::string, std::vector<std::uint8_t>> read_corpus(const std::string& name) {
    std::istringstream in(read_text(name));
    std::map<std::string, std::vector<std::uint8_t>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string key, hex;
        fields >> key >> hex;
        out[key] = dns::from_hex(hex);
    }
    return out;
}

}  // namespace sdns::testfx
