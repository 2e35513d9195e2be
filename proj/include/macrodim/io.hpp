#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "macrodim/green.hpp"
#include "macrodim/lattice.hpp"
#include "macrodim/percolation.hpp"

namespace macrodim {

using Json = nlohmann::ordered_json;

// Atomic write: temp file in the same directory, then rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    const auto dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
    std::filesystem::create_directories(dir);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- JSON encodings ---------------------------------------------------------

inline Json point_to_json(const LatticePoint& p) {
    Json arr = Json::array();
    for (Coord c : p.coords) arr.push_back(c);
    return arr;
}

inline LatticePoint point_from_json(const Json& j) {
    LatticePoint p;
    for (const auto& v : j) p.coords.push_back(v.get<Coord>());
    return p;
}

inline Json cube_to_json(const DyadicCube& q) {
    Json j;
    j["level"] = q.level;
    j["corner"] = Json::array();
    for (Coord c : q.corner) j["corner"].push_back(c);
    return j;
}

inline DyadicCube cube_from_json(const Json& j) {
    DyadicCube q;
    q.level = j.at("level").get<int>();
    for (const auto& v : j.at("corner")) q.corner.push_back(v.get<Coord>());
    return q;
}

// --- CSV encodings ----------------------------------------------------------

// Shell cell rows: k,x1,...,xd
inline std::string cells_to_csv(const std::vector<std::pair<int, LatticePoint>>& rows, int d) {
    std::ostringstream out;
    out << "k";
    for (int i = 1; i <= d; ++i) out << ",x" << i;
    out << "\n";
    for (const auto& [k, p] : rows) {
        out << k;
        for (Coord c : p.coords) out << ',' << c;
        out << "\n";
    }
    return out.str();
}

inline std::string survivors_to_csv(const SurvivorSet& s, int d) {
    std::vector<std::pair<int, LatticePoint>> rows;
    rows.reserve(s.cells.size());
    for (const auto& c : s.cells) rows.emplace_back(s.shell, c);
    return cells_to_csv(rows, d);
}

// Green table rows: x1,...,xd,estimate,std_err
inline std::string green_to_csv(const GreenTable& table) {
    std::ostringstream out;
    for (int i = 1; i <= table.d; ++i) out << (i > 1 ? "," : "") << 'x' << i;
    out << ",estimate,std_err\n";
    std::vector<Coord> x(static_cast<std::size_t>(table.d), -table.box_radius);
    char buf[64];
    for (std::size_t idx = 0; idx < table.values.size(); ++idx) {
        for (int i = 0; i < table.d; ++i)
            out << (i > 0 ? "," : "") << x[static_cast<std::size_t>(i)];
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", table.values[idx], table.errors[idx]);
        out << buf << "\n";
        int i = table.d - 1;
        while (i >= 0 && x[static_cast<std::size_t>(i)] == table.box_radius) {
            x[static_cast<std::size_t>(i)] = -table.box_radius;
            --i;
        }
        if (i >= 0) ++x[static_cast<std::size_t>(i)];
    }
    return out.str();
}

inline Json green_sidecar(const GreenTable& table) {
    Json j;
    j["method"] = table.method == GreenMethod::monte_carlo ? "monte_carlo" : "convolution";
    j["preset"] = table.preset;
    j["d"] = table.d;
    j["box_radius"] = table.box_radius;
    j["walks"] = table.budget.walks;
    j["horizon"] = table.budget.horizon;
    j["seed"] = table.seed;
    j["sweeps_run"] = table.sweeps_run;
    j["escaped_mass"] = table.escaped_mass;
    j["tail_bound"] = table.tail_bound;
    Json shells = Json::array();
    for (const auto& e : table.shell_potential) {
        Json s;
        s["estimate"] = e.estimate;
        s["std_err"] = e.std_err;
        shells.push_back(s);
    }
    j["shell_potential"] = shells;
    return j;
}

// --- PGM --------------------------------------------------------------------

inline std::string pgm_encode(const RasterImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n255\n";
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    return out;
}

// --- Config loading with line-precise diagnostics ----------------------------

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Json parse_config(const std::string& text, const std::string& source_name) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line:column
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(source_name + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": " + e.what());
    }
}

inline Json load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.string());
}

}  // namespace macrodim
