#pragma once

// Campaign reports: a JSON summary carrying verdict, summary statistics,
// the thresholds that produced the verdict, and provenance (config digest,
// code version, seed), plus CSV tables for per-cell values. Reports embed
// everything needed to reproduce them and are byte-stable for a fixed
// (config, seed), independent of the worker count.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bjlab/version.hpp"

namespace bjlab {

enum class Verdict { Pass, Warn, Fail };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Warn: return "WARN";
        case Verdict::Fail: return "FAIL";
    }
    return "FAIL";
}

// FNV-1a over raw bytes, printed as 16 hex digits
inline std::string fnv1a_digest(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << h;
    return os.str();
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < header.size(); ++i)
            os << header[i] << (i + 1 < header.size() ? "," : "");
        os << "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                os << row[i] << (i + 1 < row.size() ? "," : "");
            os << "\n";
        }
        return os.str();
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << to_string();
    }
};

// shortest round-trip double formatting, shared by CSV writers
inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

struct BoundReport {
    std::string campaign;
    Verdict verdict{Verdict::Pass};
    nlohmann::json summary = nlohmann::json::object();
    nlohmann::json thresholds = nlohmann::json::object();
    std::vector<std::string> warnings;
    CsvTable cells;
    std::string config_digest;
    std::uint64_t seed{0};

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["campaign"] = campaign;
        j["verdict"] = to_string(verdict);
        j["summary"] = summary;
        j["thresholds"] = thresholds;
        j["warnings"] = warnings;
        j["provenance"] = {{"config_digest", config_digest},
                           {"seed", seed},
                           {"version", version}};
        return j;
    }

    void write_json(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << to_json().dump(2) << "\n";
    }
};

}  // namespace bjlab
