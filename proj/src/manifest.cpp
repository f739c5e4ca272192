#include "regbench/manifest.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace regbench {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find(sep, start);
        if (end == std::string::npos) {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

std::string resolve(const fs::path& base_dir, const std::string& path) {
    if (path.empty()) return path;
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (base_dir / p).lexically_normal().string();
}

double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw IoError("cannot parse " + what + " value \"" + text + "\"");
    }
}

}  // namespace

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path);
    const fs::path base_dir = fs::path(path).parent_path();

    Manifest manifest;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);

        std::map<std::string, std::string> fields;
        std::istringstream ls(line);
        std::string token;
        while (ls >> token) {
            const std::size_t eq = token.find('=');
            if (eq == std::string::npos)
                throw IoError(path + ":" + std::to_string(line_number) +
                              ": expected key=value, got \"" + token + "\"");
            fields[token.substr(0, eq)] = token.substr(eq + 1);
        }
        if (fields.empty()) continue;

        if (fields.count("pair_id")) {
            ScenePairRecord record;
            record.pair_id = fields["pair_id"];
            record.optical_path = resolve(base_dir, fields["optical"]);
            record.sar_path = resolve(base_dir, fields["sar"]);
            record.tiepoints_path = resolve(base_dir, fields["tiepoints"]);
            if (record.optical_path.empty() || record.sar_path.empty())
                throw IoError(path + ":" + std::to_string(line_number) +
                              ": pair record needs optical= and sar=");
            if (fields.count("gt_affine")) {
                const auto parts = split(fields["gt_affine"], ',');
                if (parts.size() != 6)
                    throw IoError(path + ":" + std::to_string(line_number) +
                                  ": gt_affine needs 6 comma-separated numbers");
                AffineTransform a;
                for (int i = 0; i < 6; ++i) a.m[i] = parse_double(parts[i], "gt_affine");
                record.gt_affine = a;
            }
            manifest.pairs.push_back(std::move(record));
        } else if (fields.count("query_id")) {
            RetrievalRecord record;
            record.query_id = fields["query_id"];
            record.query_path = resolve(base_dir, fields["query"]);
            for (const auto& c : split(fields["candidates"], ','))
                if (!c.empty()) record.candidate_paths.push_back(resolve(base_dir, c));
            if (record.query_path.empty() || record.candidate_paths.empty())
                throw IoError(path + ":" + std::to_string(line_number) +
                              ": retrieval record needs query= and candidates=");
            if (!fields.count("positive"))
                throw IoError(path + ":" + std::to_string(line_number) +
                              ": retrieval record needs positive=<index>");
            record.positive_index =
                static_cast<int>(parse_double(fields["positive"], "positive"));
            if (record.positive_index < 0 ||
                record.positive_index >= static_cast<int>(record.candidate_paths.size()))
                throw IoError(path + ":" + std::to_string(line_number) +
                              ": positive index out of range");
            manifest.retrieval.push_back(std::move(record));
        } else {
            throw IoError(path + ":" + std::to_string(line_number) +
                          ": record needs a pair_id= or query_id= key");
        }
    }
    return manifest;
}

std::vector<TiePoint> load_tiepoints_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tie points " + path);
    std::vector<TiePoint> points;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::string cleaned = line;
        for (auto& c : cleaned)
            if (c == ',') c = ' ';
        std::istringstream ls(cleaned);
        TiePoint tp;
        if (!(ls >> tp.optical.x >> tp.optical.y >> tp.sar.x >> tp.sar.y)) {
            if (line_number == 1) continue;  // header row
            throw IoError(path + ":" + std::to_string(line_number) +
                          ": expected 4 numeric columns");
        }
        points.push_back(tp);
    }
    return points;
}

void save_tiepoints_csv(const std::string& path, std::span<const TiePoint> points) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "x_opt,y_opt,x_sar,y_sar\n";
    char buf[160];
    for (const auto& tp : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", tp.optical.x, tp.optical.y,
                      tp.sar.x, tp.sar.y);
        out << buf;
    }
}

GeometricTransform load_transform(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open transform " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_transform(buffer.str());
}

void save_transform(const std::string& path, const GeometricTransform& t) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << serialize_transform(t) << "\n";
}

}  // namespace regbench
