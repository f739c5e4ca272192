#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regbench/geometry.hpp"
#include "regbench/types.hpp"

namespace regbench {

// One evaluable scene pair. Supervision is whatever subset is present:
// tie points, a ground-truth affine, or (for retrieval records) a label.
struct ScenePairRecord {
    std::string pair_id;
    std::string optical_path;
    std::string sar_path;
    std::string tiepoints_path;                 // empty when absent
    std::optional<AffineTransform> gt_affine;   // inline in the manifest
};

// One retrieval query with its ordered candidate pool; candidate ids are
// positions in `candidate_paths`.
struct RetrievalRecord {
    std::string query_id;
    std::string query_path;
    std::vector<std::string> candidate_paths;
    int positive_index = -1;
};

struct Manifest {
    std::vector<ScenePairRecord> pairs;
    std::vector<RetrievalRecord> retrieval;
};

// Line-delimited records of whitespace-separated key=value fields. Lines with
// a pair_id key describe scene pairs (keys: pair_id, optical, sar, tiepoints,
// gt_affine=a,b,tx,c,d,ty); lines with a query_id key describe retrieval
// queries (keys: query_id, query, candidates=p1,p2,..., positive=<index>).
// '#' starts a comment. Relative paths resolve against the manifest location.
Manifest load_manifest(const std::string& path);

// 4-column CSV: x_opt, y_opt, x_sar, y_sar (one optional header line).
std::vector<TiePoint> load_tiepoints_csv(const std::string& path);
void save_tiepoints_csv(const std::string& path, std::span<const TiePoint> points);

// Transform files hold one line of 6 or 9 whitespace-separated numbers.
GeometricTransform load_transform(const std::string& path);
void save_transform(const std::string& path, const GeometricTransform& t);

}  // namespace regbench
