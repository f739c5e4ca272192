#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace regbench {

// Continuous pixel coordinates, origin at the top-left pixel center.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// A matcher-proposed point pair: src in the optical frame, dst in the SAR
// frame, confidence in [0,1].
struct Correspondence {
    Point2 src;
    Point2 dst;
    double confidence = 1.0;
};

// Ground-truth pair of corresponding full-resolution pixel locations.
struct TiePoint {
    Point2 optical;
    Point2 sar;
};

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

struct UnsupportedBandCount : Error {
    using Error::Error;
};

struct DegeneratePoint : Error {
    using Error::Error;
};

struct DegenerateConfiguration : Error {
    using Error::Error;
};

// Common base for the two pair-level fit failures; the pipeline maps these to
// a Failed pair status instead of propagating them.
struct FitFailure : Error {
    using Error::Error;
};

struct InsufficientCorrespondences : FitFailure {
    using FitFailure::FitFailure;
};

struct BelowInlierGate : FitFailure {
    using FitFailure::FitFailure;
};

struct ExternalMatcherFailure : Error {
    using Error::Error;
};

struct EmptyAxis : Error {
    using Error::Error;
};

}  // namespace regbench
