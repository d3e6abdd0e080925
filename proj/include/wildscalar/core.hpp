#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace wildscalar {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double pi = 3.14159265358979323846;
constexpr double two_pi = 2.0 * pi;

enum class ErrorKind {
    SingularFrequency,
    ZeroFrequency,
    UnknownSymbol,
    NoRegularPoints,
    ShapeMismatch,
    SingularSupport,
    TruncationSearchExhausted,
    GridOverflow,
    DegenerateDirection,
    PropertyFailure,
    TransversalityFailure,
    SpanFailure,
    DegenerateTheta,
    OutsideBall,
    NoIntersection,
    WeightOutOfRange,
    EtaTooLarge,
    CascadeDegenerate,
    CoverFailure,
    GridMismatch,
    UsageError,
    PreconditionViolation,
    IoError,
};

inline const char* kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::SingularFrequency: return "SingularFrequency";
    case ErrorKind::ZeroFrequency: return "ZeroFrequency";
    case ErrorKind::UnknownSymbol: return "UnknownSymbol";
    case ErrorKind::NoRegularPoints: return "NoRegularPoints";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::SingularSupport: return "SingularSupport";
    case ErrorKind::TruncationSearchExhausted: return "TruncationSearchExhausted";
    case ErrorKind::GridOverflow: return "GridOverflow";
    case ErrorKind::DegenerateDirection: return "DegenerateDirection";
    case ErrorKind::PropertyFailure: return "PropertyFailure";
    case ErrorKind::TransversalityFailure: return "TransversalityFailure";
    case ErrorKind::SpanFailure: return "SpanFailure";
    case ErrorKind::DegenerateTheta: return "DegenerateTheta";
    case ErrorKind::OutsideBall: return "OutsideBall";
    case ErrorKind::NoIntersection: return "NoIntersection";
    case ErrorKind::WeightOutOfRange: return "WeightOutOfRange";
    case ErrorKind::EtaTooLarge: return "EtaTooLarge";
    case ErrorKind::CascadeDegenerate: return "CascadeDegenerate";
    case ErrorKind::CoverFailure: return "CoverFailure";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::UsageError: return "UsageError";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// PropertyFailure carries which property failed and by how much
class PropertyError : public Error {
public:
    PropertyError(std::string which, double measured, double bound)
        : Error(ErrorKind::PropertyFailure,
                which + " measured " + std::to_string(measured) + " vs bound " + std::to_string(bound)),
          which(std::move(which)), measured(measured), bound(bound) {}

    std::string which;
    double measured;
    double bound;
};

inline Vec unit(const Vec& v) { return v / v.norm(); }

// uniform point on the unit sphere
inline Vec random_unit(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec v(n);
    do {
        for (int i = 0; i < n; ++i) v(i) = g(rng);
    } while (v.norm() < 1e-8);
    return unit(v);
}

// orthonormal basis of the tangent space of the sphere at unit xi (n x (n-1))
inline Mat sphere_tangent_basis(const Vec& xi) {
    const int n = static_cast<int>(xi.size());
    Mat full(n, n);
    full.col(0) = xi;
    int c = 1;
    for (int i = 0; i < n && c < n; ++i) {
        Vec e = Vec::Zero(n);
        e(i) = 1.0;
        for (int j = 0; j < c; ++j) e -= full.col(j).dot(e) * full.col(j);
        if (e.norm() > 1e-6) full.col(c++) = unit(e);
    }
    return full.rightCols(n - 1);
}

inline double smoothstep(double z) {
    if (z <= 0.0) return 0.0;
    if (z >= 1.0) return 1.0;
    return z * z * z * (10.0 - 15.0 * z + 6.0 * z * z);
}

inline double smoothstep_d1(double z) {
    if (z <= 0.0 || z >= 1.0) return 0.0;
    return 30.0 * z * z * (1.0 - z) * (1.0 - z);
}

inline double smoothstep_d2(double z) {
    if (z <= 0.0 || z >= 1.0) return 0.0;
    return 60.0 * z * (1.0 - z) * (1.0 - 2.0 * z);
}

}
