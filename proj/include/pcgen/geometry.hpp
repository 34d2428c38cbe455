#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pcgen/errors.hpp"
#include "pcgen/rng.hpp"

namespace pcgen {

using i64 = std::int64_t;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double sq_dist(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

// Ordered set of 3-d points in normalized shape coordinates.
struct PointCloud {
    std::vector<Vec3> points;

    PointCloud() = default;
    explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)) {}

    i64 size() const { return static_cast<i64>(points.size()); }
    bool empty() const { return points.empty(); }
    Vec3& operator[](i64 i) { return points[static_cast<size_t>(i)]; }
    const Vec3& operator[](i64 i) const { return points[static_cast<size_t>(i)]; }

    bool all_finite() const {
        for (const auto& p : points)
            if (!p.finite()) return false;
        return true;
    }
};

// H x W x C raster with values in [0, 1]; C is 1 (gray) or 3 (RGB).
struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<double> values;  // row-major, channel innermost

    ImageTensor() = default;
    ImageTensor(int h, int w, int c)
        : height(h), width(w), channels(c),
          values(static_cast<size_t>(h) * w * c, 0.0) {}

    double& at(int y, int x, int c = 0) {
        return values[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c = 0) const {
        return values[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

// Maps a cloud into [-1,1]^3: subtract the bounding-box midpoint, divide by
// half the largest side. Uniform scaling, so aspect ratio is preserved.
struct BoxTransform {
    Vec3 center;
    double scale = 1.0;

    Vec3 apply(const Vec3& p) const { return (p - center) / scale; }
    Vec3 invert(const Vec3& p) const { return p * scale + center; }
};

std::pair<PointCloud, BoxTransform> normalize_to_box(const PointCloud& cloud);

// Orthographic camera basis for an (azimuth, elevation) viewpoint, both in
// radians. Projects world points onto the view plane.
struct ViewBasis {
    Vec3 right, up, dir;

    static ViewBasis from_angles(double azimuth, double elevation);
    // (u, v) coordinates in the view plane.
    std::pair<double, double> project(const Vec3& p) const {
        return {p.dot(right), p.dot(up)};
    }
};

}  // namespace pcgen
