#include "pcgen/geometry.hpp"

#include <algorithm>

namespace pcgen {

std::pair<PointCloud, BoxTransform> normalize_to_box(const PointCloud& cloud) {
    if (cloud.empty()) throw NumericError("normalize_to_box: empty cloud");
    Vec3 lo = cloud[0], hi = cloud[0];
    for (const auto& p : cloud.points) {
        if (!p.finite()) throw NumericError("normalize_to_box: non-finite coordinate");
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    const Vec3 side = hi - lo;
    const double max_side = std::max({side.x, side.y, side.z});
    if (max_side <= 0.0) throw NumericError("normalize_to_box: zero extent");

    BoxTransform t;
    t.center = (lo + hi) * 0.5;
    t.scale = 0.5 * max_side;

    PointCloud out;
    out.points.reserve(cloud.points.size());
    for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
    return {std::move(out), t};
}

ViewBasis ViewBasis::from_angles(double azimuth, double elevation) {
    ViewBasis vb;
    const double ce = std::cos(elevation);
    vb.dir = {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
    Vec3 up_hint{0.0, 0.0, 1.0};
    Vec3 r = up_hint.cross(vb.dir);
    if (r.norm() < 1e-9) {
        up_hint = {1.0, 0.0, 0.0};  // looking straight up/down
        r = up_hint.cross(vb.dir);
    }
    vb.right = r / r.norm();
    vb.up = vb.dir.cross(vb.right);
    return vb;
}

}  // namespace pcgen
