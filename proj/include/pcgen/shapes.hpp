#pragma once

#include <string>
#include <vector>

#include "pcgen/geometry.hpp"

namespace pcgen {

// Parametric shape families with analytic surfaces. Sampling is uniform by
// surface area; every sample is returned in the shape's normalized frame
// (analytic bounding box mapped into [-1,1]^3 with uniform scaling), so
// independent samplings of the same spec share one coordinate frame.
enum class ShapeFamily { Ellipsoid, Box, Cross, CylinderComposite };

const char* shape_family_name(ShapeFamily f);
ShapeFamily shape_family_from_name(const std::string& name);

struct ShapeSpec {
    ShapeFamily family = ShapeFamily::Ellipsoid;
    std::vector<double> params;  // family-specific, see shapes.cpp
    int category_id = 0;

    void validate() const;  // throws NumericError on out-of-range parameters
};

// Exact surface area of the (possibly composite) surface.
double shape_surface_area(const ShapeSpec& spec);

// Analytic bounding box of the raw (unnormalized) surface.
void shape_bbox(const ShapeSpec& spec, Vec3* center, Vec3* half_extent);

// The normalization applied to every sample: uniform scale by the largest
// analytic half-extent.
BoxTransform shape_frame(const ShapeSpec& spec);

// One area-uniform sample on the raw surface.
Vec3 sample_shape_raw(const ShapeSpec& spec, Rng& rng);

// n area-uniform samples, normalized into [-1,1]^3. Deterministic given
// (spec, n, seed of rng).
PointCloud sample_shape_surface(const ShapeSpec& spec, i64 n, Rng& rng);

// Random spec for a family, parameters uniform over the documented ranges.
ShapeSpec random_shape_spec(ShapeFamily family, int category_id, Rng& rng);

// Orthographic occupancy silhouette of the normalized surface, anti-aliased
// via bilinear splatting of a dense surface sampling. Deterministic in all
// arguments.
ImageTensor render_silhouette(const ShapeSpec& spec, double azimuth, double elevation,
                              int resolution);

}  // namespace pcgen
