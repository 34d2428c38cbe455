#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "pcgen/geometry.hpp"

namespace pcgen {

// Median-split kd-tree over 3-d points for exact nearest-neighbor queries.
// Distances are computed with the same sq_dist used by the brute-force path,
// so the returned minimum matches an exhaustive scan bit for bit.
class KdTree3 {
  public:
    explicit KdTree3(const PointCloud& cloud, int leaf_size = 12)
        : pts_(cloud.points), leaf_size_(leaf_size < 1 ? 1 : leaf_size) {
        if (pts_.empty()) throw NumericError("kd-tree: empty cloud");
        order_.resize(pts_.size());
        for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
        nodes_.reserve(2 * pts_.size() / leaf_size_ + 4);
        root_ = build(0, static_cast<int>(pts_.size()));
    }

    // Squared distance to the nearest point; optionally its index.
    double nearest_sq(const Vec3& q, int* index = nullptr) const {
        Best best;
        search(root_, q, best);
        if (index) *index = best.idx;
        return best.d2;
    }

  private:
    struct Node {
        double split = 0.0;
        int axis = -1;  // -1 marks a leaf
        int lo = 0, hi = 0;
        int left = -1, right = -1;
    };

    struct Best {
        double d2 = std::numeric_limits<double>::infinity();
        int idx = -1;
    };

    static double coord(const Vec3& p, int axis) {
        return axis == 0 ? p.x : (axis == 1 ? p.y : p.z);
    }

    int build(int lo, int hi) {
        Node nd;
        nd.lo = lo;
        nd.hi = hi;
        if (hi - lo <= leaf_size_) {
            nodes_.push_back(nd);
            return static_cast<int>(nodes_.size()) - 1;
        }
        Vec3 mn = pts_[order_[lo]], mx = mn;
        for (int i = lo + 1; i < hi; ++i) {
            const Vec3& p = pts_[order_[i]];
            mn.x = std::min(mn.x, p.x); mx.x = std::max(mx.x, p.x);
            mn.y = std::min(mn.y, p.y); mx.y = std::max(mx.y, p.y);
            mn.z = std::min(mn.z, p.z); mx.z = std::max(mx.z, p.z);
        }
        const Vec3 span = mx - mn;
        int axis = 0;
        if (span.y > span.x) axis = 1;
        if (coord(span, 2) > coord(span, axis)) axis = 2;
        if (coord(span, axis) <= 0.0) {  // all points identical: leaf
            nodes_.push_back(nd);
            return static_cast<int>(nodes_.size()) - 1;
        }
        const int mid = (lo + hi) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](int a, int b) { return coord(pts_[a], axis) < coord(pts_[b], axis); });
        nd.axis = axis;
        nd.split = coord(pts_[order_[mid]], axis);
        const int self = static_cast<int>(nodes_.size());
        nodes_.push_back(nd);
        const int l = build(lo, mid);
        const int r = build(mid, hi);
        nodes_[self].left = l;
        nodes_[self].right = r;
        return self;
    }

    void search(int ni, const Vec3& q, Best& best) const {
        const Node& nd = nodes_[ni];
        if (nd.axis < 0) {
            for (int i = nd.lo; i < nd.hi; ++i) {
                const int idx = order_[i];
                const double d2 = sq_dist(q, pts_[idx]);
                if (d2 < best.d2) {
                    best.d2 = d2;
                    best.idx = idx;
                }
            }
            return;
        }
        const double diff = coord(q, nd.axis) - nd.split;
        const int near = diff < 0.0 ? nd.left : nd.right;
        const int far = diff < 0.0 ? nd.right : nd.left;
        search(near, q, best);
        if (diff * diff < best.d2) search(far, q, best);
    }

    const std::vector<Vec3>& pts_;
    int leaf_size_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = 0;
};

}  // namespace pcgen
