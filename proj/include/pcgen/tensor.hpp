#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pcgen/errors.hpp"
#include "pcgen/rng.hpp"
#include "pcgen/threadpool.hpp"

namespace pcgen {

using i64 = std::int64_t;

// Dense row-major tensor. Double precision is used for tests and metric
// code, single precision for training.
template <class T>
struct Tensor {
    std::vector<i64> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<i64> s) : shape(std::move(s)), v(numel_of(shape), T(0)) {}
    Tensor(std::vector<i64> s, std::vector<T> data) : shape(std::move(s)), v(std::move(data)) {
        if (numel_of(shape) != static_cast<i64>(v.size()))
            throw NumericError("tensor: shape does not match value count");
    }

    static i64 numel_of(const std::vector<i64>& s) {
        i64 n = 1;
        for (i64 d : s) n *= d;
        return n;
    }

    i64 numel() const { return static_cast<i64>(v.size()); }
    i64 dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape.size()); }

    i64 rows() const { return ndim() == 0 ? 1 : shape[0]; }
    i64 cols() const { return ndim() <= 1 ? numel() : numel() / shape[0]; }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    T& operator()(i64 r, i64 c) { return v[static_cast<size_t>(r * cols() + c)]; }
    T operator()(i64 r, i64 c) const { return v[static_cast<size_t>(r * cols() + c)]; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    bool all_finite() const {
        for (T x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
        os << "]";
        return os.str();
    }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

template <class T>
Tensor<T> zeros_like(const Tensor<T>& t) {
    return Tensor<T>(t.shape);
}

template <class T>
Tensor<T> random_normal(std::vector<i64> shape, Rng& rng, double stddev = 1.0) {
    Tensor<T> t(std::move(shape));
    for (auto& x : t.v) x = static_cast<T>(rng.normal() * stddev);
    return t;
}

template <class T>
Tensor<T> random_uniform(std::vector<i64> shape, Rng& rng, double lo, double hi) {
    Tensor<T> t(std::move(shape));
    for (auto& x : t.v) x = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

// ---------------------------------------------------------------------------
// Dense kernels. All parallel variants split work by output row, so results
// do not depend on the thread count.
// ---------------------------------------------------------------------------

namespace detail {

// One row-panel of C[i, j0:j0+JB) accumulated in registers across k.
template <class T, int JB>
inline void gemm_nn_panel(const T* A, const T* B, T* C, i64 i, i64 k, i64 n, i64 j0,
                          bool accumulate) {
    T acc[JB];
    T* crow = C + i * n + j0;
    if (accumulate) {
        for (int j = 0; j < JB; ++j) acc[j] = crow[j];
    } else {
        for (int j = 0; j < JB; ++j) acc[j] = T(0);
    }
    const T* arow = A + i * k;
    for (i64 p = 0; p < k; ++p) {
        const T a = arow[p];
        const T* brow = B + p * n + j0;
        for (int j = 0; j < JB; ++j) acc[j] += a * brow[j];
    }
    for (int j = 0; j < JB; ++j) crow[j] = acc[j];
}

}  // namespace detail

// C(m x n) = A(m x k) * B(k x n), optionally accumulating into C.
template <class T>
void gemm_nn(const T* A, const T* B, T* C, i64 m, i64 k, i64 n, bool accumulate = false) {
    constexpr int JB = 32;
    parallel_ranges(m, [&](i64 lo, i64 hi) {
        for (i64 i = lo; i < hi; ++i) {
            i64 j0 = 0;
            for (; j0 + JB <= n; j0 += JB) detail::gemm_nn_panel<T, JB>(A, B, C, i, k, n, j0, accumulate);
            if (j0 < n) {
                T* crow = C + i * n;
                if (!accumulate)
                    for (i64 j = j0; j < n; ++j) crow[j] = T(0);
                const T* arow = A + i * k;
                for (i64 p = 0; p < k; ++p) {
                    const T a = arow[p];
                    const T* brow = B + p * n;
                    for (i64 j = j0; j < n; ++j) crow[j] += a * brow[j];
                }
            }
        }
    });
}

// C(m x k) = A(m x n) * B^T where B is (k x n). B is transposed into a
// scratch buffer so the hot loop is the same contiguous panel kernel as
// gemm_nn; the copy is negligible next to the multiply.
template <class T>
void gemm_nt(const T* A, const T* B, T* C, i64 m, i64 n, i64 k, bool accumulate = false) {
    std::vector<T> bt(static_cast<size_t>(n * k));
    for (i64 p = 0; p < k; ++p)
        for (i64 j = 0; j < n; ++j) bt[j * k + p] = B[p * n + j];
    gemm_nn(A, bt.data(), C, m, n, k, accumulate);
}

// C(k x n) = A^T * B where A is (m x k), B is (m x n): sum of outer products.
// Parallel over rows of C (columns of A).
template <class T>
void gemm_tn(const T* A, const T* B, T* C, i64 m, i64 k, i64 n, bool accumulate = false) {
    parallel_ranges(k, [&](i64 plo, i64 phi) {
        if (!accumulate) {
            for (i64 p = plo; p < phi; ++p)
                for (i64 j = 0; j < n; ++j) C[p * n + j] = T(0);
        }
        for (i64 i = 0; i < m; ++i) {
            const T* arow = A + i * k;
            const T* brow = B + i * n;
            for (i64 p = plo; p < phi; ++p) {
                const T a = arow[p];
                if (a == T(0)) continue;
                T* crow = C + p * n;
                for (i64 j = 0; j < n; ++j) crow[j] += a * brow[j];
            }
        }
    });
}

struct Conv2dSpec {
    i64 in_channels = 1;
    i64 out_channels = 1;
    i64 kernel = 3;
    i64 stride = 2;
    i64 pad = 1;

    i64 out_extent(i64 in) const { return (in + 2 * pad - kernel) / stride + 1; }
};

// x: (B, Cin, H, W), w: (Cout, Cin, K, K), b: (Cout) -> (B, Cout, Ho, Wo)
template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         const Conv2dSpec& cs) {
    const i64 B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const i64 Ho = cs.out_extent(H), Wo = cs.out_extent(W);
    Tensor<T> y({B, cs.out_channels, Ho, Wo});
    parallel_ranges(B, [&](i64 blo, i64 bhi) {
        for (i64 n = blo; n < bhi; ++n) {
            for (i64 co = 0; co < cs.out_channels; ++co) {
                T* yp = y.data() + ((n * cs.out_channels + co) * Ho) * Wo;
                for (i64 ho = 0; ho < Ho; ++ho) {
                    for (i64 wo = 0; wo < Wo; ++wo) {
                        T s = b.v[static_cast<size_t>(co)];
                        const i64 h0 = ho * cs.stride - cs.pad;
                        const i64 w0 = wo * cs.stride - cs.pad;
                        for (i64 ci = 0; ci < C; ++ci) {
                            const T* xp = x.data() + ((n * C + ci) * H) * W;
                            const T* wp = w.data() + ((co * C + ci) * cs.kernel) * cs.kernel;
                            for (i64 kh = 0; kh < cs.kernel; ++kh) {
                                const i64 h = h0 + kh;
                                if (h < 0 || h >= H) continue;
                                for (i64 kw = 0; kw < cs.kernel; ++kw) {
                                    const i64 ww = w0 + kw;
                                    if (ww < 0 || ww >= W) continue;
                                    s += xp[h * W + ww] * wp[kh * cs.kernel + kw];
                                }
                            }
                        }
                        yp[ho * Wo + wo] = s;
                    }
                }
            }
        }
    });
    return y;
}

// Gradients for conv2d_forward; any of the outputs may be null to skip.
template <class T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Conv2dSpec& cs,
                     const Tensor<T>& dy, Tensor<T>* dx, Tensor<T>* dw, Tensor<T>* db) {
    const i64 B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const i64 Ho = cs.out_extent(H), Wo = cs.out_extent(W);
    if (dx) {
        parallel_ranges(B, [&](i64 blo, i64 bhi) {
            for (i64 n = blo; n < bhi; ++n) {
                for (i64 co = 0; co < cs.out_channels; ++co) {
                    const T* dyp = dy.data() + ((n * cs.out_channels + co) * Ho) * Wo;
                    for (i64 ho = 0; ho < Ho; ++ho) {
                        for (i64 wo = 0; wo < Wo; ++wo) {
                            const T g = dyp[ho * Wo + wo];
                            if (g == T(0)) continue;
                            const i64 h0 = ho * cs.stride - cs.pad;
                            const i64 w0 = wo * cs.stride - cs.pad;
                            for (i64 ci = 0; ci < C; ++ci) {
                                T* dxp = dx->data() + ((n * C + ci) * H) * W;
                                const T* wp = w.data() + ((co * C + ci) * cs.kernel) * cs.kernel;
                                for (i64 kh = 0; kh < cs.kernel; ++kh) {
                                    const i64 h = h0 + kh;
                                    if (h < 0 || h >= H) continue;
                                    for (i64 kw = 0; kw < cs.kernel; ++kw) {
                                        const i64 ww = w0 + kw;
                                        if (ww < 0 || ww >= W) continue;
                                        dxp[h * W + ww] += g * wp[kh * cs.kernel + kw];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    if (dw || db) {
        for (i64 n = 0; n < B; ++n) {
            for (i64 co = 0; co < cs.out_channels; ++co) {
                const T* dyp = dy.data() + ((n * cs.out_channels + co) * Ho) * Wo;
                for (i64 ho = 0; ho < Ho; ++ho) {
                    for (i64 wo = 0; wo < Wo; ++wo) {
                        const T g = dyp[ho * Wo + wo];
                        if (g == T(0)) continue;
                        if (db) db->v[static_cast<size_t>(co)] += g;
                        if (!dw) continue;
                        const i64 h0 = ho * cs.stride - cs.pad;
                        const i64 w0 = wo * cs.stride - cs.pad;
                        for (i64 ci = 0; ci < C; ++ci) {
                            const T* xp = x.data() + ((n * C + ci) * H) * W;
                            T* dwp = dw->data() + ((co * C + ci) * cs.kernel) * cs.kernel;
                            for (i64 kh = 0; kh < cs.kernel; ++kh) {
                                const i64 h = h0 + kh;
                                if (h < 0 || h >= H) continue;
                                for (i64 kw = 0; kw < cs.kernel; ++kw) {
                                    const i64 ww = w0 + kw;
                                    if (ww < 0 || ww >= W) continue;
                                    dwp[kh * cs.kernel + kw] += g * xp[h * W + ww];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace pcgen
