#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcgen/params.hpp"
#include "pcgen/tensor.hpp"

namespace pcgen {

// Reverse-mode tape over a closed primitive set: affine/matmul, conv2d,
// relu, tanh, softplus, exp, elementwise arithmetic, column select/assemble,
// row repeat + segment reductions (the set-max pool), means, and the
// standard-normal log-pdf. Each op records a closure that scatters the
// upstream gradient into its inputs; backward() walks the tape in reverse.
//
// A tape built with grad_enabled=false skips closure creation and serves as
// the plain inference path.
template <class T>
class Tape {
  public:
    struct Var {
        int id = -1;
        bool valid() const { return id >= 0; }
    };

    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    const Tensor<T>& value(Var v) const { return nodes_[v.id].val; }
    const Tensor<T>& grad(Var v) const { return nodes_[v.id].grad; }
    double scalar(Var v) const { return static_cast<double>(nodes_[v.id].val.v.at(0)); }
    size_t size() const { return nodes_.size(); }

    Var input(Tensor<T> val, bool needs_grad = false) {
        return push(std::move(val), needs_grad && grad_enabled_, {}, nullptr, "input");
    }
    Var constant(Tensor<T> val) { return input(std::move(val), false); }

    // Leaf bound to a ParamStore entry; repeated lookups return the same node
    // so gradient contributions accumulate in one place.
    Var param(ParamStore<T>& store, const std::string& name) {
        auto it = param_cache_.find(param_key(store, name));
        if (it != param_cache_.end()) return it->second;
        Var v = push(store.at(name), grad_enabled_, {}, nullptr, "param");
        param_cache_.emplace(param_key(store, name), v);
        bindings_.push_back({v, &store, name});
        return v;
    }

    // Same tensor, but explicitly outside the trainable set for this tape.
    Var frozen(ParamStore<T>& store, const std::string& name) { return constant(store.at(name)); }

    struct Binding {
        Var var;
        ParamStore<T>* store;
        std::string name;
    };
    const std::vector<Binding>& bindings() const { return bindings_; }

    // ----- primitives -------------------------------------------------------

    Var affine(Var x, Var w, Var b) {
        const Tensor<T>&X = val(x), &W = val(w), &Bv = val(b);
        const i64 m = X.rows(), in = X.cols(), out = W.cols();
        if (W.rows() != in) shape_error("affine", X, W);
        if (Bv.numel() != out) shape_error("affine(bias)", W, Bv);
        Tensor<T> y({m, out});
        gemm_nn(X.data(), W.data(), y.data(), m, in, out);
        parallel_ranges(m, [&](i64 lo, i64 hi) {
            for (i64 i = lo; i < hi; ++i) {
                T* yr = y.data() + i * out;
                for (i64 j = 0; j < out; ++j) yr[j] += Bv.v[j];
            }
        });
        return make(std::move(y), {x, w, b}, [this, x, w, b, m, in, out](const Tensor<T>& dy) {
            if (needs(x)) gemm_nt(dy.data(), val(w).data(), grad_of(x).data(), m, out, in, true);
            if (needs(w)) gemm_tn(val(x).data(), dy.data(), grad_of(w).data(), m, in, out, true);
            if (needs(b)) {
                T* db = grad_of(b).data();
                for (i64 i = 0; i < m; ++i) {
                    const T* dr = dy.data() + i * out;
                    for (i64 j = 0; j < out; ++j) db[j] += dr[j];
                }
            }
        }, "affine");
    }

    Var matmul(Var x, Var w) {
        const Tensor<T>&X = val(x), &W = val(w);
        const i64 m = X.rows(), in = X.cols(), out = W.cols();
        if (W.rows() != in) shape_error("matmul", X, W);
        Tensor<T> y({m, out});
        gemm_nn(X.data(), W.data(), y.data(), m, in, out);
        return make(std::move(y), {x, w}, [this, x, w, m, in, out](const Tensor<T>& dy) {
            if (needs(x)) gemm_nt(dy.data(), val(w).data(), grad_of(x).data(), m, out, in, true);
            if (needs(w)) gemm_tn(val(x).data(), dy.data(), grad_of(w).data(), m, in, out, true);
        }, "matmul");
    }

    Var relu(Var x) {
        Tensor<T> y = val(x);
        elementwise(y.numel(), [&](i64 lo, i64 hi) {
            T* p = y.data();
            for (i64 i = lo; i < hi; ++i) p[i] = p[i] > T(0) ? p[i] : T(0);
        });
        return make(std::move(y), {x}, [this, x](const Tensor<T>& dy) {
            if (!needs(x)) return;
            const Tensor<T>& X = val(x);
            T* dx = grad_of(x).data();
            elementwise(X.numel(), [&](i64 lo, i64 hi) {
                for (i64 i = lo; i < hi; ++i)
                    if (X.v[i] > T(0)) dx[i] += dy.v[i];
            });
        }, "relu");
    }

    // Fused y = relu(big + small[row / n]) with `big` of shape (B*n x C) and
    // `small` of shape (B x C). Keeps the per-cloud conditioning bias out of
    // the per-point hot path without materializing its broadcast.
    Var relu_add_segment(Var big, Var small, i64 n) {
        const Tensor<T>&Bg = val(big), &Sm = val(small);
        const i64 rows = Bg.rows(), c = Bg.cols(), b = Sm.rows();
        if (Sm.cols() != c || rows != b * n) shape_error("relu_add_segment", Bg, Sm);
        Tensor<T> y({rows, c});
        elementwise(rows, [&](i64 lo, i64 hi) {
            for (i64 i = lo; i < hi; ++i) {
                const T* br = Bg.data() + i * c;
                const T* sr = Sm.data() + (i / n) * c;
                T* yr = y.data() + i * c;
                for (i64 j = 0; j < c; ++j) {
                    const T v = br[j] + sr[j];
                    yr[j] = v > T(0) ? v : T(0);
                }
            }
        });
        const int yid = next_id();
        return make(std::move(y), {big, small},
                    [this, big, small, n, rows, c, b, yid](const Tensor<T>& dy) {
            const Tensor<T>& Y = nodes_[yid].val;
            if (needs(big)) {
                T* dbig = grad_of(big).data();
                elementwise(rows, [&](i64 lo, i64 hi) {
                    for (i64 i = lo * c; i < hi * c; ++i)
                        if (Y.v[i] > T(0)) dbig[i] += dy.v[i];
                });
            }
            if (needs(small)) {
                T* dsmall = grad_of(small).data();
                parallel_ranges(b, [&](i64 blo, i64 bhi) {
                    for (i64 s = blo; s < bhi; ++s)
                        for (i64 t = 0; t < n; ++t) {
                            const i64 row = s * n + t;
                            for (i64 j = 0; j < c; ++j)
                                if (Y.v[row * c + j] > T(0)) dsmall[s * c + j] += dy.v[row * c + j];
                        }
                });
            }
        }, "relu_add_segment");
    }

    Var tanh_(Var x) {
        Tensor<T> y = val(x);
        elementwise(y.numel(), [&](i64 lo, i64 hi) {
            T* p = y.data();
            for (i64 i = lo; i < hi; ++i) p[i] = std::tanh(p[i]);
        });
        const int yid = next_id();
        return make(std::move(y), {x}, [this, x, yid](const Tensor<T>& dy) {
            if (!needs(x)) return;
            const Tensor<T>& Y = nodes_[yid].val;
            T* dx = grad_of(x).data();
            for (i64 i = 0; i < Y.numel(); ++i) dx[i] += dy.v[i] * (T(1) - Y.v[i] * Y.v[i]);
        }, "tanh");
    }

    Var softplus(Var x) {
        Tensor<T> y = val(x);
        for (auto& e : y.v) {
            const double xd = static_cast<double>(e);
            e = xd > 30.0 ? e : static_cast<T>(std::log1p(std::exp(xd)));
        }
        return make(std::move(y), {x}, [this, x](const Tensor<T>& dy) {
            if (!needs(x)) return;
            const Tensor<T>& X = val(x);
            T* dx = grad_of(x).data();
            for (i64 i = 0; i < X.numel(); ++i) {
                const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(X.v[i])));
                dx[i] += dy.v[i] * static_cast<T>(s);
            }
        }, "softplus");
    }

    Var exp_(Var x) {
        Tensor<T> y = val(x);
        elementwise(y.numel(), [&](i64 lo, i64 hi) {
            T* p = y.data();
            for (i64 i = lo; i < hi; ++i) p[i] = std::exp(p[i]);
        });
        const int yid = next_id();
        return make(std::move(y), {x}, [this, x, yid](const Tensor<T>& dy) {
            if (!needs(x)) return;
            const Tensor<T>& Y = nodes_[yid].val;
            T* dx = grad_of(x).data();
            for (i64 i = 0; i < Y.numel(); ++i) dx[i] += dy.v[i] * Y.v[i];
        }, "exp");
    }

    Var neg(Var x) { return scale(x, T(-1)); }

    Var scale(Var x, T c) {
        Tensor<T> y = val(x);
        for (auto& e : y.v) e *= c;
        return make(std::move(y), {x}, [this, x, c](const Tensor<T>& dy) {
            if (!needs(x)) return;
            T* dx = grad_of(x).data();
            for (i64 i = 0; i < dy.numel(); ++i) dx[i] += c * dy.v[i];
        }, "scale");
    }

    Var add_scalar(Var x, T c) {
        Tensor<T> y = val(x);
        for (auto& e : y.v) e += c;
        return make(std::move(y), {x}, [this, x](const Tensor<T>& dy) {
            if (!needs(x)) return;
            T* dx = grad_of(x).data();
            for (i64 i = 0; i < dy.numel(); ++i) dx[i] += dy.v[i];
        }, "add_scalar");
    }

    Var add(Var a, Var b) { return binary("add", a, b, [](T x, T y) { return x + y; },
                                          [](T, T, T g) { return std::pair<T, T>{g, g}; }); }
    Var sub(Var a, Var b) { return binary("sub", a, b, [](T x, T y) { return x - y; },
                                          [](T, T, T g) { return std::pair<T, T>{g, -g}; }); }
    Var mul(Var a, Var b) { return binary("mul", a, b, [](T x, T y) { return x * y; },
                                          [](T x, T y, T g) { return std::pair<T, T>{g * y, g * x}; }); }

    Var concat_cols(Var a, Var b) {
        const Tensor<T>&A = val(a), &B = val(b);
        if (A.rows() != B.rows()) shape_error("concat_cols", A, B);
        const i64 m = A.rows(), ca = A.cols(), cb = B.cols();
        Tensor<T> y({m, ca + cb});
        for (i64 i = 0; i < m; ++i) {
            std::copy_n(A.data() + i * ca, ca, y.data() + i * (ca + cb));
            std::copy_n(B.data() + i * cb, cb, y.data() + i * (ca + cb) + ca);
        }
        return make(std::move(y), {a, b}, [this, a, b, m, ca, cb](const Tensor<T>& dy) {
            if (needs(a)) {
                T* da = grad_of(a).data();
                for (i64 i = 0; i < m; ++i)
                    for (i64 j = 0; j < ca; ++j) da[i * ca + j] += dy.v[i * (ca + cb) + j];
            }
            if (needs(b)) {
                T* db = grad_of(b).data();
                for (i64 i = 0; i < m; ++i)
                    for (i64 j = 0; j < cb; ++j) db[i * cb + j] += dy.v[i * (ca + cb) + ca + j];
            }
        }, "concat_cols");
    }

    Var select_cols(Var x, std::vector<i64> cols) {
        const Tensor<T>& X = val(x);
        const i64 m = X.rows(), c = X.cols(), k = static_cast<i64>(cols.size());
        Tensor<T> y({m, k});
        for (i64 i = 0; i < m; ++i)
            for (i64 j = 0; j < k; ++j) y.v[i * k + j] = X.v[i * c + cols[j]];
        return make(std::move(y), {x}, [this, x, cols, m, c, k](const Tensor<T>& dy) {
            if (!needs(x)) return;
            T* dx = grad_of(x).data();
            for (i64 i = 0; i < m; ++i)
                for (i64 j = 0; j < k; ++j) dx[i * c + cols[j]] += dy.v[i * k + j];
        }, "select_cols");
    }

    // Inverse of splitting a width-`total` matrix into two column subsets.
    Var assemble_cols(Var a, Var b, std::vector<i64> a_cols, std::vector<i64> b_cols, i64 total) {
        const Tensor<T>&A = val(a), &B = val(b);
        if (A.rows() != B.rows()) shape_error("assemble_cols", A, B);
        const i64 m = A.rows(), ca = A.cols(), cb = B.cols();
        if (ca != static_cast<i64>(a_cols.size()) || cb != static_cast<i64>(b_cols.size()) ||
            ca + cb != total)
            throw NumericError("assemble_cols: column index mismatch");
        Tensor<T> y({m, total});
        for (i64 i = 0; i < m; ++i) {
            for (i64 j = 0; j < ca; ++j) y.v[i * total + a_cols[j]] = A.v[i * ca + j];
            for (i64 j = 0; j < cb; ++j) y.v[i * total + b_cols[j]] = B.v[i * cb + j];
        }
        return make(std::move(y), {a, b},
                    [this, a, b, a_cols, b_cols, m, ca, cb, total](const Tensor<T>& dy) {
            if (needs(a)) {
                T* da = grad_of(a).data();
                for (i64 i = 0; i < m; ++i)
                    for (i64 j = 0; j < ca; ++j) da[i * ca + j] += dy.v[i * total + a_cols[j]];
            }
            if (needs(b)) {
                T* db = grad_of(b).data();
                for (i64 i = 0; i < m; ++i)
                    for (i64 j = 0; j < cb; ++j) db[i * cb + j] += dy.v[i * total + b_cols[j]];
            }
        }, "assemble_cols");
    }

    // (B x C) -> (B*n x C), each row repeated n times in place.
    Var rows_repeat(Var x, i64 n) {
        const Tensor<T>& X = val(x);
        const i64 b = X.rows(), c = X.cols();
        Tensor<T> y({b * n, c});
        for (i64 i = 0; i < b; ++i)
            for (i64 t = 0; t < n; ++t)
                std::copy_n(X.data() + i * c, c, y.data() + (i * n + t) * c);
        return make(std::move(y), {x}, [this, x, b, c, n](const Tensor<T>& dy) {
            if (!needs(x)) return;
            T* dx = grad_of(x).data();
            for (i64 i = 0; i < b; ++i)
                for (i64 t = 0; t < n; ++t) {
                    const T* dr = dy.data() + (i * n + t) * c;
                    for (i64 j = 0; j < c; ++j) dx[i * c + j] += dr[j];
                }
        }, "rows_repeat");
    }

    // Set-max pool: (B*n x C) -> (B x C). Gradient routes to the argmax row
    // only; ties break to the lowest row index.
    Var segment_max(Var x, i64 n) {
        const Tensor<T>& X = val(x);
        const i64 rows = X.rows(), c = X.cols();
        if (n <= 0 || rows % n != 0) throw NumericError("segment_max: rows not divisible by segment size");
        const i64 b = rows / n;
        Tensor<T> y({b, c});
        auto arg = std::make_shared<std::vector<i64>>(static_cast<size_t>(b * c));
        for (i64 s = 0; s < b; ++s) {
            for (i64 j = 0; j < c; ++j) {
                T best = X.v[(s * n) * c + j];
                i64 bi = s * n;
                for (i64 t = 1; t < n; ++t) {
                    const T e = X.v[(s * n + t) * c + j];
                    if (e > best) {
                        best = e;
                        bi = s * n + t;
                    }
                }
                y.v[s * c + j] = best;
                (*arg)[s * c + j] = bi;
            }
        }
        return make(std::move(y), {x}, [this, x, arg, b, c](const Tensor<T>& dy) {
            if (!needs(x)) return;
            T* dx = grad_of(x).data();
            for (i64 s = 0; s < b; ++s)
                for (i64 j = 0; j < c; ++j) dx[(*arg)[s * c + j] * c + j] += dy.v[s * c + j];
        }, "segment_max");
    }

    Var row_sum(Var x) {
        const Tensor<T>& X = val(x);
        const i64 m = X.rows(), c = X.cols();
        Tensor<T> y({m, 1});
        for (i64 i = 0; i < m; ++i) {
            T s = T(0);
            for (i64 j = 0; j < c; ++j) s += X.v[i * c + j];
            y.v[i] = s;
        }
        return make(std::move(y), {x}, [this, x, m, c](const Tensor<T>& dy) {
            if (!needs(x)) return;
            T* dx = grad_of(x).data();
            for (i64 i = 0; i < m; ++i)
                for (i64 j = 0; j < c; ++j) dx[i * c + j] += dy.v[i];
        }, "row_sum");
    }

    Var sum_all(Var x) {
        const Tensor<T>& X = val(x);
        T s = T(0);
        for (T e : X.v) s += e;
        Tensor<T> y({1, 1});
        y.v[0] = s;
        return make(std::move(y), {x}, [this, x](const Tensor<T>& dy) {
            if (!needs(x)) return;
            T* dx = grad_of(x).data();
            const T g = dy.v[0];
            for (i64 i = 0; i < val(x).numel(); ++i) dx[i] += g;
        }, "sum_all");
    }

    Var mean_all(Var x) {
        const i64 n = val(x).numel();
        return scale(sum_all(x), T(1) / static_cast<T>(n));
    }

    // (B x C x H x W) -> (B x C)
    Var global_avg_pool(Var x) {
        const Tensor<T>& X = val(x);
        if (X.ndim() != 4) throw NumericError("global_avg_pool: expected 4-d input, got " + X.shape_str());
        const i64 b = X.dim(0), c = X.dim(1), hw = X.dim(2) * X.dim(3);
        Tensor<T> y({b, c});
        for (i64 i = 0; i < b; ++i)
            for (i64 j = 0; j < c; ++j) {
                const T* p = X.data() + (i * c + j) * hw;
                T s = T(0);
                for (i64 t = 0; t < hw; ++t) s += p[t];
                y.v[i * c + j] = s / static_cast<T>(hw);
            }
        return make(std::move(y), {x}, [this, x, b, c, hw](const Tensor<T>& dy) {
            if (!needs(x)) return;
            T* dx = grad_of(x).data();
            for (i64 i = 0; i < b; ++i)
                for (i64 j = 0; j < c; ++j) {
                    const T g = dy.v[i * c + j] / static_cast<T>(hw);
                    T* p = dx + (i * c + j) * hw;
                    for (i64 t = 0; t < hw; ++t) p[t] += g;
                }
        }, "global_avg_pool");
    }

    Var conv2d(Var x, Var w, Var b, const Conv2dSpec& cs) {
        const Tensor<T>& X = val(x);
        if (X.ndim() != 4 || X.dim(1) != cs.in_channels)
            throw NumericError("conv2d: bad input shape " + X.shape_str());
        Tensor<T> y = conv2d_forward(X, val(w), val(b), cs);
        return make(std::move(y), {x, w, b}, [this, x, w, b, cs](const Tensor<T>& dy) {
            Tensor<T>* dx = needs(x) ? &grad_of(x) : nullptr;
            Tensor<T>* dw = needs(w) ? &grad_of(w) : nullptr;
            Tensor<T>* db = needs(b) ? &grad_of(b) : nullptr;
            conv2d_backward(val(x), val(w), cs, dy, dx, dw, db);
        }, "conv2d");
    }

    // Per-row log N(x; 0, I): (R x C) -> (R x 1).
    Var std_normal_logpdf_rows(Var x) {
        static constexpr double kLog2Pi = 1.8378770664093454835606594728112;
        const Tensor<T>& X = val(x);
        const i64 m = X.rows(), c = X.cols();
        Tensor<T> y({m, 1});
        for (i64 i = 0; i < m; ++i) {
            T q = T(0);
            const T* r = X.data() + i * c;
            for (i64 j = 0; j < c; ++j) q += r[j] * r[j];
            y.v[i] = static_cast<T>(-0.5) * q - static_cast<T>(0.5 * kLog2Pi * c);
        }
        return make(std::move(y), {x}, [this, x, m, c](const Tensor<T>& dy) {
            if (!needs(x)) return;
            const Tensor<T>& X = val(x);
            T* dx = grad_of(x).data();
            for (i64 i = 0; i < m; ++i) {
                const T g = dy.v[i];
                for (i64 j = 0; j < c; ++j) dx[i * c + j] -= g * X.v[i * c + j];
            }
        }, "std_normal_logpdf");
    }

    // ----- backward ---------------------------------------------------------

    void backward(Var loss) {
        if (!grad_enabled_) throw NumericError("backward on a no-grad tape");
        Node& ln = nodes_[loss.id];
        ensure_grad(ln);
        ln.grad.fill(T(1));
        for (int i = loss.id; i >= 0; --i) {
            Node& nd = nodes_[i];
            if (nd.backward && nd.grad.numel() > 0) nd.backward(nd.grad);
        }
    }

    // Ensures every bound parameter has a (possibly zero) gradient, then
    // returns the bindings for the optimizer.
    void materialize_param_grads() {
        for (auto& b : bindings_) ensure_grad(nodes_[b.var.id]);
    }

    bool has_grad(Var v) const { return nodes_[v.id].grad.numel() > 0; }

  private:
    struct Node {
        Tensor<T> val;
        Tensor<T> grad;
        bool needs_grad = false;
        std::function<void(const Tensor<T>&)> backward;
        const char* op = "";
    };

    static std::string param_key(const ParamStore<T>& store, const std::string& name) {
        std::ostringstream os;
        os << static_cast<const void*>(&store) << "/" << name;
        return os.str();
    }

    int next_id() const { return static_cast<int>(nodes_.size()); }

    const Tensor<T>& val(Var v) const { return nodes_[v.id].val; }
    bool needs(Var v) const { return nodes_[v.id].needs_grad; }

    Tensor<T>& grad_of(Var v) {
        Node& nd = nodes_[v.id];
        ensure_grad(nd);
        return nd.grad;
    }

    void ensure_grad(Node& nd) {
        if (nd.grad.numel() == 0) nd.grad = Tensor<T>(nd.val.shape);
    }

    Var push(Tensor<T> val, bool needs_grad, std::vector<Var> /*inputs*/,
             std::function<void(const Tensor<T>&)> fn, const char* op) {
        Node nd;
        nd.val = std::move(val);
        nd.needs_grad = needs_grad;
        nd.backward = std::move(fn);
        nd.op = op;
        nodes_.push_back(std::move(nd));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    Var make(Tensor<T> val, std::initializer_list<Var> inputs,
             std::function<void(const Tensor<T>&)> fn, const char* op) {
        bool ng = false;
        for (Var v : inputs) ng = ng || nodes_[v.id].needs_grad;
        if (!grad_enabled_ || !ng) fn = nullptr;
        return push(std::move(val), ng && grad_enabled_, {}, std::move(fn), op);
    }

    template <class FwdFn, class BwdFn>
    Var binary(const char* op, Var a, Var b, FwdFn fwd, BwdFn bwd) {
        const Tensor<T>&A = val(a), &B = val(b);
        if (A.shape != B.shape)
            throw NumericError(std::string(op) + ": shape mismatch " + A.shape_str() + " vs " + B.shape_str());
        Tensor<T> y = A;
        elementwise(y.numel(), [&](i64 lo, i64 hi) {
            for (i64 i = lo; i < hi; ++i) y.v[i] = fwd(A.v[i], B.v[i]);
        });
        return make(std::move(y), {a, b}, [this, a, b, bwd](const Tensor<T>& dy) {
            const Tensor<T>&A = val(a), &B = val(b);
            const bool na = needs(a), nb = needs(b);
            T* da = na ? grad_of(a).data() : nullptr;
            T* db = nb ? grad_of(b).data() : nullptr;
            elementwise(dy.numel(), [&](i64 lo, i64 hi) {
                for (i64 i = lo; i < hi; ++i) {
                    auto [ga, gb] = bwd(A.v[i], B.v[i], dy.v[i]);
                    if (na) da[i] += ga;
                    if (nb) db[i] += gb;
                }
            });
        }, op);
    }

    // Chunked map over flat index ranges; small tensors stay single-threaded.
    template <class Fn>
    static void elementwise(i64 n, Fn&& fn) {
        if (n < (1 << 15)) {
            fn(i64{0}, n);
            return;
        }
        parallel_ranges(n, fn);
    }

    void shape_error(const char* op, const Tensor<T>& a, const Tensor<T>& b) const {
        throw NumericError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }

    bool grad_enabled_;
    std::vector<Node> nodes_;
    std::vector<Binding> bindings_;
    std::unordered_map<std::string, Var> param_cache_;
};

template <class T>
using Var = typename Tape<T>::Var;

}  // namespace pcgen
