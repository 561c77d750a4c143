#include "cistgcn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cistgcn::ops {
namespace {

template <typename T>
void check_finite(const Tensor<T>& t, const char* op) {
    for (T v : t.values()) {
        if (!std::isfinite(static_cast<double>(v))) {
            std::string msg = std::string("op '") + op + "' produced a non-finite value";
            if (const char* stage = StageGuard::current())
                msg += std::string(" in stage '") + stage + "'";
            throw NumericError(msg);
        }
    }
}

template <typename T>
bool want_grad(std::initializer_list<Tensor<T>> ins) {
    if (!Tape<T>::active()) return false;
    for (const auto& t : ins)
        if (t.requires_grad()) return true;
    return false;
}

Shape broadcast_shape(const char* op, const Shape& a, const Shape& b) {
    size_t n = std::max(a.size(), b.size());
    Shape out(n);
    for (size_t i = 0; i < n; ++i) {
        int64_t da = (i < n - a.size()) ? 1 : a[i - (n - a.size())];
        int64_t db = (i < n - b.size()) ? 1 : b[i - (n - b.size())];
        if (da != db && da != 1 && db != 1)
            throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " +
                             shape_str(b) + " are not broadcastable");
        out[i] = std::max(da, db);
    }
    return out;
}

// Per-output-dim strides into an input, 0 where the input broadcasts.
std::vector<int64_t> bcast_strides(const Shape& in, const Shape& out) {
    Shape st = strides_of(in);
    std::vector<int64_t> r(out.size(), 0);
    size_t off = out.size() - in.size();
    for (size_t i = 0; i < in.size(); ++i)
        r[off + i] = (in[i] == 1 && out[off + i] != 1) ? 0 : st[i];
    return r;
}

// Odometer walk over `out_shape`, yielding (out_index, a_offset, b_offset).
template <typename Fn>
void bcast_iterate(const Shape& out_shape, const std::vector<int64_t>& sa,
                   const std::vector<int64_t>& sb, Fn&& fn) {
    int64_t n = numel_of(out_shape);
    size_t nd = out_shape.size();
    std::vector<int64_t> idx(nd, 0);
    int64_t oa = 0, ob = 0;
    for (int64_t i = 0; i < n; ++i) {
        fn(i, oa, ob);
        for (int d = static_cast<int>(nd) - 1; d >= 0; --d) {
            idx[d]++;
            oa += sa[d];
            ob += sb[d];
            if (idx[d] < out_shape[d]) break;
            oa -= sa[d] * out_shape[d];
            ob -= sb[d] * out_shape[d];
            idx[d] = 0;
        }
    }
}

enum class BinKind { kAdd, kSub, kMul, kDiv };

template <typename T>
Tensor<T> ew_binary(const char* name, BinKind kind, const Tensor<T>& a, const Tensor<T>& b) {
    Shape os = broadcast_shape(name, a.shape(), b.shape());
    auto sa = bcast_strides(a.shape(), os);
    auto sb = bcast_strides(b.shape(), os);
    Tensor<T> out = Tensor<T>::zeros(os);
    auto ov = out.raw_values();
    auto av = a.values();
    auto bv = b.values();
    bcast_iterate(os, sa, sb, [&](int64_t i, int64_t ia, int64_t ib) {
        switch (kind) {
            case BinKind::kAdd: ov[i] = av[ia] + bv[ib]; break;
            case BinKind::kSub: ov[i] = av[ia] - bv[ib]; break;
            case BinKind::kMul: ov[i] = av[ia] * bv[ib]; break;
            case BinKind::kDiv: ov[i] = av[ia] / bv[ib]; break;
        }
    });
    check_finite(out, name);
    if (want_grad<T>({a, b})) {
        out.set_requires_grad(true);
        Tensor<T> ac = a, bc = b, oc = out;
        Tape<T>::active()->push([ac, bc, oc, os, sa, sb, kind]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            auto avv = ac.values();
            auto bvv = bc.values();
            T* ga = ac.requires_grad() ? ac.grad_buffer().data() : nullptr;
            T* gb = bc.requires_grad() ? bc.grad_buffer().data() : nullptr;
            bcast_iterate(os, sa, sb, [&](int64_t i, int64_t ia, int64_t ib) {
                T gi = g[i];
                switch (kind) {
                    case BinKind::kAdd:
                        if (ga) ga[ia] += gi;
                        if (gb) gb[ib] += gi;
                        break;
                    case BinKind::kSub:
                        if (ga) ga[ia] += gi;
                        if (gb) gb[ib] -= gi;
                        break;
                    case BinKind::kMul:
                        if (ga) ga[ia] += gi * bvv[ib];
                        if (gb) gb[ib] += gi * avv[ia];
                        break;
                    case BinKind::kDiv:
                        if (ga) ga[ia] += gi / bvv[ib];
                        if (gb) gb[ib] -= gi * avv[ia] / (bvv[ib] * bvv[ib]);
                        break;
                }
            });
        });
    }
    return out;
}

template <typename T, typename FwdFn, typename BwdFn>
Tensor<T> ew_unary(const char* name, const Tensor<T>& x, FwdFn fwd, BwdFn bwd) {
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    auto ov = out.raw_values();
    auto xv = x.values();
    for (int64_t i = 0; i < x.numel(); ++i) ov[i] = fwd(xv[i]);
    check_finite(out, name);
    if (want_grad<T>({x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->push([xc, oc, bwd]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            auto xvv = xc.values();
            auto ovv = oc.values();
            auto& gx = xc.grad_buffer();
            for (int64_t i = 0; i < xc.numel(); ++i) gx[i] += bwd(g[i], xvv[i], ovv[i]);
        });
    }
    return out;
}

// C(m,n) += A(m,k) * B(k,n)
template <typename T>
void mm_nn(T* C, const T* A, const T* B, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i)
        for (int64_t p = 0; p < k; ++p) {
            T a = A[i * k + p];
            const T* Bp = B + p * n;
            T* Ci = C + i * n;
            for (int64_t j = 0; j < n; ++j) Ci[j] += a * Bp[j];
        }
}

// C(m,k) += A(m,n) * B(k,n)^T
template <typename T>
void mm_nt(T* C, const T* A, const T* B, int64_t m, int64_t n, int64_t k) {
    for (int64_t i = 0; i < m; ++i)
        for (int64_t p = 0; p < k; ++p) {
            const T* Ai = A + i * n;
            const T* Bp = B + p * n;
            T acc = 0;
            for (int64_t j = 0; j < n; ++j) acc += Ai[j] * Bp[j];
            C[i * k + p] += acc;
        }
}

// C(k,n) += A(m,k)^T * B(m,n)
template <typename T>
void mm_tn(T* C, const T* A, const T* B, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i)
        for (int64_t p = 0; p < k; ++p) {
            T a = A[i * k + p];
            const T* Bi = B + i * n;
            T* Cp = C + p * n;
            for (int64_t j = 0; j < n; ++j) Cp[j] += a * Bi[j];
        }
}

struct ConvGeom {
    int64_t batch, c_in, c_out, len, k, l_out;
    int64_t pad_left, groups, c_in_g, c_out_g;
    int dilation;
    bool batched_input;
};

template <typename T>
ConvGeom conv_geometry(const char* op, const Tensor<T>& x, const Tensor<T>& w, int dilation,
                       Padding padding, int groups) {
    if (dilation < 1) throw ShapeError(std::string(op) + ": dilation must be >= 1");
    if (w.ndim() != 3)
        throw ShapeError(std::string(op) + ": weight must be [C_out,C_in/groups,K], got " +
                         shape_str(w.shape()));
    ConvGeom g;
    g.batched_input = x.ndim() == 3;
    if (x.ndim() != 2 && x.ndim() != 3)
        throw ShapeError(std::string(op) + ": input must be [C,L] or [N,C,L], got " +
                         shape_str(x.shape()));
    g.batch = g.batched_input ? x.dim(0) : 1;
    g.c_in = g.batched_input ? x.dim(1) : x.dim(0);
    g.len = g.batched_input ? x.dim(2) : x.dim(1);
    g.c_out = w.dim(0);
    g.k = w.dim(2);
    g.dilation = dilation;
    g.groups = groups;
    if (groups < 1 || g.c_in % groups != 0 || g.c_out % groups != 0)
        throw ShapeError(std::string(op) + ": channels not divisible by groups");
    g.c_in_g = g.c_in / groups;
    g.c_out_g = g.c_out / groups;
    if (w.dim(1) != g.c_in_g)
        throw ShapeError(std::string(op) + ": weight " + shape_str(w.shape()) +
                         " inconsistent with input " + shape_str(x.shape()) + " / groups " +
                         std::to_string(groups));
    int64_t span = (g.k - 1) * dilation + 1;
    if (padding == Padding::kSame) {
        g.pad_left = ((g.k - 1) * dilation) / 2;
        g.l_out = g.len;
    } else {
        g.pad_left = 0;
        g.l_out = g.len - span + 1;
        if (g.l_out < 1)
            throw ShapeError(std::string(op) + ": kernel span " + std::to_string(span) +
                             " exceeds input length " + std::to_string(g.len));
    }
    return g;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return ew_binary("add", BinKind::kAdd, a, b);
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return ew_binary("sub", BinKind::kSub, a, b);
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return ew_binary("mul", BinKind::kMul, a, b);
}
template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
    return ew_binary("div", BinKind::kDiv, a, b);
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c) {
    return ew_unary(
        "scale", x, [c](T v) { return c * v; }, [c](T g, T, T) { return c * g; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T c) {
    return ew_unary(
        "add_scalar", x, [c](T v) { return v + c; }, [](T g, T, T) { return g; });
}

template <typename T>
Tensor<T> div_scalar(const Tensor<T>& x, T c) {
    return ew_unary(
        "div_scalar", x, [c](T v) { return v / c; }, [c](T g, T, T) { return g / c; });
}

template <typename T>
Tensor<T> square(const Tensor<T>& x) {
    return ew_unary(
        "square", x, [](T v) { return v * v; }, [](T g, T v, T) { return T(2) * v * g; });
}

template <typename T>
Tensor<T> sqrt(const Tensor<T>& x) {
    // d/dx sqrt = 1/(2 sqrt(x)), denominator guarded at 1e-12 so the value at
    // exactly 0 stays finite while the forward result is untouched.
    return ew_unary(
        "sqrt", x, [](T v) { return std::sqrt(v); },
        [](T g, T, T y) { return g / (T(2) * std::max(y, T(1e-12))); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    return ew_unary(
        "sigmoid", x,
        [](T v) {
            if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
            T e = std::exp(v);
            return e / (T(1) + e);
        },
        [](T g, T, T y) { return g * y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
    return ew_unary(
        "tanh", x, [](T v) { return std::tanh(v); },
        [](T g, T, T y) { return g * (T(1) - y * y); });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
    return ew_unary(
        "exp", x, [](T v) { return std::exp(v); }, [](T g, T, T y) { return g * y; });
}

template <typename T>
Tensor<T> prelu(const Tensor<T>& x, const Tensor<T>& alpha, int channel_axis) {
    if (channel_axis < 0 || channel_axis >= x.ndim())
        throw ShapeError("prelu: invalid channel axis");
    int64_t channels = x.dim(channel_axis);
    bool shared = alpha.numel() == 1;
    if (!shared && alpha.numel() != channels)
        throw ShapeError("prelu: alpha " + shape_str(alpha.shape()) + " does not match channels " +
                         std::to_string(channels));
    Shape st = strides_of(x.shape());
    int64_t inner = st[static_cast<size_t>(channel_axis)];
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    auto ov = out.raw_values();
    auto xv = x.values();
    auto av = alpha.values();
    for (int64_t i = 0; i < x.numel(); ++i) {
        int64_t c = shared ? 0 : (i / inner) % channels;
        ov[i] = xv[i] > T(0) ? xv[i] : av[c] * xv[i];
    }
    check_finite(out, "prelu");
    if (want_grad<T>({x, alpha})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, ac = alpha, oc = out;
        Tape<T>::active()->push([xc, ac, oc, inner, channels, shared]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            auto xvv = xc.values();
            auto avv = ac.values();
            T* gx = xc.requires_grad() ? xc.grad_buffer().data() : nullptr;
            T* ga = ac.requires_grad() ? ac.grad_buffer().data() : nullptr;
            for (int64_t i = 0; i < xc.numel(); ++i) {
                int64_t c = shared ? 0 : (i / inner) % channels;
                if (xvv[i] > T(0)) {
                    if (gx) gx[i] += g[i];
                } else {
                    if (gx) gx[i] += g[i] * avv[c];
                    if (ga) ga[c] += g[i] * xvv[i];
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
    if (axis < 0 || axis >= x.ndim()) throw ShapeError("softmax: invalid axis");
    Shape st = strides_of(x.shape());
    int64_t ax = x.dim(axis);
    int64_t inner = st[static_cast<size_t>(axis)];
    int64_t outer = x.numel() / (ax * inner);
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    auto ov = out.raw_values();
    auto xv = x.values();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t in = 0; in < inner; ++in) {
            int64_t base = o * ax * inner + in;
            T m = xv[base];
            for (int64_t a = 1; a < ax; ++a) m = std::max(m, xv[base + a * inner]);
            T s = 0;
            for (int64_t a = 0; a < ax; ++a) {
                T e = std::exp(xv[base + a * inner] - m);
                ov[base + a * inner] = e;
                s += e;
            }
            for (int64_t a = 0; a < ax; ++a) ov[base + a * inner] /= s;
        }
    check_finite(out, "softmax");
    if (want_grad<T>({x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->push([xc, oc, outer, ax, inner]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            auto y = oc.values();
            auto& gx = xc.grad_buffer();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t in = 0; in < inner; ++in) {
                    int64_t base = o * ax * inner + in;
                    T dot = 0;
                    for (int64_t a = 0; a < ax; ++a)
                        dot += g[base + a * inner] * y[base + a * inner];
                    for (int64_t a = 0; a < ax; ++a) {
                        int64_t i = base + a * inner;
                        gx[i] += y[i] * (g[i] - dot);
                    }
                }
        });
    }
    return out;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() < 2 || b.ndim() < 2 || a.shape().back() != b.dim(b.ndim() - 2))
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    int64_t m = a.dim(a.ndim() - 2), k = a.shape().back(), n = b.shape().back();

    // leading dims broadcast numpy-style; offsets step whole matrices
    Shape abatch(a.shape().begin(), a.shape().end() - 2);
    Shape bbatch(b.shape().begin(), b.shape().end() - 2);
    Shape batch = broadcast_shape("matmul", abatch, bbatch);
    int64_t nbatch = numel_of(batch);
    auto sa = bcast_strides(abatch, batch);
    auto sb = bcast_strides(bbatch, batch);
    for (auto& s : sa) s *= m * k;
    for (auto& s : sb) s *= k * n;

    Shape os = batch;
    os.push_back(m);
    os.push_back(n);
    if (a.ndim() == 2 && b.ndim() == 2) os = {m, n};
    Tensor<T> out = Tensor<T>::zeros(os);

    auto batch_offsets = [&](std::vector<int64_t>& offa, std::vector<int64_t>& offb) {
        offa.assign(static_cast<size_t>(nbatch), 0);
        offb.assign(static_cast<size_t>(nbatch), 0);
        if (batch.empty()) return;
        bcast_iterate(batch, sa, sb, [&](int64_t i, int64_t ia, int64_t ib) {
            offa[static_cast<size_t>(i)] = ia;
            offb[static_cast<size_t>(i)] = ib;
        });
    };
    std::vector<int64_t> offa, offb;
    batch_offsets(offa, offb);

    for (int64_t i = 0; i < nbatch; ++i)
        mm_nn(out.raw_values().data() + i * m * n, a.values().data() + offa[static_cast<size_t>(i)],
              b.values().data() + offb[static_cast<size_t>(i)], m, k, n);
    check_finite(out, "matmul");
    if (want_grad<T>({a, b})) {
        out.set_requires_grad(true);
        Tensor<T> ac = a, bc = b, oc = out;
        Tape<T>::active()->push([ac, bc, oc, offa, offb, nbatch, m, k, n]() mutable {
            if (!oc.has_grad()) return;
            const T* g = oc.grad().data();
            for (int64_t i = 0; i < nbatch; ++i) {
                // broadcast batches accumulate into the same input matrix
                if (ac.requires_grad())
                    mm_nt(ac.grad_buffer().data() + offa[static_cast<size_t>(i)], g + i * m * n,
                          bc.values().data() + offb[static_cast<size_t>(i)], m, n, k);
                if (bc.requires_grad())
                    mm_tn(bc.grad_buffer().data() + offb[static_cast<size_t>(i)],
                          ac.values().data() + offa[static_cast<size_t>(i)], g + i * m * n, m, k,
                          n);
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() != 3 || b.ndim() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1))
        throw ShapeError("bmm: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    int64_t N = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
    Tensor<T> out = Tensor<T>::zeros({N, m, n});
    for (int64_t i = 0; i < N; ++i)
        mm_nn(out.raw_values().data() + i * m * n, a.values().data() + i * m * k,
              b.values().data() + i * k * n, m, k, n);
    check_finite(out, "bmm");
    if (want_grad<T>({a, b})) {
        out.set_requires_grad(true);
        Tensor<T> ac = a, bc = b, oc = out;
        Tape<T>::active()->push([ac, bc, oc, N, m, k, n]() mutable {
            if (!oc.has_grad()) return;
            const T* g = oc.grad().data();
            for (int64_t i = 0; i < N; ++i) {
                if (ac.requires_grad())
                    mm_nt(ac.grad_buffer().data() + i * m * k, g + i * m * n,
                          bc.values().data() + i * k * n, m, n, k);
                if (bc.requires_grad())
                    mm_tn(bc.grad_buffer().data() + i * k * n, ac.values().data() + i * m * k,
                          g + i * m * n, m, k, n);
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    if (numel_of(shape) != x.numel())
        throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                         shape_str(shape));
    Tensor<T> out = Tensor<T>::from_vector(shape, std::vector<T>(x.values().begin(),
                                                                 x.values().end()));
    if (want_grad<T>({x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->push([xc, oc]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            auto& gx = xc.grad_buffer();
            for (int64_t i = 0; i < xc.numel(); ++i) gx[i] += g[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x, std::vector<int> perm) {
    int nd = x.ndim();
    if (static_cast<int>(perm.size()) != nd) throw ShapeError("transpose: bad permutation size");
    std::vector<bool> seen(static_cast<size_t>(nd), false);
    for (int p : perm) {
        if (p < 0 || p >= nd || seen[static_cast<size_t>(p)])
            throw ShapeError("transpose: invalid permutation");
        seen[static_cast<size_t>(p)] = true;
    }
    Shape os(static_cast<size_t>(nd));
    for (int i = 0; i < nd; ++i) os[static_cast<size_t>(i)] = x.dim(perm[static_cast<size_t>(i)]);
    Shape ost = strides_of(os);
    // out_stride_for_in_dim[d]: offset step in out per unit step of in dim d
    std::vector<int64_t> step(static_cast<size_t>(nd), 0);
    for (int i = 0; i < nd; ++i) step[static_cast<size_t>(perm[static_cast<size_t>(i)])] = ost[static_cast<size_t>(i)];
    Tensor<T> out = Tensor<T>::zeros(os);
    auto ov = out.raw_values();
    auto xv = x.values();
    const Shape& is = x.shape();
    std::vector<int64_t> idx(static_cast<size_t>(nd), 0);
    int64_t ooff = 0;
    for (int64_t i = 0; i < x.numel(); ++i) {
        ov[ooff] = xv[i];
        for (int d = nd - 1; d >= 0; --d) {
            idx[static_cast<size_t>(d)]++;
            ooff += step[static_cast<size_t>(d)];
            if (idx[static_cast<size_t>(d)] < is[static_cast<size_t>(d)]) break;
            ooff -= step[static_cast<size_t>(d)] * is[static_cast<size_t>(d)];
            idx[static_cast<size_t>(d)] = 0;
        }
    }
    if (want_grad<T>({x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->push([xc, oc, step, nd]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            auto& gx = xc.grad_buffer();
            const Shape& is2 = xc.shape();
            std::vector<int64_t> idx2(static_cast<size_t>(nd), 0);
            int64_t ooff2 = 0;
            for (int64_t i = 0; i < xc.numel(); ++i) {
                gx[i] += g[ooff2];
                for (int d = nd - 1; d >= 0; --d) {
                    idx2[static_cast<size_t>(d)]++;
                    ooff2 += step[static_cast<size_t>(d)];
                    if (idx2[static_cast<size_t>(d)] < is2[static_cast<size_t>(d)]) break;
                    ooff2 -= step[static_cast<size_t>(d)] * is2[static_cast<size_t>(d)];
                    idx2[static_cast<size_t>(d)] = 0;
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& xs, int axis) {
    if (xs.empty()) throw ShapeError("concat: no inputs");
    int nd = xs[0].ndim();
    if (axis < 0 || axis >= nd) throw ShapeError("concat: invalid axis");
    Shape os = xs[0].shape();
    int64_t total = 0;
    for (const auto& t : xs) {
        if (t.ndim() != nd) throw ShapeError("concat: rank mismatch");
        for (int d = 0; d < nd; ++d)
            if (d != axis && t.dim(d) != os[static_cast<size_t>(d)])
                throw ShapeError("concat: shape mismatch " + shape_str(t.shape()) + " vs " +
                                 shape_str(os));
        total += t.dim(axis);
    }
    os[static_cast<size_t>(axis)] = total;
    int64_t inner = 1;
    for (int d = axis + 1; d < nd; ++d) inner *= os[static_cast<size_t>(d)];
    int64_t outer = numel_of(os) / (total * inner);
    Tensor<T> out = Tensor<T>::zeros(os);
    auto ov = out.raw_values();
    int64_t off = 0;
    for (const auto& t : xs) {
        int64_t at = t.dim(axis);
        auto tv = t.values();
        for (int64_t o = 0; o < outer; ++o)
            std::copy(tv.begin() + o * at * inner, tv.begin() + (o + 1) * at * inner,
                      ov.begin() + (o * total + off) * inner);
        off += at;
    }
    bool rec = false;
    if (Tape<T>::active())
        for (const auto& t : xs) rec = rec || t.requires_grad();
    if (rec) {
        out.set_requires_grad(true);
        std::vector<Tensor<T>> ins = xs;
        Tensor<T> oc = out;
        Tape<T>::active()->push([ins, oc, outer, total, inner, axis]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            int64_t off2 = 0;
            for (auto& t : ins) {
                int64_t at = t.dim(axis);
                if (t.requires_grad()) {
                    auto& gt = t.grad_buffer();
                    for (int64_t o = 0; o < outer; ++o)
                        for (int64_t i = 0; i < at * inner; ++i)
                            gt[o * at * inner + i] += g[(o * total + off2) * inner + i];
                }
                off2 += at;
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> select(const Tensor<T>& x, int axis, int64_t index) {
    if (axis < 0 || axis >= x.ndim()) throw ShapeError("select: invalid axis");
    if (index < 0 || index >= x.dim(axis)) throw ShapeError("select: index out of range");
    Shape os;
    for (int d = 0; d < x.ndim(); ++d)
        if (d != axis) os.push_back(x.dim(d));
    if (os.empty()) os.push_back(1);
    int64_t ax = x.dim(axis);
    Shape st = strides_of(x.shape());
    int64_t inner = st[static_cast<size_t>(axis)];
    int64_t outer = x.numel() / (ax * inner);
    Tensor<T> out = Tensor<T>::zeros(os);
    auto ov = out.raw_values();
    auto xv = x.values();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t i = 0; i < inner; ++i)
            ov[o * inner + i] = xv[(o * ax + index) * inner + i];
    if (want_grad<T>({x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->push([xc, oc, outer, ax, inner, index]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            auto& gx = xc.grad_buffer();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t i = 0; i < inner; ++i)
                    gx[(o * ax + index) * inner + i] += g[o * inner + i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    Tensor<T> out = Tensor<T>::zeros({1});
    T acc = 0;
    for (T v : x.values()) acc += v;
    out.raw_values()[0] = acc;
    check_finite(out, "sum");
    if (want_grad<T>({x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->push([xc, oc]() mutable {
            if (!oc.has_grad()) return;
            T g = oc.grad()[0];
            auto& gx = xc.grad_buffer();
            for (auto& v : gx) v += g;
        });
    }
    return out;
}

namespace {

template <typename T>
Tensor<T> reduce_axis(const char* name, const Tensor<T>& x, int axis, bool keepdim, bool is_mean) {
    if (axis < 0 || axis >= x.ndim()) throw ShapeError(std::string(name) + ": invalid axis");
    int64_t ax = x.dim(axis);
    Shape st = strides_of(x.shape());
    int64_t inner = st[static_cast<size_t>(axis)];
    int64_t outer = x.numel() / (ax * inner);
    Shape os;
    for (int d = 0; d < x.ndim(); ++d) {
        if (d == axis) {
            if (keepdim) os.push_back(1);
        } else {
            os.push_back(x.dim(d));
        }
    }
    if (os.empty()) os.push_back(1);
    Tensor<T> out = Tensor<T>::zeros(os);
    auto ov = out.raw_values();
    auto xv = x.values();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t a = 0; a < ax; ++a)
            for (int64_t i = 0; i < inner; ++i)
                ov[o * inner + i] += xv[(o * ax + a) * inner + i];
    if (is_mean)
        for (auto& v : ov) v /= static_cast<T>(ax);
    check_finite(out, name);
    if (want_grad<T>({x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        T denom = is_mean ? static_cast<T>(ax) : T(1);
        Tape<T>::active()->push([xc, oc, outer, ax, inner, denom]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            auto& gx = xc.grad_buffer();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t a = 0; a < ax; ++a)
                    for (int64_t i = 0; i < inner; ++i)
                        gx[(o * ax + a) * inner + i] += g[o * inner + i] / denom;
        });
    }
    return out;
}

}  // namespace

template <typename T>
Tensor<T> sum(const Tensor<T>& x, int axis, bool keepdim) {
    return reduce_axis("sum", x, axis, keepdim, false);
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, int axis, bool keepdim) {
    return reduce_axis("mean", x, axis, keepdim, true);
}

template <typename T>
Tensor<T> max(const Tensor<T>& x, int axis, bool keepdim) {
    if (axis < 0 || axis >= x.ndim()) throw ShapeError("max: invalid axis");
    int64_t ax = x.dim(axis);
    Shape st = strides_of(x.shape());
    int64_t inner = st[static_cast<size_t>(axis)];
    int64_t outer = x.numel() / (ax * inner);
    Shape os;
    for (int d = 0; d < x.ndim(); ++d) {
        if (d == axis) {
            if (keepdim) os.push_back(1);
        } else {
            os.push_back(x.dim(d));
        }
    }
    if (os.empty()) os.push_back(1);
    Tensor<T> out = Tensor<T>::zeros(os);
    auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(outer * inner), 0);
    auto ov = out.raw_values();
    auto xv = x.values();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t i = 0; i < inner; ++i) {
            T best = xv[o * ax * inner + i];
            int64_t arg = 0;
            for (int64_t a = 1; a < ax; ++a) {
                T v = xv[(o * ax + a) * inner + i];
                if (v > best) {
                    best = v;
                    arg = a;
                }
            }
            ov[o * inner + i] = best;
            (*argmax)[static_cast<size_t>(o * inner + i)] = arg;
        }
    check_finite(out, "max");
    if (want_grad<T>({x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->push([xc, oc, argmax, outer, ax, inner]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            auto& gx = xc.grad_buffer();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t i = 0; i < inner; ++i) {
                    int64_t a = (*argmax)[static_cast<size_t>(o * inner + i)];
                    gx[(o * ax + a) * inner + i] += g[o * inner + i];
                }
        });
    }
    return out;
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias, int dilation,
                 Padding padding, int groups) {
    ConvGeom geo = conv_geometry("conv1d", x, w, dilation, padding, groups);
    if (bias && bias->numel() != geo.c_out)
        throw ShapeError("conv1d: bias size mismatch");
    Shape os = geo.batched_input ? Shape{geo.batch, geo.c_out, geo.l_out}
                                 : Shape{geo.c_out, geo.l_out};
    Tensor<T> out = Tensor<T>::zeros(os);
    auto ov = out.raw_values();
    auto xv = x.values();
    auto wv = w.values();
    for (int64_t n = 0; n < geo.batch; ++n)
        for (int64_t co = 0; co < geo.c_out; ++co) {
            int64_t grp = co / geo.c_out_g;
            T b = bias ? bias->values()[co] : T(0);
            for (int64_t lo = 0; lo < geo.l_out; ++lo) {
                T acc = b;
                for (int64_t cg = 0; cg < geo.c_in_g; ++cg) {
                    int64_t ci = grp * geo.c_in_g + cg;
                    const T* xp = xv.data() + (n * geo.c_in + ci) * geo.len;
                    const T* wp = wv.data() + (co * geo.c_in_g + cg) * geo.k;
                    for (int64_t k = 0; k < geo.k; ++k) {
                        int64_t l = lo + k * geo.dilation - geo.pad_left;
                        if (l >= 0 && l < geo.len) acc += xp[l] * wp[k];
                    }
                }
                ov[(n * geo.c_out + co) * geo.l_out + lo] = acc;
            }
        }
    check_finite(out, "conv1d");
    bool rec = Tape<T>::active() &&
               (x.requires_grad() || w.requires_grad() || (bias && bias->requires_grad()));
    if (rec) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, wc = w, oc = out;
        Tensor<T> bc = bias ? *bias : Tensor<T>();
        Tape<T>::active()->push([xc, wc, bc, oc, geo]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            auto xvv = xc.values();
            auto wvv = wc.values();
            T* gx = xc.requires_grad() ? xc.grad_buffer().data() : nullptr;
            T* gw = wc.requires_grad() ? wc.grad_buffer().data() : nullptr;
            T* gb = (bc.defined() && bc.requires_grad()) ? bc.grad_buffer().data() : nullptr;
            for (int64_t n = 0; n < geo.batch; ++n)
                for (int64_t co = 0; co < geo.c_out; ++co) {
                    int64_t grp = co / geo.c_out_g;
                    for (int64_t lo = 0; lo < geo.l_out; ++lo) {
                        T go = g[(n * geo.c_out + co) * geo.l_out + lo];
                        if (go == T(0)) continue;
                        if (gb) gb[co] += go;
                        for (int64_t cg = 0; cg < geo.c_in_g; ++cg) {
                            int64_t ci = grp * geo.c_in_g + cg;
                            int64_t xbase = (n * geo.c_in + ci) * geo.len;
                            int64_t wbase = (co * geo.c_in_g + cg) * geo.k;
                            for (int64_t k = 0; k < geo.k; ++k) {
                                int64_t l = lo + k * geo.dilation - geo.pad_left;
                                if (l < 0 || l >= geo.len) continue;
                                if (gx) gx[xbase + l] += go * wvv[wbase + k];
                                if (gw) gw[wbase + k] += go * xvv[xbase + l];
                            }
                        }
                    }
                }
        });
    }
    return out;
}

template <typename T>
Tensor<T> separable_conv(const Tensor<T>& x, const Tensor<T>& dw, const Tensor<T>& pw,
                         int dilation, Padding padding) {
    // dw [C,1,K] depthwise, pw [C_out,C,1] pointwise; fused so it can be
    // cross-checked against the conv1d composition.
    ConvGeom geo = conv_geometry("separable_conv", x, dw, dilation, padding,
                                 static_cast<int>(x.ndim() == 3 ? x.dim(1) : x.dim(0)));
    if (pw.ndim() != 3 || pw.dim(1) != geo.c_in || pw.dim(2) != 1)
        throw ShapeError("separable_conv: pointwise weight must be [C_out,C,1], got " +
                         shape_str(pw.shape()));
    if (dw.dim(0) != geo.c_in)
        throw ShapeError("separable_conv: depthwise kernel count must equal input channels");
    int64_t c_out = pw.dim(0);
    int64_t L = geo.l_out;
    // depthwise intermediate, kept for the backward pass
    auto mid = std::make_shared<std::vector<T>>(static_cast<size_t>(geo.batch * geo.c_in * L), T(0));
    auto xv = x.values();
    auto dwv = dw.values();
    auto pwv = pw.values();
    for (int64_t n = 0; n < geo.batch; ++n)
        for (int64_t c = 0; c < geo.c_in; ++c) {
            const T* xp = xv.data() + (n * geo.c_in + c) * geo.len;
            const T* wp = dwv.data() + c * geo.k;
            T* mp = mid->data() + (n * geo.c_in + c) * L;
            for (int64_t lo = 0; lo < L; ++lo) {
                T acc = 0;
                for (int64_t k = 0; k < geo.k; ++k) {
                    int64_t l = lo + k * geo.dilation - geo.pad_left;
                    if (l >= 0 && l < geo.len) acc += xp[l] * wp[k];
                }
                mp[lo] = acc;
            }
        }
    Shape os = geo.batched_input ? Shape{geo.batch, c_out, L} : Shape{c_out, L};
    Tensor<T> out = Tensor<T>::zeros(os);
    auto ov = out.raw_values();
    for (int64_t n = 0; n < geo.batch; ++n)
        for (int64_t co = 0; co < c_out; ++co)
            for (int64_t c = 0; c < geo.c_in; ++c) {
                T wv2 = pwv[co * geo.c_in + c];
                const T* mp = mid->data() + (n * geo.c_in + c) * L;
                T* op = ov.data() + (n * c_out + co) * L;
                for (int64_t lo = 0; lo < L; ++lo) op[lo] += wv2 * mp[lo];
            }
    check_finite(out, "separable_conv");
    if (want_grad<T>({x, dw, pw})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, dc = dw, pc = pw, oc = out;
        Tape<T>::active()->push([xc, dc, pc, oc, mid, geo, c_out, L]() mutable {
            if (!oc.has_grad()) return;
            auto g = oc.grad();
            auto xvv = xc.values();
            auto dwv2 = dc.values();
            auto pwv2 = pc.values();
            T* gx = xc.requires_grad() ? xc.grad_buffer().data() : nullptr;
            T* gd = dc.requires_grad() ? dc.grad_buffer().data() : nullptr;
            T* gp = pc.requires_grad() ? pc.grad_buffer().data() : nullptr;
            // grad wrt mid, then chain to x and dw
            std::vector<T> gm(mid->size(), T(0));
            for (int64_t n = 0; n < geo.batch; ++n)
                for (int64_t co = 0; co < c_out; ++co)
                    for (int64_t c = 0; c < geo.c_in; ++c) {
                        T wv2 = pwv2[co * geo.c_in + c];
                        const T* gop = g.data() + (n * c_out + co) * L;
                        const T* mp = mid->data() + (n * geo.c_in + c) * L;
                        T* gmp = gm.data() + (n * geo.c_in + c) * L;
                        T accw = 0;
                        for (int64_t lo = 0; lo < L; ++lo) {
                            gmp[lo] += wv2 * gop[lo];
                            accw += gop[lo] * mp[lo];
                        }
                        if (gp) gp[co * geo.c_in + c] += accw;
                    }
            if (gx || gd) {
                for (int64_t n = 0; n < geo.batch; ++n)
                    for (int64_t c = 0; c < geo.c_in; ++c) {
                        const T* xp = xvv.data() + (n * geo.c_in + c) * geo.len;
                        const T* wp = dwv2.data() + c * geo.k;
                        const T* gmp = gm.data() + (n * geo.c_in + c) * L;
                        for (int64_t lo = 0; lo < L; ++lo) {
                            T gv = gmp[lo];
                            if (gv == T(0)) continue;
                            for (int64_t k = 0; k < geo.k; ++k) {
                                int64_t l = lo + k * geo.dilation - geo.pad_left;
                                if (l < 0 || l >= geo.len) continue;
                                if (gx) gx[(n * geo.c_in + c) * geo.len + l] += gv * wp[k];
                                if (gd) gd[c * geo.k + k] += gv * xp[l];
                            }
                        }
                    }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias) {
    if (w.ndim() != 2) throw ShapeError("linear: weight must be 2-d");
    int64_t in = x.shape().back();
    if (w.dim(1) != in)
        throw ShapeError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                         shape_str(w.shape()));
    int64_t rows = x.numel() / in;
    Tensor<T> x2 = reshape(x, {rows, in});
    Tensor<T> wt = transpose(w, {1, 0});
    Tensor<T> y = matmul(x2, wt);
    if (bias) y = add(y, *bias);
    Shape os(x.shape().begin(), x.shape().end() - 1);
    os.push_back(w.dim(0));
    return reshape(y, os);
}

template <typename T>
Tensor<T> pool(const Tensor<T>& x, int axis, PoolKind kind) {
    if (axis < 0 || axis >= x.ndim()) throw ShapeError("pool: invalid axis");
    if (x.dim(axis) < 1) throw ShapeError("pool: empty axis");
    switch (kind) {
        case PoolKind::kMax: return max(x, axis, false);
        case PoolKind::kAvg: return mean(x, axis, false);
        case PoolKind::kAttention:
            throw ShapeError("pool: attention pooling needs scores; use attention_pool");
    }
    throw ShapeError("pool: unknown kind");
}

template <typename T>
Tensor<T> attention_pool(const Tensor<T>& x, const Tensor<T>& scores, int axis) {
    if (axis < 0 || axis >= x.ndim()) throw ShapeError("attention_pool: invalid axis");
    if (scores.ndim() != x.ndim())
        throw ShapeError("attention_pool: scores rank must match input");
    Tensor<T> w = softmax(scores, axis);
    return sum(mul(x, w), axis, false);
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
    return div_scalar(sum(x), static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> stddev_all(const Tensor<T>& x, T eps) {
    Tensor<T> m = mean_all(x);
    Tensor<T> d = sub(x, m);
    return sqrt(add_scalar(mean_all(square(d)), eps));
}

namespace {

template <typename T>
Tensor<T> mean_over_non_channel(const Tensor<T>& x, int channel_axis) {
    Tensor<T> cur = x;
    for (int d = 0; d < x.ndim(); ++d)
        if (d != channel_axis) cur = mean(cur, d, true);
    return cur;
}

template <typename T>
Shape channel_broadcast_shape(const Tensor<T>& x, int channel_axis) {
    Shape s(static_cast<size_t>(x.ndim()), 1);
    s[static_cast<size_t>(channel_axis)] = x.dim(channel_axis);
    return s;
}

}  // namespace

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, bool training, T momentum,
                     T eps, int channel_axis) {
    return batch_norm_ex(x, gamma, beta, running_mean, running_var, training, training,
                         momentum, eps, channel_axis);
}

template <typename T>
Tensor<T> batch_norm_ex(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                        Tensor<T>& running_mean, Tensor<T>& running_var, bool use_batch_stats,
                        bool update_running, T momentum, T eps, int channel_axis) {
    if (channel_axis < 0 || channel_axis >= x.ndim())
        throw ShapeError("batch_norm: invalid channel axis");
    int64_t channels = x.dim(channel_axis);
    if (gamma.numel() != channels || beta.numel() != channels ||
        running_mean.numel() != channels || running_var.numel() != channels)
        throw ShapeError("batch_norm: per-channel parameter size mismatch");
    if (eps <= T(0)) throw ShapeError("batch_norm: eps must be positive");
    Shape bshape = channel_broadcast_shape(x, channel_axis);
    Tensor<T> g_r = reshape(gamma, bshape);
    Tensor<T> b_r = reshape(beta, bshape);
    if (use_batch_stats) {
        Tensor<T> mu = mean_over_non_channel(x, channel_axis);
        Tensor<T> xc = sub(x, mu);
        Tensor<T> var = mean_over_non_channel(square(xc), channel_axis);
        Tensor<T> inv = div(Tensor<T>::full(bshape, T(1)), sqrt(add_scalar(var, eps)));
        Tensor<T> y = add(mul(mul(xc, inv), g_r), b_r);
        if (update_running) {
            // EMA update with the biased batch statistics; not part of the graph.
            auto rm = running_mean.raw_values();
            auto rv = running_var.raw_values();
            auto mv = mu.values();
            auto vv = var.values();
            for (int64_t c = 0; c < channels; ++c) {
                rm[c] = (T(1) - momentum) * rm[c] + momentum * mv[c];
                rv[c] = (T(1) - momentum) * rv[c] + momentum * vv[c];
            }
        }
        return y;
    }
    Tensor<T> rm_r = reshape(running_mean, bshape);
    Tensor<T> rv_r = reshape(running_var, bshape);
    Tensor<T> inv = div(Tensor<T>::full(bshape, T(1)), sqrt(add_scalar(rv_r, eps)));
    return add(mul(mul(sub(x, rm_r), inv), g_r), b_r);
}

void throw_if_nonfinite_f(const Tensor<float>& t, const char* op) { check_finite(t, op); }
void throw_if_nonfinite_d(const Tensor<double>& t, const char* op) { check_finite(t, op); }

#define CISTGCN_INSTANTIATE(T)                                                                \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                           \
    template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                           \
    template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                           \
    template Tensor<T> div<T>(const Tensor<T>&, const Tensor<T>&);                           \
    template Tensor<T> scale<T>(const Tensor<T>&, T);                                        \
    template Tensor<T> add_scalar<T>(const Tensor<T>&, T);                                   \
    template Tensor<T> div_scalar<T>(const Tensor<T>&, T);                                   \
    template Tensor<T> square<T>(const Tensor<T>&);                                          \
    template Tensor<T> sqrt<T>(const Tensor<T>&);                                            \
    template Tensor<T> sigmoid<T>(const Tensor<T>&);                                         \
    template Tensor<T> tanh<T>(const Tensor<T>&);                                            \
    template Tensor<T> exp<T>(const Tensor<T>&);                                             \
    template Tensor<T> prelu<T>(const Tensor<T>&, const Tensor<T>&, int);                    \
    template Tensor<T> softmax<T>(const Tensor<T>&, int);                                    \
    template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                        \
    template Tensor<T> bmm<T>(const Tensor<T>&, const Tensor<T>&);                           \
    template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                  \
    template Tensor<T> transpose<T>(const Tensor<T>&, std::vector<int>);                     \
    template Tensor<T> concat<T>(const std::vector<Tensor<T>>&, int);                        \
    template Tensor<T> select<T>(const Tensor<T>&, int, int64_t);                            \
    template Tensor<T> sum<T>(const Tensor<T>&);                                             \
    template Tensor<T> sum<T>(const Tensor<T>&, int, bool);                                  \
    template Tensor<T> mean<T>(const Tensor<T>&, int, bool);                                 \
    template Tensor<T> max<T>(const Tensor<T>&, int, bool);                                  \
    template Tensor<T> conv1d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, int,  \
                                 Padding, int);                                              \
    template Tensor<T> separable_conv<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                         int, Padding);                                      \
    template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*);      \
    template Tensor<T> pool<T>(const Tensor<T>&, int, PoolKind);                             \
    template Tensor<T> attention_pool<T>(const Tensor<T>&, const Tensor<T>&, int);           \
    template Tensor<T> mean_all<T>(const Tensor<T>&);                                        \
    template Tensor<T> stddev_all<T>(const Tensor<T>&, T);                                   \
    template Tensor<T> batch_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                     Tensor<T>&, Tensor<T>&, bool, T, T, int);              \
    template Tensor<T> batch_norm_ex<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                        Tensor<T>&, Tensor<T>&, bool, bool, T, T, int);

CISTGCN_INSTANTIATE(float)
CISTGCN_INSTANTIATE(double)

#undef CISTGCN_INSTANTIATE

}  // namespace cistgcn::ops
