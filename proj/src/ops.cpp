#include "sail/ops.hpp"

#include "sail/error.hpp"
#include "sail/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace sail::ops {

namespace {

Graph& graph_of(Var a) {
    require(a.graph != nullptr, ErrorKind::invalid_argument, "variable is not attached to a graph");
    return *a.graph;
}

Graph& same_graph(Var a, Var b) {
    require(a.graph == b.graph && a.graph != nullptr, ErrorKind::invalid_argument, "variables belong to different graphs");
    return *a.graph;
}

void check_same_dims(const Tensor& a, const Tensor& b, const char* op) {
    require(a.same_dims(b), ErrorKind::dimension_mismatch,
            std::string(op) + ": " + dims_string(a.dims()) + " vs " + dims_string(b.dims()));
}

void add_into(Tensor& dst, const Tensor& src, double c = 1.0) {
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += c * s[i];
}

template <class F, class DF>
Var unary(Var a, F f, DF df) {
    Graph& g = graph_of(a);
    const Tensor& x = g.value(a);
    Tensor y(x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    return g.record(std::move(y), {a.id}, [ia = a.id, df](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        const Tensor& x = gr.value(ia);
        const Tensor& y = gr.value(self);
        Tensor& gx = gr.grad_mut(ia);
        for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * df(x[i], y[i]);
    });
}

}  // namespace

Var matmul(Var a, Var b) {
    Graph& g = same_graph(a, b);
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    require(A.cols() == B.rows(), ErrorKind::dimension_mismatch, "matmul: " + dims_string(A.dims()) + " * " + dims_string(B.dims()));
    const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
    Tensor y = Tensor::matrix(n, m);
    kernels::gemm_nn(A.ptr(), B.ptr(), y.ptr(), n, k, m, false);
    return g.record(std::move(y), {a.id, b.id}, [ia = a.id, ib = b.id, n, k, m](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        if (gr.needs_grad(ia)) kernels::gemm_nt(go.ptr(), gr.value(ib).ptr(), gr.grad_mut(ia).ptr(), n, m, k, true);
        if (gr.needs_grad(ib)) kernels::gemm_tn(gr.value(ia).ptr(), go.ptr(), gr.grad_mut(ib).ptr(), n, k, m, true);
    });
}

Var matmul_nt(Var a, Var b) {
    Graph& g = same_graph(a, b);
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    require(A.cols() == B.cols(), ErrorKind::dimension_mismatch, "matmul_nt: " + dims_string(A.dims()) + " * " + dims_string(B.dims()) + "^T");
    const std::size_t n = A.rows(), k = A.cols(), m = B.rows();
    Tensor y = Tensor::matrix(n, m);
    kernels::gemm_nt(A.ptr(), B.ptr(), y.ptr(), n, k, m, false);
    return g.record(std::move(y), {a.id, b.id}, [ia = a.id, ib = b.id, n, k, m](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        if (gr.needs_grad(ia)) kernels::gemm_nn(go.ptr(), gr.value(ib).ptr(), gr.grad_mut(ia).ptr(), n, m, k, true);
        if (gr.needs_grad(ib)) kernels::gemm_tn(go.ptr(), gr.value(ia).ptr(), gr.grad_mut(ib).ptr(), n, m, k, true);
    });
}

Var linear(Var x, Var weight) { return matmul_nt(x, weight); }

Var linear(Var x, Var weight, Var bias) { return add_row(matmul_nt(x, weight), bias); }

Var add(Var a, Var b) {
    Graph& g = same_graph(a, b);
    check_same_dims(g.value(a), g.value(b), "add");
    Tensor y = g.value(a);
    add_into(y, g.value(b));
    return g.record(std::move(y), {a.id, b.id}, [ia = a.id, ib = b.id](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        if (gr.needs_grad(ia)) add_into(gr.grad_mut(ia), go);
        if (gr.needs_grad(ib)) add_into(gr.grad_mut(ib), go);
    });
}

Var sub(Var a, Var b) {
    Graph& g = same_graph(a, b);
    check_same_dims(g.value(a), g.value(b), "sub");
    Tensor y = g.value(a);
    add_into(y, g.value(b), -1.0);
    return g.record(std::move(y), {a.id, b.id}, [ia = a.id, ib = b.id](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        if (gr.needs_grad(ia)) add_into(gr.grad_mut(ia), go);
        if (gr.needs_grad(ib)) add_into(gr.grad_mut(ib), go, -1.0);
    });
}

Var mul(Var a, Var b) {
    Graph& g = same_graph(a, b);
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    check_same_dims(A, B, "mul");
    Tensor y(A.dims());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = A[i] * B[i];
    return g.record(std::move(y), {a.id, b.id}, [ia = a.id, ib = b.id](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        if (gr.needs_grad(ia)) {
            Tensor& ga = gr.grad_mut(ia);
            const Tensor& B = gr.value(ib);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * B[i];
        }
        if (gr.needs_grad(ib)) {
            Tensor& gb = gr.grad_mut(ib);
            const Tensor& A = gr.value(ia);
            for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * A[i];
        }
    });
}

Var add_row(Var x, Var row) {
    Graph& g = same_graph(x, row);
    const Tensor& X = g.value(x);
    const Tensor& r = g.value(row);
    require(r.size() == X.cols(), ErrorKind::dimension_mismatch, "add_row: row of " + std::to_string(r.size()) + " for " + dims_string(X.dims()));
    Tensor y = X;
    const std::size_t c = X.cols();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += r[i % c];
    return g.record(std::move(y), {x.id, row.id}, [ix = x.id, ir = row.id, c](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        if (gr.needs_grad(ix)) add_into(gr.grad_mut(ix), go);
        if (gr.needs_grad(ir)) {
            Tensor& gb = gr.grad_mut(ir);
            for (std::size_t i = 0; i < go.size(); ++i) gb[i % c] += go[i];
        }
    });
}

Var scale(Var a, double c) {
    return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var tanh(Var a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
    return unary(
        a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var log_clamped(Var a, double floor) {
    return unary(
        a, [floor](double x) { return std::log(std::max(x, floor)); },
        [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

Var softmax_rows(Var a) {
    Graph& g = graph_of(a);
    const Tensor& X = g.value(a);
    const std::size_t r = X.rows(), c = X.cols();
    Tensor y(X.dims());
    for (std::size_t i = 0; i < r; ++i) {
        const double* xi = X.ptr() + i * c;
        double* yi = y.ptr() + i * c;
        const double mx = *std::max_element(xi, xi + c);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += (yi[j] = std::exp(xi[j] - mx));
        for (std::size_t j = 0; j < c; ++j) yi[j] /= z;
    }
    return g.record(std::move(y), {a.id}, [ia = a.id, r, c](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        const Tensor& y = gr.value(self);
        Tensor& gx = gr.grad_mut(ia);
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += y[i * c + j] * go[i * c + j];
            for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += y[i * c + j] * (go[i * c + j] - dot);
        }
    });
}

Var layer_norm_rows(Var x, Var gain, Var bias, double eps) {
    Graph& g = same_graph(x, gain);
    same_graph(x, bias);
    const Tensor& X = g.value(x);
    const std::size_t r = X.rows(), c = X.cols();
    require(g.value(gain).size() == c && g.value(bias).size() == c, ErrorKind::dimension_mismatch,
            "layer_norm: gain/bias length must equal feature width " + std::to_string(c));
    auto xhat = std::make_shared<Tensor>(X.dims());
    auto inv_std = std::make_shared<std::vector<double>>(r);
    Tensor y(X.dims());
    const Tensor& G = g.value(gain);
    const Tensor& B = g.value(bias);
    for (std::size_t i = 0; i < r; ++i) {
        const double* xi = X.ptr() + i * c;
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) mean += xi[j];
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) var += (xi[j] - mean) * (xi[j] - mean);
        var /= static_cast<double>(c);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (std::size_t j = 0; j < c; ++j) {
            const double h = (xi[j] - mean) * is;
            (*xhat)(i, j) = h;
            y(i, j) = G[j] * h + B[j];
        }
    }
    return g.record(std::move(y), {x.id, gain.id, bias.id},
                    [ix = x.id, ig = gain.id, ib = bias.id, xhat, inv_std, r, c](Graph& gr, std::size_t self) {
                        const Tensor& go = gr.grad_mut(self);
                        const Tensor& G = gr.value(ig);
                        if (gr.needs_grad(ig)) {
                            Tensor& gg = gr.grad_mut(ig);
                            for (std::size_t i = 0; i < r * c; ++i) gg[i % c] += go[i] * (*xhat)[i];
                        }
                        if (gr.needs_grad(ib)) {
                            Tensor& gb = gr.grad_mut(ib);
                            for (std::size_t i = 0; i < r * c; ++i) gb[i % c] += go[i];
                        }
                        if (!gr.needs_grad(ix)) return;
                        Tensor& gx = gr.grad_mut(ix);
                        const double inv_c = 1.0 / static_cast<double>(c);
                        for (std::size_t i = 0; i < r; ++i) {
                            double m1 = 0.0, m2 = 0.0;
                            for (std::size_t j = 0; j < c; ++j) {
                                const double dh = go[i * c + j] * G[j];
                                m1 += dh;
                                m2 += dh * (*xhat)[i * c + j];
                            }
                            m1 *= inv_c;
                            m2 *= inv_c;
                            for (std::size_t j = 0; j < c; ++j) {
                                const double dh = go[i * c + j] * G[j];
                                gx[i * c + j] += (*inv_std)[i] * (dh - m1 - (*xhat)[i * c + j] * m2);
                            }
                        }
                    });
}

Var concat_cols(const std::vector<Var>& parts) {
    require(!parts.empty(), ErrorKind::invalid_argument, "concat_cols: no inputs");
    Graph& g = graph_of(parts.front());
    const std::size_t r = g.value(parts.front()).rows();
    std::vector<std::size_t> widths, ids;
    std::size_t total = 0;
    for (auto p : parts) {
        same_graph(parts.front(), p);
        require(g.value(p).rows() == r, ErrorKind::dimension_mismatch, "concat_cols: row counts differ");
        widths.push_back(g.value(p).cols());
        ids.push_back(p.id);
        total += widths.back();
    }
    Tensor y = Tensor::matrix(r, total);
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& P = g.value(parts[k]);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < widths[k]; ++j) y(i, off + j) = P[i * widths[k] + j];
        off += widths[k];
    }
    return g.record(std::move(y), ids, [ids, widths, r, total](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (gr.needs_grad(ids[k])) {
                Tensor& gp = gr.grad_mut(ids[k]);
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < widths[k]; ++j) gp[i * widths[k] + j] += go[i * total + off + j];
            }
            off += widths[k];
        }
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    require(!parts.empty(), ErrorKind::invalid_argument, "concat_rows: no inputs");
    Graph& g = graph_of(parts.front());
    const std::size_t c = g.value(parts.front()).cols();
    std::vector<std::size_t> ids, sizes;
    std::vector<double> data;
    for (auto p : parts) {
        same_graph(parts.front(), p);
        const Tensor& P = g.value(p);
        require(P.cols() == c, ErrorKind::dimension_mismatch, "concat_rows: column counts differ");
        ids.push_back(p.id);
        sizes.push_back(P.size());
        data.insert(data.end(), P.data().begin(), P.data().end());
    }
    const std::size_t rows = data.size() / c;
    return g.record(Tensor({rows, c}, std::move(data)), ids, [ids, sizes](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (gr.needs_grad(ids[k])) {
                Tensor& gp = gr.grad_mut(ids[k]);
                for (std::size_t i = 0; i < sizes[k]; ++i) gp[i] += go[off + i];
            }
            off += sizes[k];
        }
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
    Graph& g = graph_of(a);
    const Tensor& X = g.value(a);
    require(begin < end && end <= X.rows(), ErrorKind::invalid_argument, "slice_rows: range out of bounds");
    const std::size_t c = X.cols();
    return g.record(X.rows_slice(begin, end), {a.id}, [ia = a.id, begin, c](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        Tensor& gx = gr.grad_mut(ia);
        for (std::size_t i = 0; i < go.size(); ++i) gx[begin * c + i] += go[i];
    });
}

Var reshape(Var a, std::vector<std::size_t> dims) {
    Graph& g = graph_of(a);
    return g.record(g.value(a).reshaped(std::move(dims)), {a.id}, [ia = a.id](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad_mut(self);
        Tensor& gx = gr.grad_mut(ia);
        for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
    });
}

Var sum(Var a) {
    Graph& g = graph_of(a);
    double s = 0.0;
    for (double v : g.value(a).data()) s += v;
    return g.record(Tensor::scalar(s), {a.id}, [ia = a.id](Graph& gr, std::size_t self) {
        const double go = gr.grad_mut(self)[0];
        Tensor& gx = gr.grad_mut(ia);
        for (auto& v : gx.data()) v += go;
    });
}

Var pick(Var a, std::size_t flat_index) {
    Graph& g = graph_of(a);
    require(flat_index < g.value(a).size(), ErrorKind::invalid_argument, "pick: index out of range");
    return g.record(Tensor::scalar(g.value(a)[flat_index]), {a.id}, [ia = a.id, flat_index](Graph& gr, std::size_t self) {
        gr.grad_mut(ia)[flat_index] += gr.grad_mut(self)[0];
    });
}

Var attention(Var q, Var k, Var v, std::size_t heads, long window) {
    Graph& g = same_graph(q, k);
    same_graph(q, v);
    const Tensor& Q = g.value(q);
    const Tensor& K = g.value(k);
    const Tensor& V = g.value(v);
    require(heads > 0, ErrorKind::invalid_argument, "attention: heads must be positive");
    require(K.rows() >= 1, ErrorKind::invalid_argument, "attention: needs at least one key");
    require(Q.cols() == K.cols() && Q.cols() % heads == 0 && V.cols() % heads == 0, ErrorKind::dimension_mismatch,
            "attention: query " + dims_string(Q.dims()) + ", key " + dims_string(K.dims()) + ", value " + dims_string(V.dims()) +
                " incompatible with " + std::to_string(heads) + " heads");
    require(K.rows() == V.rows(), ErrorKind::dimension_mismatch, "attention: key and value counts differ");
    require(window < 0 || Q.rows() == K.rows(), ErrorKind::dimension_mismatch, "attention: windowed attention needs n_q == n_kv");
    kernels::AttentionShape s;
    s.n_q = Q.rows();
    s.n_kv = K.rows();
    s.heads = heads;
    s.key_dim = Q.cols() / heads;
    s.value_dim = V.cols() / heads;
    s.window = window;
    s.scale = 1.0 / std::sqrt(static_cast<double>(s.key_dim));
    auto probs = std::make_shared<std::vector<double>>(heads * s.n_q * s.n_kv);
    Tensor out = Tensor::matrix(s.n_q, heads * s.value_dim);
    kernels::attention_forward(s, Q.ptr(), K.ptr(), V.ptr(), out.ptr(), probs->data());
    return g.record(std::move(out), {q.id, k.id, v.id}, [s, probs, iq = q.id, ik = k.id, iv = v.id](Graph& gr, std::size_t self) {
        std::vector<double> scratch(probs->size());
        kernels::attention_backward(s, gr.value(iq).ptr(), gr.value(ik).ptr(), gr.value(iv).ptr(), probs->data(),
                                    gr.grad_mut(self).ptr(), gr.grad_mut(iq).ptr(), gr.grad_mut(ik).ptr(), gr.grad_mut(iv).ptr(),
                                    scratch.data());
    });
}

Var directional_context(Var a, Var b, Var w, Var x, bool forward) {
    Graph& g = same_graph(a, b);
    same_graph(a, w);
    same_graph(a, x);
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    const Tensor& W = g.value(w);
    const Tensor& X = g.value(x);
    require(A.same_dims(B) && W.size() == A.cols() && X.rows() == A.rows(), ErrorKind::dimension_mismatch,
            "directional_context: query " + dims_string(A.dims()) + ", key " + dims_string(B.dims()) + ", scorer " +
                dims_string(W.dims()) + ", values " + dims_string(X.dims()));
    kernels::ContextShape s;
    s.n = A.rows();
    s.hidden = A.cols();
    s.dim = X.cols();
    s.forward = forward;
    auto tanh_cache = std::make_shared<std::vector<double>>(s.pairs() * s.hidden);
    auto weights = std::make_shared<std::vector<double>>(s.pairs());
    Tensor out = Tensor::matrix(s.n, s.dim);
    kernels::context_forward(s, A.ptr(), B.ptr(), W.ptr(), X.ptr(), out.ptr(), tanh_cache->data(), weights->data());
    return g.record(std::move(out), {a.id, b.id, w.id, x.id},
                    [s, tanh_cache, weights, ia = a.id, ib = b.id, iw = w.id, ix = x.id](Graph& gr, std::size_t self) {
                        std::vector<double> scratch(s.pairs() + s.n * s.hidden);
                        kernels::context_backward(s, gr.value(iw).ptr(), gr.value(ix).ptr(), tanh_cache->data(), weights->data(),
                                                  gr.grad_mut(self).ptr(), gr.grad_mut(ia).ptr(), gr.grad_mut(ib).ptr(),
                                                  gr.grad_mut(iw).ptr(), gr.grad_mut(ix).ptr(), scratch.data());
                    });
}

}  // namespace sail::ops
