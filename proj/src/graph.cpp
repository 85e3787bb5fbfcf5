#include "san/graph.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace san {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

}  // namespace

Var Graph::push(Tensor value, std::vector<int> inputs,
                std::function<void(Graph&, int)> backprop) {
    Node n;
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::input(Tensor value) { return push(std::move(value), {}, nullptr); }

Var Graph::param(const std::string& name) {
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end()) return Var{it->second};
    if (!params_) throw UsageError("graph has no parameter store");
    Var v = push(params_->at(name), {}, nullptr);
    nodes_[v.id].param_name = name;
    param_nodes_[name] = v.id;
    return v;
}

Var Graph::add(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require(x.same_shape(y), "add: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    Tensor out = x;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += y[i];
    return push(std::move(out), {a.id, b.id}, [](Graph& g, int id) {
        const Node& n = g.nodes_[id];
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            g.grad_of(n.inputs[0])[i] += n.grad[i];
            g.grad_of(n.inputs[1])[i] += n.grad[i];
        }
    });
}

Var Graph::sub(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require(x.same_shape(y), "sub: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    Tensor out = x;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= y[i];
    return push(std::move(out), {a.id, b.id}, [](Graph& g, int id) {
        const Node& n = g.nodes_[id];
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            g.grad_of(n.inputs[0])[i] += n.grad[i];
            g.grad_of(n.inputs[1])[i] -= n.grad[i];
        }
    });
}

Var Graph::mul(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require(x.same_shape(y), "mul: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    Tensor out = x;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= y[i];
    return push(std::move(out), {a.id, b.id}, [](Graph& g, int id) {
        const Node& n = g.nodes_[id];
        const Tensor& x = g.val_of(n.inputs[0]);
        const Tensor& y = g.val_of(n.inputs[1]);
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            g.grad_of(n.inputs[0])[i] += n.grad[i] * y[i];
            g.grad_of(n.inputs[1])[i] += n.grad[i] * x[i];
        }
    });
}

Var Graph::scale(Var a, double c) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c;
    return push(std::move(out), {a.id}, [c](Graph& g, int id) {
        const Node& n = g.nodes_[id];
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            g.grad_of(n.inputs[0])[i] += c * n.grad[i];
    });
}

Var Graph::relu(Var a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return push(std::move(out), {a.id}, [](Graph& g, int id) {
        const Node& n = g.nodes_[id];
        const Tensor& x = g.val_of(n.inputs[0]);
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            if (x[i] > 0.0) g.grad_of(n.inputs[0])[i] += n.grad[i];
    });
}

Var Graph::sigmoid(Var a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        double x = out[i];
        // branch keeps exp() off the overflow-prone side
        out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    return push(std::move(out), {a.id}, [](Graph& g, int id) {
        const Node& n = g.nodes_[id];
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            double s = n.value[i];
            g.grad_of(n.inputs[0])[i] += n.grad[i] * s * (1.0 - s);
        }
    });
}

Var Graph::tanh_(Var a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    return push(std::move(out), {a.id}, [](Graph& g, int id) {
        const Node& n = g.nodes_[id];
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            double t = n.value[i];
            g.grad_of(n.inputs[0])[i] += n.grad[i] * (1.0 - t * t);
        }
    });
}

Var Graph::prelu(Var x, Var slopes) {
    const Tensor& in = value(x);
    const Tensor& a = value(slopes);
    require(in.rank() == 3, "prelu: expected [C,H,W], got " + in.shape_str());
    require(a.rank() == 1 && a.dim(0) == in.dim(0),
            "prelu: slope count " + a.shape_str() + " vs channels " + in.shape_str());
    Tensor out = in;
    std::size_t hw = in.dim(1) * in.dim(2);
    for (std::size_t c = 0; c < in.dim(0); ++c)
        for (std::size_t i = 0; i < hw; ++i) {
            double v = out[c * hw + i];
            if (v < 0.0) out[c * hw + i] = a[c] * v;
        }
    return push(std::move(out), {x.id, slopes.id}, [](Graph& g, int id) {
        const Node& n = g.nodes_[id];
        const Tensor& in = g.val_of(n.inputs[0]);
        const Tensor& a = g.val_of(n.inputs[1]);
        Tensor& gx = g.grad_of(n.inputs[0]);
        Tensor& ga = g.grad_of(n.inputs[1]);
        std::size_t hw = in.dim(1) * in.dim(2);
        for (std::size_t c = 0; c < in.dim(0); ++c)
            for (std::size_t i = 0; i < hw; ++i) {
                std::size_t k = c * hw + i;
                if (in[k] >= 0.0) {
                    gx[k] += n.grad[k];
                } else {
                    gx[k] += a[c] * n.grad[k];
                    ga[c] += in[k] * n.grad[k];
                }
            }
    });
}

Var Graph::matmul(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require(x.rank() == 2 && y.rank() == 2, "matmul: rank-2 operands required");
    require(x.dim(1) == y.dim(0),
            "matmul: inner dimensions disagree: " + x.shape_str() + " vs " + y.shape_str());
    std::size_t m = x.dim(0), n = x.dim(1), p = y.dim(1);
    Tensor out({m, p});
    MatMap(out.data(), m, p) =
        ConstMatMap(x.data(), m, n) * ConstMatMap(y.data(), n, p);
    return push(std::move(out), {a.id, b.id}, [m, n, p](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        ConstMatMap go(node.grad.data(), m, p);
        ConstMatMap xv(g.val_of(node.inputs[0]).data(), m, n);
        ConstMatMap yv(g.val_of(node.inputs[1]).data(), n, p);
        MatMap(g.grad_of(node.inputs[0]).data(), m, n) += go * yv.transpose();
        MatMap(g.grad_of(node.inputs[1]).data(), n, p) += xv.transpose() * go;
    });
}

Var Graph::matvec(Var w, Var x) {
    const Tensor& wv = value(w);
    const Tensor& xv = value(x);
    require(wv.rank() == 2 && xv.rank() == 1 && wv.dim(1) == xv.dim(0),
            "matvec: " + wv.shape_str() + " vs " + xv.shape_str());
    std::size_t m = wv.dim(0), n = wv.dim(1);
    Tensor out({m});
    Eigen::Map<Eigen::VectorXd>(out.data(), m) =
        ConstMatMap(wv.data(), m, n) * Eigen::Map<const Eigen::VectorXd>(xv.data(), n);
    return push(std::move(out), {w.id, x.id}, [m, n](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Eigen::Map<const Eigen::VectorXd> go(node.grad.data(), m);
        ConstMatMap wv(g.val_of(node.inputs[0]).data(), m, n);
        Eigen::Map<const Eigen::VectorXd> xv(g.val_of(node.inputs[1]).data(), n);
        MatMap(g.grad_of(node.inputs[0]).data(), m, n) += go * xv.transpose();
        Eigen::Map<Eigen::VectorXd>(g.grad_of(node.inputs[1]).data(), n) += wv.transpose() * go;
    });
}

Var Graph::linear_rows(Var x, Var w, Var b) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    const Tensor& bv = value(b);
    require(xv.rank() == 2 && wv.rank() == 2 && xv.dim(1) == wv.dim(1),
            "linear_rows: " + xv.shape_str() + " vs " + wv.shape_str());
    require(bv.rank() == 1 && bv.dim(0) == wv.dim(0), "linear_rows: bias shape");
    std::size_t l = xv.dim(0), n = xv.dim(1), m = wv.dim(0);
    Tensor out({l, m});
    MatMap(out.data(), l, m) =
        ConstMatMap(xv.data(), l, n) * ConstMatMap(wv.data(), m, n).transpose();
    for (std::size_t r = 0; r < l; ++r)
        for (std::size_t c = 0; c < m; ++c) out.at(r, c) += bv[c];
    return push(std::move(out), {x.id, w.id, b.id}, [l, n, m](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        ConstMatMap go(node.grad.data(), l, m);
        ConstMatMap xv(g.val_of(node.inputs[0]).data(), l, n);
        ConstMatMap wv(g.val_of(node.inputs[1]).data(), m, n);
        MatMap(g.grad_of(node.inputs[0]).data(), l, n) += go * wv;
        MatMap(g.grad_of(node.inputs[1]).data(), m, n) += go.transpose() * xv;
        Tensor& gb = g.grad_of(node.inputs[2]);
        for (std::size_t r = 0; r < l; ++r)
            for (std::size_t c = 0; c < m; ++c) gb[c] += node.grad[r * m + c];
    });
}

Var Graph::mul_rows(Var x, Var v) {
    const Tensor& xv = value(x);
    const Tensor& vv = value(v);
    require(xv.rank() == 2 && vv.rank() == 1 && xv.dim(1) == vv.dim(0),
            "mul_rows: " + xv.shape_str() + " vs " + vv.shape_str());
    std::size_t l = xv.dim(0), k = xv.dim(1);
    Tensor out = xv;
    for (std::size_t r = 0; r < l; ++r)
        for (std::size_t c = 0; c < k; ++c) out.at(r, c) *= vv[c];
    return push(std::move(out), {x.id, v.id}, [l, k](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        const Tensor& xv = g.val_of(node.inputs[0]);
        const Tensor& vv = g.val_of(node.inputs[1]);
        Tensor& gx = g.grad_of(node.inputs[0]);
        Tensor& gv = g.grad_of(node.inputs[1]);
        for (std::size_t r = 0; r < l; ++r)
            for (std::size_t c = 0; c < k; ++c) {
                gx[r * k + c] += node.grad[r * k + c] * vv[c];
                gv[c] += node.grad[r * k + c] * xv[r * k + c];
            }
    });
}

Var Graph::conv2d(Var input, Var kernels, Var bias, int stride, int padding) {
    const Tensor& x = value(input);
    const Tensor& w = value(kernels);
    const Tensor& b = value(bias);
    require(x.rank() == 3 && w.rank() == 4, "conv2d: input [C,H,W], kernels [K,C,kh,kw]");
    require(x.dim(0) == w.dim(1),
            "conv2d: channel mismatch " + x.shape_str() + " vs " + w.shape_str());
    const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const std::size_t K = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    require(b.rank() == 1 && b.dim(0) == K, "conv2d: bias shape");
    require(kh <= H + 2 * padding && kw <= W + 2 * padding, "conv2d: kernel exceeds padded input");
    long hn = static_cast<long>(H) + 2 * padding - static_cast<long>(kh);
    long wn = static_cast<long>(W) + 2 * padding - static_cast<long>(kw);
    if (hn % stride != 0 || wn % stride != 0)
        throw ConfigError("conv2d: non-integral output size for input " + x.shape_str());
    const std::size_t Ho = hn / stride + 1, Wo = wn / stride + 1;

    Tensor out({K, Ho, Wo});
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t oi = 0; oi < Ho; ++oi)
            for (std::size_t oj = 0; oj < Wo; ++oj) {
                double acc = b[k];
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t di = 0; di < kh; ++di)
                        for (std::size_t dj = 0; dj < kw; ++dj) {
                            long ii = static_cast<long>(oi) * stride + di - padding;
                            long jj = static_cast<long>(oj) * stride + dj - padding;
                            if (ii < 0 || jj < 0 || ii >= static_cast<long>(H) ||
                                jj >= static_cast<long>(W))
                                continue;
                            acc += x.at(c, ii, jj) * w.at(k, c, di, dj);
                        }
                out.at(k, oi, oj) = acc;
            }
    return push(std::move(out), {input.id, kernels.id, bias.id},
                [stride, padding](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        const Tensor& x = g.val_of(node.inputs[0]);
        const Tensor& w = g.val_of(node.inputs[1]);
        Tensor& gx = g.grad_of(node.inputs[0]);
        Tensor& gw = g.grad_of(node.inputs[1]);
        Tensor& gb = g.grad_of(node.inputs[2]);
        const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
        const std::size_t K = w.dim(0), kh = w.dim(2), kw = w.dim(3);
        const std::size_t Ho = node.value.dim(1), Wo = node.value.dim(2);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t oi = 0; oi < Ho; ++oi)
                for (std::size_t oj = 0; oj < Wo; ++oj) {
                    double go = node.grad.at(k, oi, oj);
                    if (go == 0.0) continue;
                    gb[k] += go;
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t di = 0; di < kh; ++di)
                            for (std::size_t dj = 0; dj < kw; ++dj) {
                                long ii = static_cast<long>(oi) * stride + di - padding;
                                long jj = static_cast<long>(oj) * stride + dj - padding;
                                if (ii < 0 || jj < 0 || ii >= static_cast<long>(H) ||
                                    jj >= static_cast<long>(W))
                                    continue;
                                gx.at(c, ii, jj) += go * w.at(k, c, di, dj);
                                gw.at(k, c, di, dj) += go * x.at(c, ii, jj);
                            }
                }
    });
}

Var Graph::avg_pool2d(Var input, int stride_h, int stride_w) {
    const Tensor& x = value(input);
    require(x.rank() == 2, "avg_pool2d: expected [H,W], got " + x.shape_str());
    const std::size_t H = x.dim(0), W = x.dim(1);
    if (stride_h <= 0 || stride_w <= 0 || H % stride_h != 0 || W % stride_w != 0)
        throw ConfigError("avg_pool2d: strides (" + std::to_string(stride_h) + "," +
                          std::to_string(stride_w) + ") do not divide " + x.shape_str());
    const std::size_t Ho = H / stride_h, Wo = W / stride_w;
    const double inv = 1.0 / (stride_h * stride_w);
    Tensor out({Ho, Wo});
    for (std::size_t oi = 0; oi < Ho; ++oi)
        for (std::size_t oj = 0; oj < Wo; ++oj) {
            double acc = 0.0;
            for (int di = 0; di < stride_h; ++di)
                for (int dj = 0; dj < stride_w; ++dj)
                    acc += x.at(oi * stride_h + di, oj * stride_w + dj);
            // true division: keeps outputs bit-identical to a naive block-mean
            out.at(oi, oj) = acc / (stride_h * stride_w);
        }
    return push(std::move(out), {input.id}, [stride_h, stride_w, inv](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Tensor& gx = g.grad_of(node.inputs[0]);
        const std::size_t Ho = node.value.dim(0), Wo = node.value.dim(1);
        for (std::size_t oi = 0; oi < Ho; ++oi)
            for (std::size_t oj = 0; oj < Wo; ++oj) {
                double go = node.grad.at(oi, oj) * inv;
                for (int di = 0; di < stride_h; ++di)
                    for (int dj = 0; dj < stride_w; ++dj)
                        gx.at(oi * stride_h + di, oj * stride_w + dj) += go;
            }
    });
}

Var Graph::upsample2d(Var input, int factor) {
    const Tensor& x = value(input);
    require(x.rank() == 2 || x.rank() == 3, "upsample2d: rank 2 or 3 required");
    const bool chw = x.rank() == 3;
    const std::size_t C = chw ? x.dim(0) : 1;
    const std::size_t H = chw ? x.dim(1) : x.dim(0);
    const std::size_t W = chw ? x.dim(2) : x.dim(1);
    const std::size_t f = static_cast<std::size_t>(factor);
    Tensor out(chw ? std::vector<std::size_t>{C, H * f, W * f}
                   : std::vector<std::size_t>{H * f, W * f});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < H * f; ++i)
            for (std::size_t j = 0; j < W * f; ++j)
                out[(c * H * f + i) * W * f + j] = x[(c * H + i / f) * W + j / f];
    return push(std::move(out), {input.id}, [C, H, W, f](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Tensor& gx = g.grad_of(node.inputs[0]);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < H * f; ++i)
                for (std::size_t j = 0; j < W * f; ++j)
                    gx[(c * H + i / f) * W + j / f] += node.grad[(c * H * f + i) * W * f + j];
    });
}

Var Graph::concat_channels(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require(x.rank() == 3 && y.rank() == 3 && x.dim(1) == y.dim(1) && x.dim(2) == y.dim(2),
            "concat_channels: " + x.shape_str() + " vs " + y.shape_str());
    Tensor out({x.dim(0) + y.dim(0), x.dim(1), x.dim(2)});
    std::copy(x.data(), x.data() + x.numel(), out.data());
    std::copy(y.data(), y.data() + y.numel(), out.data() + x.numel());
    std::size_t nx = x.numel();
    return push(std::move(out), {a.id, b.id}, [nx](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Tensor& gx = g.grad_of(node.inputs[0]);
        Tensor& gy = g.grad_of(node.inputs[1]);
        for (std::size_t i = 0; i < nx; ++i) gx[i] += node.grad[i];
        for (std::size_t i = nx; i < node.grad.numel(); ++i) gy[i - nx] += node.grad[i];
    });
}

Var Graph::reshape(Var a, std::vector<std::size_t> shape) {
    const Tensor& x = value(a);
    require(Tensor::product(shape) == x.numel(), "reshape: numel mismatch");
    Tensor out = Tensor::from(std::move(shape), x.buffer());
    return push(std::move(out), {a.id}, [](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Tensor& gx = g.grad_of(node.inputs[0]);
        for (std::size_t i = 0; i < node.grad.numel(); ++i) gx[i] += node.grad[i];
    });
}

Var Graph::chw_to_rows(Var a) {
    const Tensor& x = value(a);
    require(x.rank() == 3, "chw_to_rows: expected [C,H,W]");
    const std::size_t C = x.dim(0), HW = x.dim(1) * x.dim(2);
    Tensor out({HW, C});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t p = 0; p < HW; ++p) out.at(p, c) = x[c * HW + p];
    return push(std::move(out), {a.id}, [C, HW](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Tensor& gx = g.grad_of(node.inputs[0]);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t p = 0; p < HW; ++p) gx[c * HW + p] += node.grad[p * C + c];
    });
}

Var Graph::row(Var x, std::size_t index) {
    const Tensor& m = value(x);
    require(m.rank() == 2 && index < m.dim(0), "row: index out of range");
    std::size_t n = m.dim(1);
    Tensor out({n});
    std::copy(m.data() + index * n, m.data() + (index + 1) * n, out.data());
    return push(std::move(out), {x.id}, [index, n](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Tensor& gx = g.grad_of(node.inputs[0]);
        for (std::size_t j = 0; j < n; ++j) gx[index * n + j] += node.grad[j];
    });
}

Var Graph::stack_rows(const std::vector<Var>& rows) {
    require(!rows.empty(), "stack_rows: empty input");
    std::size_t n = value(rows[0]).dim(0);
    Tensor out({rows.size(), n});
    std::vector<int> ids;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Tensor& v = value(rows[r]);
        require(v.rank() == 1 && v.dim(0) == n, "stack_rows: inconsistent row shapes");
        std::copy(v.data(), v.data() + n, out.data() + r * n);
        ids.push_back(rows[r].id);
    }
    return push(std::move(out), std::move(ids), [n](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        for (std::size_t r = 0; r < node.inputs.size(); ++r) {
            Tensor& gr = g.grad_of(node.inputs[r]);
            for (std::size_t j = 0; j < n; ++j) gr[j] += node.grad[r * n + j];
        }
    });
}

Var Graph::mean_axis(Var x, int axis) {
    const Tensor& m = value(x);
    require(m.rank() == 2 && (axis == 0 || axis == 1), "mean_axis: rank-2 tensor, axis 0 or 1");
    std::size_t rowsN = m.dim(0), cols = m.dim(1);
    if (axis == 0) {
        Tensor out({cols});
        for (std::size_t r = 0; r < rowsN; ++r)
            for (std::size_t c = 0; c < cols; ++c) out[c] += m.at(r, c);
        double inv = 1.0 / rowsN;
        for (std::size_t c = 0; c < cols; ++c) out[c] *= inv;
        return push(std::move(out), {x.id}, [rowsN, cols, inv](Graph& g, int id) {
            const Node& node = g.nodes_[id];
            Tensor& gx = g.grad_of(node.inputs[0]);
            for (std::size_t r = 0; r < rowsN; ++r)
                for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += node.grad[c] * inv;
        });
    }
    Tensor out({rowsN});
    double inv = 1.0 / cols;
    for (std::size_t r = 0; r < rowsN; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += m.at(r, c);
        out[r] = acc * inv;
    }
    return push(std::move(out), {x.id}, [rowsN, cols, inv](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Tensor& gx = g.grad_of(node.inputs[0]);
        for (std::size_t r = 0; r < rowsN; ++r)
            for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += node.grad[r] * inv;
    });
}

Var Graph::sum_all(Var x) {
    const Tensor& m = value(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < m.numel(); ++i) acc += m[i];
    return push(Tensor::scalar(acc), {x.id}, [](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Tensor& gx = g.grad_of(node.inputs[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += node.grad[0];
    });
}

Var Graph::softmax(Var x, int axis) {
    const Tensor& m = value(x);
    require(m.rank() == 1 || m.rank() == 2, "softmax: rank 1 or 2 required");
    // treat a vector as a single row; axis selects rows/cols for rank 2
    std::size_t groups, span, gstride, estride;
    if (m.rank() == 1) {
        require(axis == 0, "softmax: axis 0 for vectors");
        groups = 1; span = m.dim(0); gstride = 0; estride = 1;
    } else if (axis == 1) {
        groups = m.dim(0); span = m.dim(1); gstride = m.dim(1); estride = 1;
    } else {
        groups = m.dim(1); span = m.dim(0); gstride = 1; estride = m.dim(1);
    }
    Tensor out = m;
    for (std::size_t gidx = 0; gidx < groups; ++gidx) {
        double mx = -1e300;
        for (std::size_t e = 0; e < span; ++e)
            mx = std::max(mx, m[gidx * gstride + e * estride]);
        double z = 0.0;
        for (std::size_t e = 0; e < span; ++e) {
            std::size_t k = gidx * gstride + e * estride;
            out[k] = std::exp(m[k] - mx);
            z += out[k];
        }
        for (std::size_t e = 0; e < span; ++e) out[gidx * gstride + e * estride] /= z;
    }
    return push(std::move(out), {x.id}, [groups, span, gstride, estride](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Tensor& gx = g.grad_of(node.inputs[0]);
        for (std::size_t gidx = 0; gidx < groups; ++gidx) {
            double dot = 0.0;
            for (std::size_t e = 0; e < span; ++e) {
                std::size_t k = gidx * gstride + e * estride;
                dot += node.grad[k] * node.value[k];
            }
            for (std::size_t e = 0; e < span; ++e) {
                std::size_t k = gidx * gstride + e * estride;
                gx[k] += node.value[k] * (node.grad[k] - dot);
            }
        }
    });
}

Var Graph::normalize_l1(Var x) {
    const Tensor& v = value(x);
    require(v.rank() == 1, "normalize_l1: vector required");
    double s = 0.0;
    for (std::size_t i = 0; i < v.numel(); ++i) s += v[i];
    require(s > 0.0, "normalize_l1: nonpositive sum");
    Tensor out = v;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] /= s;
    return push(std::move(out), {x.id}, [s](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Tensor& gx = g.grad_of(node.inputs[0]);
        double dot = 0.0;
        for (std::size_t i = 0; i < node.grad.numel(); ++i) dot += node.grad[i] * node.value[i];
        for (std::size_t i = 0; i < node.grad.numel(); ++i)
            gx[i] += (node.grad[i] - dot) / s;
    });
}

Var Graph::max_all(Var x) {
    const Tensor& v = value(x);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < v.numel(); ++i)
        if (v[i] > v[arg]) arg = i;
    return push(Tensor::scalar(v[arg]), {x.id}, [arg](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        g.grad_of(node.inputs[0])[arg] += node.grad[0];
    });
}

Var Graph::cosine(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require(x.rank() == 1 && x.same_shape(y), "cosine: equal-length vectors required");
    std::size_t n = x.dim(0);
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    nx = std::sqrt(nx);
    ny = std::sqrt(ny);
    if (nx < 1e-12 || ny < 1e-12)
        throw NumericError("cosine: degenerate (near-zero) vector");
    double c = dot / (nx * ny);
    double clamped = std::min(1.0, std::max(-1.0, c));
    return push(Tensor::scalar(clamped), {a.id, b.id}, [n, nx, ny, c](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        const Tensor& x = g.val_of(node.inputs[0]);
        const Tensor& y = g.val_of(node.inputs[1]);
        Tensor& gx = g.grad_of(node.inputs[0]);
        Tensor& gy = g.grad_of(node.inputs[1]);
        double go = node.grad[0];
        for (std::size_t i = 0; i < n; ++i) {
            gx[i] += go * (y[i] / (nx * ny) - c * x[i] / (nx * nx));
            gy[i] += go * (x[i] / (nx * ny) - c * y[i] / (ny * ny));
        }
    });
}

Var Graph::embedding(Var we, const std::vector<int>& ids) {
    const Tensor& w = value(we);
    require(w.rank() == 2, "embedding: matrix required");
    std::size_t emb = w.dim(0), vsize = w.dim(1);
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= vsize)
            throw DataError("embedding: token id " + std::to_string(id) + " out of range");
    Tensor out({ids.size(), emb});
    for (std::size_t j = 0; j < ids.size(); ++j)
        for (std::size_t e = 0; e < emb; ++e) out.at(j, e) = w.at(e, ids[j]);
    return push(std::move(out), {we.id}, [ids, emb, vsize](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        Tensor& gw = g.grad_of(node.inputs[0]);
        for (std::size_t j = 0; j < ids.size(); ++j)
            for (std::size_t e = 0; e < emb; ++e)
                gw[e * vsize + ids[j]] += node.grad[j * emb + e];
    });
}

Var Graph::bce_logits_mean(Var logits, const Tensor& mask) {
    const Tensor& x = value(logits);
    require(x.same_shape(mask), "bce: logits " + x.shape_str() + " vs mask " + mask.shape_str());
    for (std::size_t i = 0; i < mask.numel(); ++i)
        if (mask[i] != 0.0 && mask[i] != 1.0)
            throw DataError("bce: mask value outside {0,1}");
    // extended-precision accumulator: keeps the mean's rounding error at ~1 ulp,
    // which the finite-difference gradient checks rely on
    long double acc = 0.0L;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        double v = x[i];
        // max(v,0) - v*m + log(1+exp(-|v|))
        acc += std::max(v, 0.0) - v * mask[i] + std::log1p(std::exp(-std::abs(v)));
    }
    double inv = 1.0 / x.numel();
    return push(Tensor::scalar(static_cast<double>(acc) * inv), {logits.id},
                [mask, inv](Graph& g, int id) {
        const Node& node = g.nodes_[id];
        const Tensor& x = g.val_of(node.inputs[0]);
        Tensor& gx = g.grad_of(node.inputs[0]);
        double go = node.grad[0] * inv;
        for (std::size_t i = 0; i < x.numel(); ++i) {
            double v = x[i];
            double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
            gx[i] += go * (s - mask[i]);
        }
    });
}

GradientMap Graph::backward(Var loss) {
    int lid = check(loss);
    if (nodes_[lid].value.numel() != 1)
        throw UsageError("backward: loss node must be scalar");
    for (Node& n : nodes_) n.grad = Tensor(n.value.shape());
    nodes_[lid].grad[0] = 1.0;
    for (int i = lid; i >= 0; --i)
        if (nodes_[i].backprop) nodes_[i].backprop(*this, i);
    GradientMap grads;
    for (const auto& [name, id] : param_nodes_) grads[name] = nodes_[id].grad;
    return grads;
}

}  // namespace san
