#include "tape.hpp"

#include <cmath>

#include "error.hpp"

namespace svq {

namespace {

void same_shape(const Tensor2& a, const Tensor2& b, const char* op) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Shape,
            std::string(op) + " shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace

Var Tape::push(Tensor2 value, bool needs_grad, std::function<void(Tape&, const Tensor2&)> back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

void Tape::check(Var v) const {
    require(v.valid() && v.id < nodes_.size(), ErrorKind::State, "variable does not belong to this tape");
}

Tensor2& Tape::grad_buf(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty() && !n.value.empty()) n.grad = Tensor2(n.value.rows(), n.value.cols());
    return n.grad;
}

Var Tape::constant(Tensor2 value) { return push(std::move(value), false, nullptr); }

Var Tape::param(const Param& p) {
    if (auto it = param_leaves_.find(&p); it != param_leaves_.end()) return Var{it->second};
    Var v = push(p.value, true, nullptr);
    nodes_[v.id].param = &p;
    param_leaves_.emplace(&p, v.id);
    return v;
}

const Tensor2& Tape::value(Var v) const {
    check(v);
    return nodes_[v.id].value;
}

Tensor2 Tape::grad(Var v) const {
    check(v);
    const Node& n = nodes_[v.id];
    if (n.grad.empty()) return Tensor2(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::backward(Var loss) {
    require(!nodes_.empty(), ErrorKind::State, "backward called before any forward pass was recorded");
    check(loss);
    require(!backward_done_, ErrorKind::State, "backward already ran on this tape");
    const Tensor2& lv = nodes_[loss.id].value;
    require(lv.rows() == 1 && lv.cols() == 1, ErrorKind::Shape, "backward target must be scalar, got " + lv.shape_str());
    backward_done_ = true;
    if (!nodes_[loss.id].needs_grad) return;
    grad_buf(loss)[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.needs_grad || n.grad.empty()) continue;
        if (n.param) {
            auto& dst = n.param->grad.data();
            const auto& src = n.grad.data();
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        } else if (n.back) {
            // Closures only write their inputs' grads; nodes_ never grows here.
            n.back(*this, n.grad);
        }
    }
}

Var Tape::matmul(Var a, Var b) {
    check(a);
    check(b);
    Tensor2 out = svq::matmul(value(a), value(b));
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Tensor2& g) {
        const Tensor2& av = t.value(a);
        const Tensor2& bv = t.value(b);
        const std::size_t m = av.rows(), inner = av.cols(), n = bv.cols();
        if (t.needs(a)) {
            Tensor2& ga = t.grad_buf(a);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t k = 0; k < inner; ++k) {
                    const double* gr = g.data().data() + i * n;
                    const double* br = bv.data().data() + k * n;
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += gr[j] * br[j];
                    ga(i, k) += s;
                }
        }
        if (t.needs(b)) {
            Tensor2& gb = t.grad_buf(b);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t k = 0; k < inner; ++k) {
                    const double aik = av(i, k);
                    double* gbr = gb.data().data() + k * n;
                    const double* gr = g.data().data() + i * n;
                    for (std::size_t j = 0; j < n; ++j) gbr[j] += aik * gr[j];
                }
        }
    });
}

Var Tape::add(Var a, Var b) {
    check(a);
    check(b);
    same_shape(value(a), value(b), "add");
    Tensor2 out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += value(b)[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Tensor2& g) {
        for (Var v : {a, b})
            if (t.needs(v)) {
                Tensor2& gv = t.grad_buf(v);
                for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
            }
    });
}

Var Tape::sub(Var a, Var b) {
    check(a);
    check(b);
    same_shape(value(a), value(b), "sub");
    Tensor2 out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= value(b)[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Tensor2& g) {
        if (t.needs(a)) {
            Tensor2& ga = t.grad_buf(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.needs(b)) {
            Tensor2& gb = t.grad_buf(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

Var Tape::mul(Var a, Var b) {
    check(a);
    check(b);
    same_shape(value(a), value(b), "mul");
    Tensor2 out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= value(b)[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Tensor2& g) {
        if (t.needs(a)) {
            Tensor2& ga = t.grad_buf(a);
            const Tensor2& bv = t.value(b);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.needs(b)) {
            Tensor2& gb = t.grad_buf(b);
            const Tensor2& av = t.value(a);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

Var Tape::add_row(Var a, Var row) {
    check(a);
    check(row);
    const Tensor2& av = value(a);
    const Tensor2& rv = value(row);
    require(rv.rows() == 1 && rv.cols() == av.cols(), ErrorKind::Shape,
            "add_row shape mismatch: " + av.shape_str() + " + " + rv.shape_str());
    Tensor2 out = av;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv[j];
    return push(std::move(out), needs(a) || needs(row), [a, row](Tape& t, const Tensor2& g) {
        if (t.needs(a)) {
            Tensor2& ga = t.grad_buf(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.needs(row)) {
            Tensor2& gr = t.grad_buf(row);
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j);
        }
    });
}

Var Tape::scale(Var a, double s) {
    check(a);
    Tensor2 out = value(a);
    for (double& x : out.data()) x *= s;
    return push(std::move(out), needs(a), [a, s](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
    });
}

Var Tape::add_scalar(Var a, double s) {
    check(a);
    Tensor2 out = value(a);
    for (double& x : out.data()) x += s;
    return push(std::move(out), needs(a), [a](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

Var Tape::row_scale(Var a, std::vector<double> factors) {
    check(a);
    const Tensor2& av = value(a);
    require(factors.size() == av.rows(), ErrorKind::Shape,
            "row_scale expects " + std::to_string(av.rows()) + " factors, got " + std::to_string(factors.size()));
    Tensor2 out = av;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (double& x : out.row_span(i)) x *= factors[i];
    return push(std::move(out), needs(a), [a, f = std::move(factors)](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += f[i] * g(i, j);
    });
}

Var Tape::sigmoid(Var a) {
    check(a);
    Tensor2 out = value(a);
    for (double& x : out.data()) x = 1.0 / (1.0 + std::exp(-x));
    const Var self{nodes_.size()};
    return push(std::move(out), needs(a), [a, self](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        const Tensor2& y = t.value(self);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

Var Tape::tanh(Var a) {
    check(a);
    Tensor2 out = value(a);
    for (double& x : out.data()) x = std::tanh(x);
    const Var self{nodes_.size()};
    return push(std::move(out), needs(a), [a, self](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        const Tensor2& y = t.value(self);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
}

Var Tape::exp(Var a) {
    check(a);
    Tensor2 out = value(a);
    for (double& x : out.data()) x = std::exp(x);
    const Var self{nodes_.size()};
    return push(std::move(out), needs(a), [a, self](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        const Tensor2& y = t.value(self);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    });
}

Var Tape::square(Var a) {
    check(a);
    Tensor2 out = value(a);
    for (double& x : out.data()) x = x * x;
    return push(std::move(out), needs(a), [a](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        const Tensor2& x = t.value(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * x[i] * g[i];
    });
}

Var Tape::concat_cols(std::span<const Var> parts) {
    require(!parts.empty(), ErrorKind::InvalidArgument, "concat_cols of nothing");
    const std::size_t rows = value(parts[0]).rows();
    std::size_t cols = 0;
    bool ng = false;
    for (Var p : parts) {
        check(p);
        require(value(p).rows() == rows, ErrorKind::Shape,
                "concat_cols row mismatch: " + value(parts[0]).shape_str() + " vs " + value(p).shape_str());
        cols += value(p).cols();
        ng = ng || needs(p);
    }
    Tensor2 out(rows, cols);
    std::size_t off = 0;
    for (Var p : parts) {
        const Tensor2& pv = value(p);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < pv.cols(); ++j) out(i, off + j) = pv(i, j);
        off += pv.cols();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    return push(std::move(out), ng, [ps = std::move(ps)](Tape& t, const Tensor2& g) {
        std::size_t o = 0;
        for (Var p : ps) {
            const std::size_t c = t.value(p).cols();
            if (t.needs(p)) {
                Tensor2& gp = t.grad_buf(p);
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < c; ++j) gp(i, j) += g(i, o + j);
            }
            o += c;
        }
    });
}

Var Tape::slice_cols(Var a, std::size_t start, std::size_t count) {
    check(a);
    const Tensor2& av = value(a);
    require(start + count <= av.cols(), ErrorKind::Shape,
            "slice_cols [" + std::to_string(start) + ", +" + std::to_string(count) + ") out of " + av.shape_str());
    Tensor2 out(av.rows(), count);
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < count; ++j) out(i, j) = av(i, start + j);
    return push(std::move(out), needs(a), [a, start](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, start + j) += g(i, j);
    });
}

Var Tape::slice_rows(Var a, std::size_t start, std::size_t count) {
    check(a);
    const Tensor2& av = value(a);
    require(start + count <= av.rows(), ErrorKind::Shape,
            "slice_rows [" + std::to_string(start) + ", +" + std::to_string(count) + ") out of " + av.shape_str());
    const std::size_t c = av.cols();
    std::vector<double> d(av.data().begin() + static_cast<std::ptrdiff_t>(start * c),
                          av.data().begin() + static_cast<std::ptrdiff_t>((start + count) * c));
    return push(Tensor2(count, c, std::move(d)), needs(a), [a, start](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        const std::size_t off = start * g.cols();
        for (std::size_t i = 0; i < g.size(); ++i) ga[off + i] += g[i];
    });
}

Var Tape::concat_rows(std::span<const Var> parts) {
    require(!parts.empty(), ErrorKind::InvalidArgument, "concat_rows of nothing");
    const std::size_t cols = value(parts[0]).cols();
    std::vector<double> d;
    bool ng = false;
    for (Var p : parts) {
        check(p);
        require(value(p).cols() == cols, ErrorKind::Shape,
                "concat_rows column mismatch: " + value(parts[0]).shape_str() + " vs " + value(p).shape_str());
        d.insert(d.end(), value(p).data().begin(), value(p).data().end());
        ng = ng || needs(p);
    }
    const std::size_t rows = d.size() / (cols == 0 ? 1 : cols);
    std::vector<Var> ps(parts.begin(), parts.end());
    return push(Tensor2(rows, cols, std::move(d)), ng, [ps = std::move(ps)](Tape& t, const Tensor2& g) {
        std::size_t off = 0;
        for (Var p : ps) {
            const std::size_t n = t.value(p).size();
            if (t.needs(p)) {
                Tensor2& gp = t.grad_buf(p);
                for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
            }
            off += n;
        }
    });
}

Var Tape::transpose(Var a) {
    check(a);
    return push(svq::transpose(value(a)), needs(a), [a](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
    });
}

Var Tape::softmax_rows(Var a) {
    check(a);
    const Var self{nodes_.size()};
    return push(svq::softmax_rows(value(a)), needs(a), [a, self](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        const Tensor2& y = t.value(self);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
        }
    });
}

Var Tape::gather_rows(Var table, std::vector<std::size_t> rows) {
    check(table);
    const Tensor2& tv = value(table);
    Tensor2 out(rows.size(), tv.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] < tv.rows(), ErrorKind::InvalidArgument,
                "gather row " + std::to_string(rows[i]) + " out of range for " + tv.shape_str());
        for (std::size_t j = 0; j < tv.cols(); ++j) out(i, j) = tv(rows[i], j);
    }
    return push(std::move(out), needs(table), [table, r = std::move(rows)](Tape& t, const Tensor2& g) {
        Tensor2& gt = t.grad_buf(table);
        for (std::size_t i = 0; i < r.size(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) gt(r[i], j) += g(i, j);
    });
}

Var Tape::sum(Var a) {
    check(a);
    double s = 0.0;
    for (double x : value(a).data()) s += x;
    return push(Tensor2(1, 1, s), needs(a), [a](Tape& t, const Tensor2& g) {
        Tensor2& ga = t.grad_buf(a);
        for (double& x : ga.data()) x += g[0];
    });
}

Var Tape::masked_mse(Var pred, const Tensor2& target, const Tensor2& mask) {
    check(pred);
    const Tensor2& pv = value(pred);
    same_shape(pv, target, "masked_mse target");
    same_shape(pv, mask, "masked_mse mask");
    double weight = 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double d = pv[i] - target[i];
        s += mask[i] * d * d;
        weight += mask[i];
    }
    require(weight > 0.0, ErrorKind::InvalidArgument, "masked_mse with an all-zero mask");
    return push(Tensor2(1, 1, s / weight), needs(pred), [pred, target, mask, weight](Tape& t, const Tensor2& g) {
        Tensor2& gp = t.grad_buf(pred);
        const Tensor2& p = t.value(pred);
        const double k = 2.0 * g[0] / weight;
        for (std::size_t i = 0; i < p.size(); ++i) gp[i] += k * mask[i] * (p[i] - target[i]);
    });
}

Var Tape::cross_entropy(Var logits, const std::vector<std::size_t>& targets) {
    check(logits);
    const Tensor2& lv = value(logits);
    require(targets.size() == lv.rows(), ErrorKind::Shape,
            "cross_entropy expects one target per row of " + lv.shape_str());
    Tensor2 probs = svq::softmax_rows(lv);
    double loss = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        require(targets[i] < lv.cols(), ErrorKind::InvalidArgument,
                "cross_entropy target " + std::to_string(targets[i]) + " out of range for " + lv.shape_str());
        loss -= std::log(probs(i, targets[i]));
    }
    return push(Tensor2(1, 1, loss), needs(logits),
                [logits, targets, probs = std::move(probs)](Tape& t, const Tensor2& g) {
                    Tensor2& gl = t.grad_buf(logits);
                    for (std::size_t i = 0; i < probs.rows(); ++i)
                        for (std::size_t j = 0; j < probs.cols(); ++j)
                            gl(i, j) += g[0] * (probs(i, j) - (j == targets[i] ? 1.0 : 0.0));
                });
}

Var Tape::stop_gradient(Var a) {
    check(a);
    return constant(value(a));
}

Var Tape::straight_through(Var encoded, Var quantized) {
    check(encoded);
    check(quantized);
    same_shape(value(encoded), value(quantized), "straight_through");
    return push(value(quantized), needs(encoded), [encoded](Tape& t, const Tensor2& g) {
        Tensor2& ge = t.grad_buf(encoded);
        for (std::size_t i = 0; i < g.size(); ++i) ge[i] += g[i];
    });
}

}  // namespace svq
