#include "tplab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "tplab/common.hpp"

namespace tplab::ad {

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> push_grad;
    bool requires_grad = false;
    bool leaf = true;

    std::vector<double>& ensure_grad()
    {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

}  // namespace detail

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

struct Access {
    static const NodePtr& node(const Tensor& t)
    {
        if (!t.node_) throw contract_error("use of an undefined tensor");
        return t.node_;
    }
    static Tensor wrap(NodePtr n) { return Tensor(std::move(n)); }
};

namespace {

NodePtr make_node(Shape shape, std::vector<double> value)
{
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    return n;
}

/// Creates an interior node whose gradient closure is only kept when some
/// parent needs a gradient.
Tensor make_op(Shape shape, std::vector<double> value, std::vector<NodePtr> parents,
               std::function<void(Node&)> push)
{
    auto n = make_node(std::move(shape), std::move(value));
    n->leaf = false;
    n->requires_grad = std::any_of(parents.begin(), parents.end(),
                                   [](const NodePtr& p) { return p->requires_grad; });
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->push_grad = std::move(push);
    }
    return Access::wrap(std::move(n));
}

void require(bool ok, const std::string& what)
{
    if (!ok) throw contract_error(what);
}

}  // namespace

std::size_t numel(const Shape& shape)
{
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::constant(Shape shape, std::vector<double> values)
{
    require(numel(shape) == values.size(), "tensor value count does not match shape " + shape_string(shape));
    return Tensor(make_node(std::move(shape), std::move(values)));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values)
{
    Tensor t = constant(std::move(shape), std::move(values));
    t.node_->requires_grad = true;
    return t;
}

Tensor Tensor::zeros(Shape shape)
{
    const auto n = numel(shape);
    return constant(std::move(shape), std::vector<double>(n, 0.0));
}

const Shape& Tensor::shape() const { return Access::node(*this)->shape; }
std::size_t Tensor::size() const { return Access::node(*this)->value.size(); }
std::span<const double> Tensor::values() const { return Access::node(*this)->value; }

double Tensor::item() const
{
    require(size() == 1, "item() on a tensor of shape " + shape_string(shape()));
    return node_->value[0];
}

std::span<double> Tensor::mutable_values()
{
    require(Access::node(*this)->leaf, "only leaf tensors may be mutated");
    return node_->value;
}

bool Tensor::requires_grad() const { return Access::node(*this)->requires_grad; }
bool Tensor::is_leaf() const { return Access::node(*this)->leaf; }
bool Tensor::has_grad() const { return !Access::node(*this)->grad.empty(); }
std::span<const double> Tensor::grad() const { return Access::node(*this)->grad; }
void Tensor::zero_grad() { Access::node(*this)->grad.clear(); }

std::size_t LstmCellParams::input_dim() const { return w_input.shape().at(1); }
std::size_t LstmCellParams::hidden_dim() const { return w_hidden.shape().at(1); }

// ---- operators ---------------------------------------------------------------

Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias)
{
    const auto& ws = weight.shape();
    require(ws.size() == 2 && x.shape().size() == 1 && bias.shape().size() == 1 &&
                ws[1] == x.size() && ws[0] == bias.size(),
            "affine: shape mismatch x" + shape_string(x.shape()) + " W" + shape_string(ws) +
                " b" + shape_string(bias.shape()));
    const std::size_t out = ws[0], in = ws[1];
    const auto xv = x.values();
    const auto wv = weight.values();
    const auto bv = bias.values();
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
        const double* row = wv.data() + o * in;
        double acc = bv[o];
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * xv[i];
        y[o] = acc;
    }
    auto xn = Access::node(x), wn = Access::node(weight), bn = Access::node(bias);
    return make_op({out}, std::move(y), {xn, wn, bn}, [xn, wn, bn, out, in](Node& self) {
        const auto& g = self.grad;
        if (wn->requires_grad) {
            auto& gw = wn->ensure_grad();
            for (std::size_t o = 0; o < out; ++o) {
                double* row = gw.data() + o * in;
                for (std::size_t i = 0; i < in; ++i) row[i] += g[o] * xn->value[i];
            }
        }
        if (bn->requires_grad) {
            auto& gb = bn->ensure_grad();
            for (std::size_t o = 0; o < out; ++o) gb[o] += g[o];
        }
        if (xn->requires_grad) {
            auto& gx = xn->ensure_grad();
            for (std::size_t o = 0; o < out; ++o) {
                const double* row = wn->value.data() + o * in;
                for (std::size_t i = 0; i < in; ++i) gx[i] += row[i] * g[o];
            }
        }
    });
}

Tensor leaky_relu(const Tensor& x, double slope)
{
    const auto xv = x.values();
    std::vector<double> y(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) y[i] = xv[i] >= 0.0 ? xv[i] : slope * xv[i];
    auto xn = Access::node(x);
    return make_op(x.shape(), std::move(y), {xn}, [xn, slope](Node& self) {
        auto& gx = xn->ensure_grad();
        for (std::size_t i = 0; i < gx.size(); ++i) {
            gx[i] += xn->value[i] >= 0.0 ? self.grad[i] : slope * self.grad[i];
        }
    });
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

LstmState lstm_cell(const Tensor& x, const LstmState& state, const LstmCellParams& p)
{
    const auto& wis = p.w_input.shape();
    const auto& whs = p.w_hidden.shape();
    require(wis.size() == 2 && whs.size() == 2 && wis[0] % 4 == 0, "lstm_cell: malformed weights");
    const std::size_t hid = wis[0] / 4, in = wis[1];
    require(whs[0] == 4 * hid && whs[1] == hid && p.bias.size() == 4 * hid && x.size() == in &&
                state.h.size() == hid && state.c.size() == hid &&
                x.shape().size() == 1 && state.h.shape().size() == 1 && state.c.shape().size() == 1,
            "lstm_cell: shape mismatch (D=" + std::to_string(in) + ", H=" + std::to_string(hid) + ")");

    const auto xv = x.values(), hv = state.h.values(), cv = state.c.values();
    const auto wi = p.w_input.values(), wh = p.w_hidden.values(), bv = p.bias.values();

    // gates holds post-activation i, f, g, o; out holds [h' ; c'].
    auto gates = std::make_shared<std::vector<double>>(4 * hid);
    auto tanh_c = std::make_shared<std::vector<double>>(hid);
    std::vector<double> out(2 * hid);
    for (std::size_t r = 0; r < 4 * hid; ++r) {
        double z = bv[r];
        const double* wr = wi.data() + r * in;
        for (std::size_t k = 0; k < in; ++k) z += wr[k] * xv[k];
        const double* hr = wh.data() + r * hid;
        for (std::size_t k = 0; k < hid; ++k) z += hr[k] * hv[k];
        (*gates)[r] = (r / hid == 2) ? std::tanh(z) : sigmoid(z);
    }
    for (std::size_t j = 0; j < hid; ++j) {
        const double ig = (*gates)[j], fg = (*gates)[hid + j], gg = (*gates)[2 * hid + j],
                     og = (*gates)[3 * hid + j];
        const double c_new = fg * cv[j] + ig * gg;
        (*tanh_c)[j] = std::tanh(c_new);
        out[j] = og * (*tanh_c)[j];
        out[hid + j] = c_new;
    }

    auto xn = Access::node(x), hn = Access::node(state.h), cn = Access::node(state.c);
    auto win = Access::node(p.w_input), whn = Access::node(p.w_hidden), bn = Access::node(p.bias);
    Tensor joint = make_op({2 * hid}, std::move(out), {xn, hn, cn, win, whn, bn},
                           [=](Node& self) {
        const auto& g = self.grad;
        std::vector<double> dz(4 * hid);
        for (std::size_t j = 0; j < hid; ++j) {
            const double ig = (*gates)[j], fg = (*gates)[hid + j], gg = (*gates)[2 * hid + j],
                         og = (*gates)[3 * hid + j];
            const double tc = (*tanh_c)[j];
            const double dh = g[j];
            const double dc = g[hid + j] + dh * og * (1.0 - tc * tc);
            dz[j] = dc * gg * ig * (1.0 - ig);
            dz[hid + j] = dc * cn->value[j] * fg * (1.0 - fg);
            dz[2 * hid + j] = dc * ig * (1.0 - gg * gg);
            dz[3 * hid + j] = dh * tc * og * (1.0 - og);
            if (cn->requires_grad) cn->ensure_grad()[j] += dc * fg;
        }
        if (bn->requires_grad) {
            auto& gb = bn->ensure_grad();
            for (std::size_t r = 0; r < 4 * hid; ++r) gb[r] += dz[r];
        }
        if (win->requires_grad) {
            auto& gw = win->ensure_grad();
            for (std::size_t r = 0; r < 4 * hid; ++r) {
                double* row = gw.data() + r * in;
                for (std::size_t k = 0; k < in; ++k) row[k] += dz[r] * xn->value[k];
            }
        }
        if (whn->requires_grad) {
            auto& gw = whn->ensure_grad();
            for (std::size_t r = 0; r < 4 * hid; ++r) {
                double* row = gw.data() + r * hid;
                for (std::size_t k = 0; k < hid; ++k) row[k] += dz[r] * hn->value[k];
            }
        }
        if (xn->requires_grad) {
            auto& gx = xn->ensure_grad();
            for (std::size_t r = 0; r < 4 * hid; ++r) {
                const double* row = win->value.data() + r * in;
                for (std::size_t k = 0; k < in; ++k) gx[k] += row[k] * dz[r];
            }
        }
        if (hn->requires_grad) {
            auto& gh = hn->ensure_grad();
            for (std::size_t r = 0; r < 4 * hid; ++r) {
                const double* row = whn->value.data() + r * hid;
                for (std::size_t k = 0; k < hid; ++k) gh[k] += row[k] * dz[r];
            }
        }
    });
    return {slice(joint, 0, hid), slice(joint, hid, hid)};
}

Tensor conv2d_valid(const Tensor& x, const Tensor& kernel, const Tensor& bias)
{
    const auto& xs = x.shape();
    const auto& ks = kernel.shape();
    require(xs.size() == 3 && ks.size() == 4 && bias.shape().size() == 1,
            "conv2d_valid: expected x[Cin x R x S], k[Cout x Cin x KH x KW], b[Cout]");
    const std::size_t cin = xs[0], rows = xs[1], cols = xs[2];
    const std::size_t cout = ks[0], kh = ks[2], kw = ks[3];
    require(ks[1] == cin && bias.size() == cout, "conv2d_valid: channel mismatch x" + shape_string(xs) +
                                                     " k" + shape_string(ks));
    require(rows >= kh && cols >= kw && rows >= 2 && cols >= 2,
            "conv2d_valid: spatial dims " + shape_string(xs) + " smaller than kernel");
    const std::size_t orows = rows - kh + 1, ocols = cols - kw + 1;

    const auto xv = x.values(), kv = kernel.values(), bv = bias.values();
    auto xi = [=](std::size_t c, std::size_t r, std::size_t s) { return (c * rows + r) * cols + s; };
    auto ki = [=](std::size_t o, std::size_t c, std::size_t a, std::size_t b) {
        return ((o * cin + c) * kh + a) * kw + b;
    };
    auto yi = [=](std::size_t o, std::size_t r, std::size_t s) { return (o * orows + r) * ocols + s; };

    std::vector<double> y(cout * orows * ocols);
    for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t r = 0; r < orows; ++r)
            for (std::size_t s = 0; s < ocols; ++s) {
                double acc = bv[o];
                for (std::size_t c = 0; c < cin; ++c)
                    for (std::size_t a = 0; a < kh; ++a)
                        for (std::size_t b = 0; b < kw; ++b) acc += kv[ki(o, c, a, b)] * xv[xi(c, r + a, s + b)];
                y[yi(o, r, s)] = acc;
            }

    auto xn = Access::node(x), kn = Access::node(kernel), bn = Access::node(bias);
    return make_op({cout, orows, ocols}, std::move(y), {xn, kn, bn}, [=](Node& self) {
        const auto& g = self.grad;
        if (bn->requires_grad) {
            auto& gb = bn->ensure_grad();
            for (std::size_t o = 0; o < cout; ++o)
                for (std::size_t r = 0; r < orows; ++r)
                    for (std::size_t s = 0; s < ocols; ++s) gb[o] += g[yi(o, r, s)];
        }
        std::vector<double>* gk = kn->requires_grad ? &kn->ensure_grad() : nullptr;
        std::vector<double>* gx = xn->requires_grad ? &xn->ensure_grad() : nullptr;
        for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t r = 0; r < orows; ++r)
                for (std::size_t s = 0; s < ocols; ++s) {
                    const double go = g[yi(o, r, s)];
                    for (std::size_t c = 0; c < cin; ++c)
                        for (std::size_t a = 0; a < kh; ++a)
                            for (std::size_t b = 0; b < kw; ++b) {
                                if (gk) (*gk)[ki(o, c, a, b)] += go * xn->value[xi(c, r + a, s + b)];
                                if (gx) (*gx)[xi(c, r + a, s + b)] += go * kn->value[ki(o, c, a, b)];
                            }
                }
    });
}

Tensor concat(std::span<const Tensor> xs)
{
    require(!xs.empty(), "concat: empty input");
    const Shape& first = xs[0].shape();
    require(!first.empty(), "concat: scalar inputs have no leading axis");
    Shape out_shape = first;
    out_shape[0] = 0;
    std::vector<double> y;
    std::vector<NodePtr> parents;
    for (const auto& t : xs) {
        const Shape& s = t.shape();
        require(s.size() == first.size() && std::equal(s.begin() + 1, s.end(), first.begin() + 1),
                "concat: trailing dims differ " + shape_string(first) + " vs " + shape_string(s));
        out_shape[0] += s[0];
        y.insert(y.end(), t.values().begin(), t.values().end());
        parents.push_back(Access::node(t));
    }
    auto captured = parents;
    return make_op(std::move(out_shape), std::move(y), std::move(parents), [captured](Node& self) {
        std::size_t off = 0;
        for (const auto& p : captured) {
            if (p->requires_grad) {
                auto& gp = p->ensure_grad();
                for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[off + i];
            }
            off += p->value.size();
        }
    });
}

Tensor concat(std::initializer_list<Tensor> xs)
{
    return concat(std::span<const Tensor>(xs.begin(), xs.size()));
}

Tensor reshape(const Tensor& x, Shape shape)
{
    require(numel(shape) == x.size(),
            "reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape) + " changes element count");
    auto xn = Access::node(x);
    std::vector<double> y(x.values().begin(), x.values().end());
    return make_op(std::move(shape), std::move(y), {xn}, [xn](Node& self) {
        auto& gx = xn->ensure_grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    });
}

Tensor transpose(const Tensor& x)
{
    const auto& s = x.shape();
    require(s.size() == 2, "transpose: expected a matrix, got " + shape_string(s));
    const std::size_t rows = s[0], cols = s[1];
    const auto xv = x.values();
    std::vector<double> y(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) y[c * rows + r] = xv[r * cols + c];
    auto xn = Access::node(x);
    return make_op({cols, rows}, std::move(y), {xn}, [xn, rows, cols](Node& self) {
        auto& gx = xn->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += self.grad[c * rows + r];
    });
}

Tensor slice(const Tensor& x, std::size_t offset, std::size_t length)
{
    require(offset + length <= x.size(), "slice: range exceeds tensor size");
    const auto xv = x.values();
    std::vector<double> y(xv.begin() + static_cast<std::ptrdiff_t>(offset),
                          xv.begin() + static_cast<std::ptrdiff_t>(offset + length));
    auto xn = Access::node(x);
    return make_op({length}, std::move(y), {xn}, [xn, offset](Node& self) {
        auto& gx = xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) gx[offset + i] += self.grad[i];
    });
}

Tensor add(const Tensor& a, const Tensor& b)
{
    require(a.shape() == b.shape(), "add: shape mismatch " + shape_string(a.shape()) + " vs " +
                                        shape_string(b.shape()));
    const auto av = a.values(), bv = b.values();
    std::vector<double> y(av.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
    auto an = Access::node(a), bn = Access::node(b);
    return make_op(a.shape(), std::move(y), {an, bn}, [an, bn](Node& self) {
        for (const auto& p : {an, bn}) {
            if (!p->requires_grad) continue;
            auto& gp = p->ensure_grad();
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[i];
        }
    });
}

Tensor scale(const Tensor& x, double factor)
{
    const auto xv = x.values();
    std::vector<double> y(xv.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = factor * xv[i];
    auto xn = Access::node(x);
    return make_op(x.shape(), std::move(y), {xn}, [xn, factor](Node& self) {
        auto& gx = xn->ensure_grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * self.grad[i];
    });
}

Tensor sum(const Tensor& x)
{
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    auto xn = Access::node(x);
    return make_op({}, {acc}, {xn}, [xn](Node& self) {
        auto& gx = xn->ensure_grad();
        for (auto& g : gx) g += self.grad[0];
    });
}

Tensor mean(std::span<const Tensor> xs)
{
    require(!xs.empty(), "mean: empty input");
    const Shape& s = xs[0].shape();
    std::vector<double> y(xs[0].size(), 0.0);
    std::vector<NodePtr> parents;
    for (const auto& t : xs) {
        require(t.shape() == s, "mean: shape mismatch");
        const auto tv = t.values();
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += tv[i];
        parents.push_back(Access::node(t));
    }
    const double inv = 1.0 / static_cast<double>(xs.size());
    for (auto& v : y) v *= inv;
    auto captured = parents;
    return make_op(s, std::move(y), std::move(parents), [captured, inv](Node& self) {
        for (const auto& p : captured) {
            if (!p->requires_grad) continue;
            auto& gp = p->ensure_grad();
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += inv * self.grad[i];
        }
    });
}

Tensor weighted_mse(const Tensor& pred, const Tensor& truth)
{
    require(pred.shape() == truth.shape() && pred.shape().size() == 2 && pred.shape()[1] == 2 &&
                pred.shape()[0] > 0,
            "weighted_mse: expected matching [T x 2] shapes, got " + shape_string(pred.shape()) + " and " +
                shape_string(truth.shape()));
    const std::size_t steps = pred.shape()[0];
    const auto pv = pred.values(), tv = truth.values();
    double acc = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        const double dx = pv[2 * t] - tv[2 * t];
        const double dy = pv[2 * t + 1] - tv[2 * t + 1];
        acc += kLateralWeight * dx * dx + kLongitudinalWeight * dy * dy;
    }
    const double inv = 1.0 / static_cast<double>(steps);
    auto pn = Access::node(pred), tn = Access::node(truth);
    return make_op({}, {acc * inv}, {pn, tn}, [pn, tn, steps, inv](Node& self) {
        const double g = self.grad[0] * inv;
        for (std::size_t t = 0; t < steps; ++t) {
            const double dx = pn->value[2 * t] - tn->value[2 * t];
            const double dy = pn->value[2 * t + 1] - tn->value[2 * t + 1];
            const double gx = 2.0 * kLateralWeight * dx * g;
            const double gy = 2.0 * kLongitudinalWeight * dy * g;
            if (pn->requires_grad) {
                auto& gp = pn->ensure_grad();
                gp[2 * t] += gx;
                gp[2 * t + 1] += gy;
            }
            if (tn->requires_grad) {
                auto& gt = tn->ensure_grad();
                gt[2 * t] -= gx;
                gt[2 * t + 1] -= gy;
            }
        }
    });
}

void backward(const Tensor& loss)
{
    const NodePtr& root = Access::node(loss);
    require(root->value.size() == 1, "backward: loss must be a scalar, got " + shape_string(root->shape));
    if (!root->requires_grad) return;

    // Iterative post-order DFS gives a topological order (parents first).
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior gradients are scratch space for this pass; leaves accumulate.
    for (Node* n : order) {
        if (!n->leaf) n->grad.assign(n->value.size(), 0.0);
    }
    root->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->push_grad) n->push_grad(*n);
    }
}

// ---- Adam ----------------------------------------------------------------------

AdamState AdamState::for_params(std::span<const Tensor> params, AdamOptions options)
{
    AdamState s;
    s.options = options;
    for (const auto& p : params) {
        s.first_moment.emplace_back(p.size(), 0.0);
        s.second_moment.emplace_back(p.size(), 0.0);
    }
    return s;
}

void adam_step(std::span<Tensor> params, AdamState& state)
{
    require(state.first_moment.size() == params.size() && state.second_moment.size() == params.size(),
            "adam_step: optimizer state does not match parameter count");
    for (std::size_t k = 0; k < params.size(); ++k) {
        require(params[k].has_grad(), "adam_step: parameter " + std::to_string(k) + " has no gradient");
        require(state.first_moment[k].size() == params[k].size() &&
                    state.second_moment[k].size() == params[k].size(),
                "adam_step: accumulator shape mismatch for parameter " + std::to_string(k));
    }
    const auto& o = state.options;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(o.beta1, t);
    const double c2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto value = params[k].mutable_values();
        const auto g = params[k].grad();
        auto& m = state.first_moment[k];
        auto& v = state.second_moment[k];
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
            v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            value[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
        }
    }
}

}  // namespace tplab::ad
