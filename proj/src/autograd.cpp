#include "anomap/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace anomap {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Graph::NodeId Graph::push(Tensor value, std::function<void(Graph&, NodeId)> back) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back)});
    return static_cast<NodeId>(nodes_.size() - 1);
}

Graph::NodeId Graph::check(NodeId id) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
        throw std::invalid_argument("graph: node id out of range");
    return id;
}

Graph::NodeId Graph::leaf(Tensor value) { return push(std::move(value), nullptr); }

Graph::NodeId Graph::conv2d(NodeId x, NodeId kernel, NodeId bias) {
    const Tensor& in = value(x);
    const Tensor& w = value(kernel);
    const Tensor& b = value(bias);
    require(in.rank() == 3, "conv2d: input must be {C,H,W}, got " + shape_str(in.shape));
    require(w.rank() == 4, "conv2d: kernel must be {O,I,kh,kw}, got " + shape_str(w.shape));
    require(b.rank() == 1 && b.dim(0) == w.dim(0),
            "conv2d: bias shape " + shape_str(b.shape) + " does not match kernel " + shape_str(w.shape));
    require(in.dim(0) == w.dim(1),
            "conv2d: input shape " + shape_str(in.shape) + " does not match kernel shape " + shape_str(w.shape));
    require(w.dim(2) % 2 == 1 && w.dim(3) % 2 == 1,
            "conv2d: kernel spatial size must be odd for same padding, got " + shape_str(w.shape));

    const int ci = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int ph = kh / 2, pw = kw / 2;

    Tensor out({co, h, wd});
    for (int o = 0; o < co; ++o) {
        double* outp = out.data.data() + static_cast<std::size_t>(o) * h * wd;
        std::fill(outp, outp + static_cast<std::size_t>(h) * wd, b.data[o]);
        for (int i = 0; i < ci; ++i) {
            const double* inp = in.data.data() + static_cast<std::size_t>(i) * h * wd;
            for (int ky = 0; ky < kh; ++ky) {
                int dy = ky - ph;
                for (int kx = 0; kx < kw; ++kx) {
                    int dx = kx - pw;
                    double wv = w.data[((static_cast<std::size_t>(o) * ci + i) * kh + ky) * kw + kx];
                    int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                    int x0 = std::max(0, -dx), x1 = std::min(wd, wd - dx);
                    for (int y = y0; y < y1; ++y) {
                        const double* src = inp + static_cast<std::size_t>(y + dy) * wd + dx;
                        double* dst = outp + static_cast<std::size_t>(y) * wd;
                        for (int px = x0; px < x1; ++px) dst[px] += wv * src[px];
                    }
                }
            }
        }
    }

    return push(std::move(out), [x, kernel, bias, ci, co, h, wd, kh, kw, ph, pw](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        const Tensor& in = g.value(x);
        const Tensor& w = g.value(kernel);
        Tensor& gin = g.grad_mut(x);
        Tensor& gw = g.grad_mut(kernel);
        Tensor& gb = g.grad_mut(bias);

        for (int o = 0; o < co; ++o) {
            const double* gp = gout.data.data() + static_cast<std::size_t>(o) * h * wd;
            double acc = 0.0;
            for (std::size_t k = 0; k < static_cast<std::size_t>(h) * wd; ++k) acc += gp[k];
            gb.data[o] += acc;
            for (int i = 0; i < ci; ++i) {
                const double* inp = in.data.data() + static_cast<std::size_t>(i) * h * wd;
                double* ginp = gin.data.data() + static_cast<std::size_t>(i) * h * wd;
                for (int ky = 0; ky < kh; ++ky) {
                    int dy = ky - ph;
                    for (int kx = 0; kx < kw; ++kx) {
                        int dx = kx - pw;
                        std::size_t widx = ((static_cast<std::size_t>(o) * ci + i) * kh + ky) * kw + kx;
                        double wv = w.data[widx];
                        int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                        int x0 = std::max(0, -dx), x1 = std::min(wd, wd - dx);
                        double wacc = 0.0;
                        for (int y = y0; y < y1; ++y) {
                            const double* grow = gp + static_cast<std::size_t>(y) * wd;
                            const double* irow = inp + static_cast<std::size_t>(y + dy) * wd + dx;
                            double* gi = ginp + static_cast<std::size_t>(y + dy) * wd + dx;
                            for (int px = x0; px < x1; ++px) {
                                gi[px] += wv * grow[px];
                                wacc += grow[px] * irow[px];
                            }
                        }
                        gw.data[widx] += wacc;
                    }
                }
            }
        }
    });
}

Graph::NodeId Graph::maxpool2x2(NodeId x) {
    const Tensor& in = value(x);
    require(in.rank() == 3, "maxpool2x2: input must be {C,H,W}, got " + shape_str(in.shape));
    require(in.dim(1) % 2 == 0 && in.dim(2) % 2 == 0,
            "maxpool2x2: spatial dims must be even, got " + shape_str(in.shape));
    const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int oh = h / 2, ow = w / 2;

    Tensor out({c, oh, ow});
    std::vector<std::size_t> argmax(out.size());
    for (int ch = 0; ch < c; ++ch) {
        const double* inp = in.data.data() + static_cast<std::size_t>(ch) * h * w;
        for (int y = 0; y < oh; ++y) {
            for (int px = 0; px < ow; ++px) {
                std::size_t base = static_cast<std::size_t>(2 * y) * w + 2 * px;
                std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
                std::size_t best = cand[0];
                for (int k = 1; k < 4; ++k)
                    if (inp[cand[k]] > inp[best]) best = cand[k];
                std::size_t oidx = (static_cast<std::size_t>(ch) * oh + y) * ow + px;
                out.data[oidx] = inp[best];
                argmax[oidx] = static_cast<std::size_t>(ch) * h * w + best;
            }
        }
    }

    return push(std::move(out), [x, argmax = std::move(argmax)](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        Tensor& gin = g.grad_mut(x);
        for (std::size_t i = 0; i < gout.size(); ++i) gin.data[argmax[i]] += gout.data[i];
    });
}

Graph::NodeId Graph::upsample2x2(NodeId x) {
    const Tensor& in = value(x);
    require(in.rank() == 3, "upsample2x2: input must be {C,H,W}, got " + shape_str(in.shape));
    const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    Tensor out({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch) {
        const double* inp = in.data.data() + static_cast<std::size_t>(ch) * h * w;
        double* outp = out.data.data() + static_cast<std::size_t>(ch) * 4 * h * w;
        for (int y = 0; y < h; ++y) {
            for (int px = 0; px < w; ++px) {
                double v = inp[static_cast<std::size_t>(y) * w + px];
                std::size_t o = static_cast<std::size_t>(2 * y) * (2 * w) + 2 * px;
                outp[o] = v;
                outp[o + 1] = v;
                outp[o + 2 * w] = v;
                outp[o + 2 * w + 1] = v;
            }
        }
    }
    return push(std::move(out), [x, c, h, w](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        Tensor& gin = g.grad_mut(x);
        for (int ch = 0; ch < c; ++ch) {
            const double* gp = gout.data.data() + static_cast<std::size_t>(ch) * 4 * h * w;
            double* gi = gin.data.data() + static_cast<std::size_t>(ch) * h * w;
            for (int y = 0; y < h; ++y) {
                for (int px = 0; px < w; ++px) {
                    std::size_t o = static_cast<std::size_t>(2 * y) * (2 * w) + 2 * px;
                    gi[static_cast<std::size_t>(y) * w + px] +=
                        gp[o] + gp[o + 1] + gp[o + 2 * w] + gp[o + 2 * w + 1];
                }
            }
        }
    });
}

Graph::NodeId Graph::relu(NodeId x) {
    Tensor out = value(x);
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return push(std::move(out), [x](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        const Tensor& in = g.value(x);
        Tensor& gin = g.grad_mut(x);
        for (std::size_t i = 0; i < gout.size(); ++i)
            if (in.data[i] > 0.0) gin.data[i] += gout.data[i];
    });
}

Graph::NodeId Graph::sigmoid(NodeId x) {
    Tensor out = value(x);
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return push(std::move(out), [x](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        const Tensor& s = g.value(self);
        Tensor& gin = g.grad_mut(x);
        for (std::size_t i = 0; i < gout.size(); ++i)
            gin.data[i] += gout.data[i] * s.data[i] * (1.0 - s.data[i]);
    });
}

Graph::NodeId Graph::add(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require(ta.same_shape(tb), "add: shape " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += tb.data[i];
    return push(std::move(out), [a, b](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        Tensor& ga = g.grad_mut(a);
        Tensor& gb = g.grad_mut(b);
        for (std::size_t i = 0; i < gout.size(); ++i) {
            ga.data[i] += gout.data[i];
            gb.data[i] += gout.data[i];
        }
    });
}

Graph::NodeId Graph::sub(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require(ta.same_shape(tb), "sub: shape " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= tb.data[i];
    return push(std::move(out), [a, b](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        Tensor& ga = g.grad_mut(a);
        Tensor& gb = g.grad_mut(b);
        for (std::size_t i = 0; i < gout.size(); ++i) {
            ga.data[i] += gout.data[i];
            gb.data[i] -= gout.data[i];
        }
    });
}

Graph::NodeId Graph::mul(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require(ta.same_shape(tb), "mul: shape " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= tb.data[i];
    return push(std::move(out), [a, b](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        const Tensor& ta = g.value(a);
        const Tensor& tb = g.value(b);
        // a == b is fine: both contributions accumulate into the same grad.
        Tensor& ga = g.grad_mut(a);
        for (std::size_t i = 0; i < gout.size(); ++i) ga.data[i] += gout.data[i] * tb.data[i];
        Tensor& gb = g.grad_mut(b);
        for (std::size_t i = 0; i < gout.size(); ++i) gb.data[i] += gout.data[i] * ta.data[i];
    });
}

Graph::NodeId Graph::div(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require(ta.same_shape(tb), "div: shape " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] /= tb.data[i];
    return push(std::move(out), [a, b](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        const Tensor& ta = g.value(a);
        const Tensor& tb = g.value(b);
        Tensor& ga = g.grad_mut(a);
        for (std::size_t i = 0; i < gout.size(); ++i) ga.data[i] += gout.data[i] / tb.data[i];
        Tensor& gb = g.grad_mut(b);
        for (std::size_t i = 0; i < gout.size(); ++i)
            gb.data[i] -= gout.data[i] * ta.data[i] / (tb.data[i] * tb.data[i]);
    });
}

Graph::NodeId Graph::affine(NodeId x, double scale, double shift) {
    Tensor out = value(x);
    for (double& v : out.data) v = scale * v + shift;
    return push(std::move(out), [x, scale](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        Tensor& gin = g.grad_mut(x);
        for (std::size_t i = 0; i < gout.size(); ++i) gin.data[i] += scale * gout.data[i];
    });
}

Graph::NodeId Graph::reshape(NodeId x, std::vector<int> new_shape) {
    Tensor out = value(x);
    std::size_t n = 1;
    for (int d : new_shape) n *= static_cast<std::size_t>(d);
    require(n == out.size(), "reshape: element count mismatch " + shape_str(out.shape) +
                                 " -> " + shape_str(new_shape));
    out.shape = std::move(new_shape);
    return push(std::move(out), [x](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        Tensor& gin = g.grad_mut(x);
        for (std::size_t i = 0; i < gout.size(); ++i) gin.data[i] += gout.data[i];
    });
}

Graph::NodeId Graph::row_conv_valid(NodeId x, std::vector<double> kernel) {
    const Tensor& in = value(x);
    require(in.rank() == 2, "row_conv_valid: input must be {H,W}, got " + shape_str(in.shape));
    const int h = in.dim(0), w = in.dim(1);
    const int k = static_cast<int>(kernel.size());
    require(k >= 1 && w >= k, "row_conv_valid: kernel longer than row");
    const int ow = w - k + 1;
    Tensor out({h, ow});
    for (int y = 0; y < h; ++y) {
        const double* row = in.data.data() + static_cast<std::size_t>(y) * w;
        double* orow = out.data.data() + static_cast<std::size_t>(y) * ow;
        for (int i = 0; i < k; ++i) {
            double kv = kernel[static_cast<std::size_t>(i)];
            for (int px = 0; px < ow; ++px) orow[px] += kv * row[px + i];
        }
    }
    return push(std::move(out), [x, kernel = std::move(kernel), h, w, ow](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        Tensor& gin = g.grad_mut(x);
        const int k = static_cast<int>(kernel.size());
        for (int y = 0; y < h; ++y) {
            const double* grow = gout.data.data() + static_cast<std::size_t>(y) * ow;
            double* girow = gin.data.data() + static_cast<std::size_t>(y) * w;
            for (int i = 0; i < k; ++i) {
                double kv = kernel[static_cast<std::size_t>(i)];
                for (int px = 0; px < ow; ++px) girow[px + i] += kv * grow[px];
            }
        }
    });
}

Graph::NodeId Graph::col_conv_valid(NodeId x, std::vector<double> kernel) {
    const Tensor& in = value(x);
    require(in.rank() == 2, "col_conv_valid: input must be {H,W}, got " + shape_str(in.shape));
    const int h = in.dim(0), w = in.dim(1);
    const int k = static_cast<int>(kernel.size());
    require(k >= 1 && h >= k, "col_conv_valid: kernel longer than column");
    const int oh = h - k + 1;
    Tensor out({oh, w});
    for (int i = 0; i < k; ++i) {
        double kv = kernel[static_cast<std::size_t>(i)];
        for (int y = 0; y < oh; ++y) {
            const double* row = in.data.data() + static_cast<std::size_t>(y + i) * w;
            double* orow = out.data.data() + static_cast<std::size_t>(y) * w;
            for (int px = 0; px < w; ++px) orow[px] += kv * row[px];
        }
    }
    return push(std::move(out), [x, kernel = std::move(kernel), h, w, oh](Graph& g, NodeId self) {
        const Tensor& gout = g.grad(self);
        Tensor& gin = g.grad_mut(x);
        const int k = static_cast<int>(kernel.size());
        for (int i = 0; i < k; ++i) {
            double kv = kernel[static_cast<std::size_t>(i)];
            for (int y = 0; y < oh; ++y) {
                const double* grow = gout.data.data() + static_cast<std::size_t>(y) * w;
                double* girow = gin.data.data() + static_cast<std::size_t>(y + i) * w;
                for (int px = 0; px < w; ++px) girow[px] += kv * grow[px];
            }
        }
    });
}

Graph::NodeId Graph::sum_all(NodeId x) {
    const Tensor& in = value(x);
    double s = 0.0;
    for (double v : in.data) s += v;
    Tensor out({1});
    out.data[0] = s;
    return push(std::move(out), [x](Graph& g, NodeId self) {
        double go = g.grad(self).data[0];
        Tensor& gin = g.grad_mut(x);
        for (double& v : gin.data) v += go;
    });
}

Graph::NodeId Graph::mean_all(NodeId x) {
    const Tensor& in = value(x);
    double s = 0.0;
    for (double v : in.data) s += v;
    const double n = static_cast<double>(in.size());
    Tensor out({1});
    out.data[0] = s / n;
    return push(std::move(out), [x, n](Graph& g, NodeId self) {
        double go = g.grad(self).data[0] / n;
        Tensor& gin = g.grad_mut(x);
        for (double& v : gin.data) v += go;
    });
}

void Graph::backward(NodeId loss) {
    check(loss);
    require(nodes_[loss].value.size() == 1, "backward: loss must be a scalar");
    for (NodeId i = 0; i <= loss; ++i) nodes_[i].grad = Tensor(nodes_[i].value.shape);
    nodes_[loss].grad.data[0] = 1.0;
    for (NodeId i = loss; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back(*this, i);
}

}  // namespace anomap
