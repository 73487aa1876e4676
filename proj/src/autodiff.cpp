#include "marketcal/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "marketcal/rng.hpp"

namespace mcal::ad {

namespace {

std::atomic<std::uint64_t> g_next_param_id{1};

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

void same_tape(Var a, Var b) {
    require(a.tape && a.tape == b.tape, "vars belong to different tapes");
}

}  // namespace

ParamTensor::ParamTensor(std::string n, std::vector<std::size_t> s)
    : name(std::move(n)), shape(std::move(s)), id(g_next_param_id.fetch_add(1)) {
    std::size_t count = 1;
    for (std::size_t d : shape) count *= d;
    values.assign(count, 0.0);
    grads.assign(count, 0.0);
}

void ParamTensor::zero_grad() { std::fill(grads.begin(), grads.end(), 0.0); }

bool ParamTensor::finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    for (double g : grads)
        if (!std::isfinite(g)) return false;
    return true;
}

std::span<const double> Var::value() const { return tape->value(*this); }
std::size_t Var::size() const { return tape->value(*this).size(); }
double Var::scalar() const {
    const auto v = value();
    if (v.size() != 1) throw std::invalid_argument("Var is not a scalar");
    return v[0];
}

Var Tape::push(std::vector<double> value, Backward bw) {
    Node n;
    n.grad.assign(value.size(), 0.0);
    n.value = std::move(value);
    if (recording_) n.backward = std::move(bw);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::constant(std::span<const double> v) { return push(std::vector<double>(v.begin(), v.end())); }
Var Tape::constant(std::vector<double> v) { return push(std::move(v)); }
Var Tape::scalar(double x) { return push(std::vector<double>{x}); }

std::span<const double> Tape::value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
std::span<const double> Tape::grad(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).grad; }
std::vector<double>& Tape::grad_mut(Var v) { return nodes_[static_cast<std::size_t>(v.id)].grad; }

void Tape::note_kink(double distance) { kink_margin_ = std::min(kink_margin_, std::abs(distance)); }

void Tape::backward(Var out) {
    if (!recording_) throw std::logic_error("backward on a tape that was not recording");
    if (out.tape != this) throw std::invalid_argument("backward on a foreign Var");
    if (value(out).size() != 1) throw std::invalid_argument("backward needs a scalar output");
    for (auto& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
    nodes_[static_cast<std::size_t>(out.id)].grad[0] = 1.0;
    for (std::size_t i = static_cast<std::size_t>(out.id) + 1; i-- > 0;)
        if (nodes_[i].backward) nodes_[i].backward(*this);
}

void Tape::clear() {
    nodes_.clear();
    kink_margin_ = 1e300;
}

// ---- ops ----------------------------------------------------------------

Var affine(Var x, ParamTensor& W, ParamTensor& b) {
    Tape& t = *x.tape;
    const std::size_t out = W.rows(), in = W.cols();
    require(W.shape.size() == 2, "affine weight must be rank 2");
    require(x.size() == in, "affine input size does not match weight columns");
    require(b.size() == out, "affine bias size does not match weight rows");
    const auto xv = x.value();
    std::vector<double> y(b.values);
    for (std::size_t r = 0; r < out; ++r) {
        const double* w = &W.values[r * in];
        double acc = 0.0;
        for (std::size_t c = 0; c < in; ++c) acc += w[c] * xv[c];
        y[r] += acc;
    }
    const auto id = static_cast<std::int32_t>(t.node_count());
    return t.push(std::move(y), [x, &W, &b, out, in, id](Tape& tp) {
        const Var me{&tp, id};
        const auto g = tp.grad(me);
        const auto xv = tp.value(x);
        if (W.trainable) {
            for (std::size_t r = 0; r < out; ++r) {
                if (g[r] == 0.0) continue;
                double* gw = &W.grads[r * in];
                for (std::size_t c = 0; c < in; ++c) gw[c] += g[r] * xv[c];
            }
        }
        if (b.trainable)
            for (std::size_t r = 0; r < out; ++r) b.grads[r] += g[r];
        auto& gx = tp.grad_mut(x);
        for (std::size_t r = 0; r < out; ++r) {
            if (g[r] == 0.0) continue;
            const double* w = &W.values[r * in];
            for (std::size_t c = 0; c < in; ++c) gx[c] += g[r] * w[c];
        }
    });
}

Var affine(Var x, Var w, Var b, std::size_t out) {
    same_tape(x, w);
    same_tape(x, b);
    Tape& t = *x.tape;
    const std::size_t in = x.size();
    require(w.size() == out * in, "generated weight size mismatch");
    require(b.size() == out, "generated bias size mismatch");
    const auto xv = x.value();
    const auto wv = w.value();
    const auto bv = b.value();
    std::vector<double> y(bv.begin(), bv.end());
    for (std::size_t r = 0; r < out; ++r)
        for (std::size_t c = 0; c < in; ++c) y[r] += wv[r * in + c] * xv[c];
    const auto id = static_cast<std::int32_t>(t.node_count());
    return t.push(std::move(y), [x, w, b, out, in, id](Tape& tp) {
        const auto g = tp.grad(Var{&tp, id});
        const auto xv = tp.value(x);
        const auto wv = tp.value(w);
        auto& gw = tp.grad_mut(w);
        for (std::size_t r = 0; r < out; ++r)
            for (std::size_t c = 0; c < in; ++c) gw[r * in + c] += g[r] * xv[c];
        auto& gb = tp.grad_mut(b);
        for (std::size_t r = 0; r < out; ++r) gb[r] += g[r];
        auto& gx = tp.grad_mut(x);
        for (std::size_t r = 0; r < out; ++r)
            for (std::size_t c = 0; c < in; ++c) gx[c] += g[r] * wv[r * in + c];
    });
}

namespace {

// y_i = f(x_i), dy/dx from (x, y)
template <class F, class D>
Var unary(Var x, F f, D d) {
    Tape& t = *x.tape;
    const auto xv = x.value();
    std::vector<double> y(xv.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
    const auto id = static_cast<std::int32_t>(t.node_count());
    return t.push(std::move(y), [x, id, d](Tape& tp) {
        const Var me{&tp, id};
        const auto g = tp.grad(me);
        const auto xv = tp.value(x);
        const auto yv = tp.value(me);
        auto& gx = tp.grad_mut(x);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * d(xv[i], yv[i]);
    });
}

}  // namespace

Var relu(Var x) {
    for (double v : x.value()) x.tape->note_kink(v);
    return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                 [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var hinge(Var x) { return relu(x); }

Var sigmoid(Var x) {
    return unary(
        x,
        [](double v) {
            if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
    return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var map(Var x, std::function<double(double)> f, std::function<double(double)> df) {
    return unary(x, [f](double v) { return f(v); }, [df](double v, double) { return df(v); });
}

Var scale(Var a, double k) {
    return unary(a, [k](double v) { return k * v; }, [k](double, double) { return k; });
}

Var detach(Var a) { return a.tape->push(std::vector<double>(a.value().begin(), a.value().end())); }

namespace {

template <class F, class Da, class Db>
Var binary(Var a, Var b, F f, Da da, Db db) {
    same_tape(a, b);
    require(a.size() == b.size(), "element-wise op size mismatch");
    Tape& t = *a.tape;
    const auto av = a.value(), bv = b.value();
    std::vector<double> y(av.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(av[i], bv[i]);
    const auto id = static_cast<std::int32_t>(t.node_count());
    return t.push(std::move(y), [a, b, id, da, db](Tape& tp) {
        const auto g = tp.grad(Var{&tp, id});
        const auto av = tp.value(a), bv = tp.value(b);
        {
            auto& ga = tp.grad_mut(a);
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * da(av[i], bv[i]);
        }
        auto& gb = tp.grad_mut(b);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * db(av[i], bv[i]);
    });
}

}  // namespace

Var add(Var a, Var b) {
    return binary(a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
                  [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
    return binary(a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
                  [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
    return binary(a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
                  [](double x, double) { return x; });
}

Var concat(Var a, Var b) {
    same_tape(a, b);
    Tape& t = *a.tape;
    std::vector<double> y(a.value().begin(), a.value().end());
    y.insert(y.end(), b.value().begin(), b.value().end());
    const std::size_t na = a.size();
    const auto id = static_cast<std::int32_t>(t.node_count());
    return t.push(std::move(y), [a, b, na, id](Tape& tp) {
        const auto g = tp.grad(Var{&tp, id});
        auto& ga = tp.grad_mut(a);
        for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
        auto& gb = tp.grad_mut(b);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
    });
}

Var slice(Var a, std::size_t offset, std::size_t len) {
    require(offset + len <= a.size(), "slice out of range");
    Tape& t = *a.tape;
    const auto av = a.value();
    std::vector<double> y(av.begin() + static_cast<std::ptrdiff_t>(offset),
                          av.begin() + static_cast<std::ptrdiff_t>(offset + len));
    const auto id = static_cast<std::int32_t>(t.node_count());
    return t.push(std::move(y), [a, offset, len, id](Tape& tp) {
        const auto g = tp.grad(Var{&tp, id});
        auto& ga = tp.grad_mut(a);
        for (std::size_t i = 0; i < len; ++i) ga[offset + i] += g[i];
    });
}

Var sum(Var a) {
    Tape& t = *a.tape;
    const auto av = a.value();
    const double s = std::accumulate(av.begin(), av.end(), 0.0);
    const auto id = static_cast<std::int32_t>(t.node_count());
    return t.push(std::vector<double>{s}, [a, id](Tape& tp) {
        const double g = tp.grad(Var{&tp, id})[0];
        for (double& x : tp.grad_mut(a)) x += g;
    });
}

Var sq_norm(Var a) {
    Tape& t = *a.tape;
    double s = 0;
    for (double v : a.value()) s += v * v;
    const auto id = static_cast<std::int32_t>(t.node_count());
    return t.push(std::vector<double>{s}, [a, id](Tape& tp) {
        const double g = tp.grad(Var{&tp, id})[0];
        const auto av = tp.value(a);
        auto& ga = tp.grad_mut(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * g * av[i];
    });
}

Var norm(Var a) {
    Tape& t = *a.tape;
    double s = 0;
    for (double v : a.value()) s += v * v;
    const double n = std::sqrt(s);
    t.note_kink(n);
    const auto id = static_cast<std::int32_t>(t.node_count());
    return t.push(std::vector<double>{n}, [a, id, n](Tape& tp) {
        if (n == 0.0) return;  // subgradient 0 at the origin
        const double g = tp.grad(Var{&tp, id})[0];
        const auto av = tp.value(a);
        auto& ga = tp.grad_mut(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * av[i] / n;
    });
}

Var leaf(Tape& t, ParamTensor& p) {
    const auto id = static_cast<std::int32_t>(t.node_count());
    return t.push(p.values, [&p, id](Tape& tp) {
        if (!p.trainable) return;
        const auto g = tp.grad(Var{&tp, id});
        for (std::size_t i = 0; i < g.size(); ++i) p.grads[i] += g[i];
    });
}

// ---- optimisation --------------------------------------------------------

Adam::Adam(ParamList params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (auto* p : params_) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
    }
}

void Adam::step() {
    for (auto* p : params_) {
        if (!p->trainable) continue;
        for (std::size_t i = 0; i < p->grads.size(); ++i)
            if (!std::isfinite(p->grads[i]))
                throw std::runtime_error("non-finite gradient in " + p->name + "[" +
                                         std::to_string(i) + "]; step aborted");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        ParamTensor& p = *params_[k];
        if (p.trainable) {
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double g = p.grads[i];
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
                const double mh = m[i] / c1, vh = v[i] / c2;
                p.values[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
            }
        }
        p.zero_grad();
    }
}

void glorot_init(ParamTensor& W, std::uint64_t seed) {
    require(W.shape.size() == 2, "glorot_init needs a rank-2 tensor");
    const double limit = std::sqrt(6.0 / static_cast<double>(W.rows() + W.cols()));
    Rng rng(derive_seed(seed, W.name));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& w : W.values) w = u(rng);
}

// ---- gradient check ------------------------------------------------------

GradCheckReport grad_check(const std::function<Var(Tape&)>& loss, const ParamList& params,
                           const GradCheckOptions& opt) {
    GradCheckReport rep;
    double scale = 1.0;
    {
        Tape tape;
        for (auto* p : params) p->zero_grad();
        Var out = loss(tape);
        scale = std::max(1.0, std::abs(out.scalar()));
        tape.backward(out);
    }
    Rng rng(opt.seed);
    auto eval = [&]() {
        Tape tape;
        tape.set_recording(false);
        return loss(tape).scalar();
    };
    for (auto* p : params) {
        if (!p->trainable) continue;
        std::vector<std::size_t> coords(p->size());
        std::iota(coords.begin(), coords.end(), 0);
        if (opt.max_coords > 0 && coords.size() > opt.max_coords) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(opt.max_coords);
        }
        for (std::size_t i : coords) {
            const double theta = p->values[i];
            const double analytic = p->grads[i];
            auto rel_at = [&](double h) {
                p->values[i] = theta + h;
                const double fp = eval();
                p->values[i] = theta - h;
                const double fm = eval();
                p->values[i] = theta;
                const double numeric = (fp - fm) / (2.0 * h);
                const double denom = std::max({std::abs(numeric), std::abs(analytic), opt.denom_floor});
                return std::pair{std::abs(numeric - analytic) / denom, std::max(std::abs(numeric), std::abs(analytic))};
            };
            const double h = opt.step * std::max(1.0, std::abs(theta));
            auto [rel, mag] = rel_at(h);
            const double resolution = std::numeric_limits<double>::epsilon() * scale / h;
            if (rel >= opt.tolerance && opt.coarse_factor > 0 && mag < resolution / opt.tolerance) {
                rel = std::min(rel, rel_at(h * opt.coarse_factor).first);
                ++rep.coarse;
            }
            ++rep.checked;
            if (rel >= rep.max_rel_error) {
                rep.max_rel_error = rel;
                rep.worst = p->name + "[" + std::to_string(i) + "]";
            }
        }
    }
    for (auto* p : params) p->zero_grad();
    rep.passed = rep.max_rel_error < opt.tolerance;
    return rep;
}

}  // namespace mcal::ad
