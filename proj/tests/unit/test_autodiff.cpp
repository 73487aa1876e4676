#include <cmath>

#include "checks.hpp"
#include "doctest.h"
#include "marketcal/autodiff.hpp"
#include "marketcal/nn.hpp"

using namespace mcal;

TEST_CASE("elementary ops") {
    ad::Tape t;
    auto r = ad::relu(t.constant(std::vector<double>{-1, 0, 2}));
    CHECK(r.value()[0] == 0.0);
    CHECK(r.value()[1] == 0.0);
    CHECK(r.value()[2] == 2.0);
    CHECK(ad::sigmoid(t.scalar(0.0)).scalar() == 0.5);

    ad::ParamTensor W("W", {3, 3}), b("b", {3});
    for (int i = 0; i < 3; ++i) W.values[i * 3 + i] = 1.0;
    auto y = ad::affine(t.constant(std::vector<double>{0.3, -2, 7}), W, b);
    CHECK(y.value()[0] == 0.3);
    CHECK(y.value()[1] == -2.0);
    CHECK(y.value()[2] == 7.0);
}

TEST_CASE("affine rejects a shape mismatch") {
    ad::Tape t;
    ad::ParamTensor W("W", {2, 3}), b("b", {2});
    CHECK_THROWS(ad::affine(t.constant(std::vector<double>{1, 2}), W, b));
}

TEST_CASE("lstm with zero weights outputs zero") {
    nn::LstmCell cell("z", 4, 3, 1);
    std::fill(cell.W.values.begin(), cell.W.values.end(), 0.0);
    std::fill(cell.b.values.begin(), cell.b.values.end(), 0.0);
    ad::Tape t;
    auto s = cell.step(t.constant(std::vector<double>{1, -2, 3, 4}), cell.zero_state(t));
    for (double v : s.h.value()) CHECK(v == 0.0);
}

TEST_CASE("saturated forget gate keeps the cell: c' = c + i*g") {
    const std::size_t in = 3, H = 2;
    nn::LstmCell cell("f", in, H, 5);
    for (std::size_t r = H; r < 2 * H; ++r) cell.b.values[r] = 20.0;  // forget rows
    ad::Tape t;
    const std::vector<double> x{0.4, -0.7, 1.1}, h{0.2, -0.1}, c{0.5, -0.3};
    nn::LstmState s0{t.constant(h), t.constant(c)};
    auto s1 = cell.step(t.constant(x), s0);
    // recompute gates by hand
    for (std::size_t k = 0; k < H; ++k) {
        auto pre = [&](std::size_t row) {
            double z = cell.b.values[row];
            for (std::size_t j = 0; j < in; ++j) z += cell.W.values[row * (in + H) + j] * x[j];
            for (std::size_t j = 0; j < H; ++j) z += cell.W.values[row * (in + H) + in + j] * h[j];
            return z;
        };
        const double i = 1.0 / (1.0 + std::exp(-pre(k)));
        const double g = std::tanh(pre(2 * H + k));
        CHECK(s1.c.value()[k] == doctest::Approx(c[k] + i * g).epsilon(1e-6));
    }
}

TEST_CASE("adam: zero gradient leaves parameters alone") {
    ad::ParamTensor p("p", {3});
    p.values = {1, 2, 3};
    ad::Adam opt({&p});
    opt.step();
    CHECK(p.values == std::vector<double>{1, 2, 3});
}

TEST_CASE("adam: first step moves by lr * g / (|g| + eps)") {
    ad::ParamTensor p("p", {2});
    p.values = {1.0, -1.0};
    ad::Adam opt({&p});
    p.grads = {0.5, -3.0};
    opt.step();
    // bias-corrected m/sqrt(v) = g/|g| on the first step
    CHECK(p.values[0] == doctest::Approx(1.0 - 1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
    CHECK(p.values[1] == doctest::Approx(-1.0 + 1e-3 * 3.0 / (3.0 + 1e-8)).epsilon(1e-12));
    CHECK(p.grads[0] == 0.0);
}

TEST_CASE("adam: two steps reduce a convex quadratic") {
    ad::ParamTensor p("p", {2});
    p.values = {2.0, -1.0};
    auto loss = [&] { return p.values[0] * p.values[0] + 3 * p.values[1] * p.values[1]; };
    const double before = loss();
    ad::Adam opt({&p}, {.lr = 0.05});
    for (int k = 0; k < 2; ++k) {
        p.grads = {2 * p.values[0], 6 * p.values[1]};
        opt.step();
    }
    CHECK(loss() < before);
}

TEST_CASE("adam rejects a non-finite gradient") {
    ad::ParamTensor p("bad", {1});
    ad::Adam opt({&p});
    p.grads[0] = std::nan("");
    CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("bad"), std::runtime_error);
}

TEST_CASE("tape clear keeps parameters; recording does not change values") {
    nn::Linear l("l", 3, 2, 3);
    const auto before = l.W.values;
    ad::Tape a, b;
    b.set_recording(false);
    auto x = std::vector<double>{0.1, 0.2, -0.3};
    auto ya = ad::sigmoid(l(a.constant(x)));
    auto yb = ad::sigmoid(l(b.constant(x)));
    CHECK(std::vector<double>(ya.value().begin(), ya.value().end()) ==
          std::vector<double>(yb.value().begin(), yb.value().end()));
    a.backward(ad::sum(ya));
    a.clear();
    CHECK(l.W.values == before);
}

TEST_CASE("detach blocks the gradient exactly") {
    ad::ParamTensor p("p", {2});
    p.values = {0.5, -0.5};
    ad::Tape t;
    auto v = ad::leaf(t, p);
    t.backward(ad::add(ad::sq_norm(ad::detach(v)), ad::sum(ad::scale(v, 0.0))));
    CHECK(p.grads[0] == 0.0);
    CHECK(p.grads[1] == 0.0);
}

TEST_CASE("grad check: affine+relu chain is tight") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
        const auto r = checks::check_mlp_chain(s);
        CHECK_MESSAGE(r.max_rel_error < 1e-6, "seed " << s << " worst " << r.worst);
    }
}

TEST_CASE("grad check: triplet hinge away from its kink") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
        ad::ParamTensor a("a", {5}), p("p", {5}), n("n", {5});
        Rng rng(s);
        for (auto* t : {&a, &p, &n})
            for (auto& v : t->values) v = normal(rng);
        auto loss = [&](ad::Tape& t) {
            auto va = ad::leaf(t, a), vp = ad::leaf(t, p), vn = ad::leaf(t, n);
            auto d = ad::sub(ad::norm(ad::sub(va, vp)), ad::norm(ad::sub(va, vn)));
            return ad::sum(ad::hinge(ad::add(d, t.scalar(2.0))));
        };
        ad::Tape probe;
        loss(probe);
        if (probe.kink_margin() < 1e-3) continue;
        const auto r = ad::grad_check(loss, {&a, &p, &n});
        CHECK_MESSAGE(r.passed, "seed " << s << " err " << r.max_rel_error);
    }
}

TEST_CASE("grad check: LSTM over 20 steps") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
        const auto r = checks::check_lstm(s, 16, 0);  // every coordinate of a narrower stack
        CHECK_MESSAGE(r.passed, "seed " << s << " err " << r.max_rel_error << " at " << r.worst);
    }
}

TEST_CASE("grad check: corrupted derivative is caught") {
    const auto r = checks::negative_control(3);
    CHECK_FALSE(r.passed);
    CHECK(r.max_rel_error > 1e-2);
}

TEST_CASE("grad check: a 1% error on a sub-resolution gradient is still caught") {
    // gradients near 1e-7 sit below what h = 1e-5 resolves, so they go through
    // the coarse retry; a small systematic error must survive it
    ad::ParamTensor w("tiny.w", {3});
    w.values = {0.3, -0.7, 1.1};
    auto loss = [&](ad::Tape& t) {
        auto y = ad::map(ad::leaf(t, w), [](double v) { return 1e-7 * std::sin(v); },
                         [](double v) { return 1.01e-7 * std::cos(v); });
        return ad::add(ad::sum(y), t.scalar(3.0));
    };
    const auto r = ad::grad_check(loss, {&w});
    CHECK(r.coarse == 3);
    CHECK_FALSE(r.passed);
    // 1e-9 absolute over the 1e-6 denominator floor
    CHECK(r.max_rel_error > 5e-4);
}
