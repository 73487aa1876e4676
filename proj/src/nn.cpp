#include "marketcal/nn.hpp"

#include <stdexcept>

#include "marketcal/rng.hpp"

namespace mcal::nn {

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, std::uint64_t seed)
    : W(name + ".W", {out, in}), b(name + ".b", {out}) {
    ad::glorot_init(W, seed);
}

Mlp::Mlp(const std::string& name, const std::vector<std::size_t>& widths, std::uint64_t seed) {
    if (widths.size() < 2) throw std::invalid_argument("Mlp needs at least input and output widths");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        layers_.emplace_back(name + "." + std::to_string(i), widths[i], widths[i + 1], seed);
}

ad::Var Mlp::operator()(ad::Var x) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = layers_[i](x);
        if (i + 1 < layers_.size()) x = ad::relu(x);
    }
    return x;
}

ad::ParamList Mlp::params() {
    ad::ParamList out;
    for (auto& l : layers_) {
        out.push_back(&l.W);
        out.push_back(&l.b);
    }
    return out;
}

void Mlp::set_trainable(bool on) {
    for (auto* p : params()) p->trainable = on;
}

LstmCell::LstmCell(const std::string& name, std::size_t in, std::size_t hidden, std::uint64_t seed)
    : W(name + ".W", {4 * hidden, in + hidden}), b(name + ".b", {4 * hidden}), in_(in), hidden_(hidden) {
    ad::glorot_init(W, seed);
    for (std::size_t i = hidden; i < 2 * hidden; ++i) b.values[i] = 1.0;  // forget gate
}

LstmState LstmCell::zero_state(ad::Tape& t) const {
    return {t.constant(std::vector<double>(hidden_, 0.0)), t.constant(std::vector<double>(hidden_, 0.0))};
}

LstmState LstmCell::step(ad::Var x, const LstmState& s) {
    if (x.size() != in_) throw std::invalid_argument("lstm input width mismatch");
    if (s.h.size() != hidden_ || s.c.size() != hidden_)
        throw std::invalid_argument("lstm state width mismatch");
    const ad::Var z = ad::affine(ad::concat(x, s.h), W, b);
    const std::size_t H = hidden_;
    const ad::Var i = ad::sigmoid(ad::slice(z, 0, H));
    const ad::Var f = ad::sigmoid(ad::slice(z, H, H));
    const ad::Var g = ad::tanh(ad::slice(z, 2 * H, H));
    const ad::Var o = ad::sigmoid(ad::slice(z, 3 * H, H));
    const ad::Var c = ad::add(ad::mul(f, s.c), ad::mul(i, g));
    const ad::Var h = ad::mul(o, ad::tanh(c));
    return {h, c};
}

Lstm::Lstm(const std::string& name, std::size_t in, std::size_t hidden, std::size_t layers,
           std::uint64_t seed) {
    if (layers < 1) throw std::invalid_argument("Lstm needs at least one layer");
    for (std::size_t l = 0; l < layers; ++l)
        cells_.emplace_back(name + "." + std::to_string(l), l == 0 ? in : hidden, hidden, seed);
}

ad::Var Lstm::encode(ad::Tape& t, const std::vector<ad::Var>& sequence) {
    if (sequence.empty()) throw std::invalid_argument("Lstm::encode needs a non-empty sequence");
    std::vector<ad::Var> xs = sequence;
    for (auto& cell : cells_) {
        LstmState s = cell.zero_state(t);
        for (auto& x : xs) {
            s = cell.step(x, s);
            x = s.h;
        }
    }
    return xs.back();
}

ad::ParamList Lstm::params() {
    ad::ParamList out;
    for (auto& c : cells_) {
        out.push_back(&c.W);
        out.push_back(&c.b);
    }
    return out;
}

}  // namespace mcal::nn
