#pragma once

// Layers assembled from autodiff ops: affine, ReLU MLPs and a stacked LSTM.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "marketcal/autodiff.hpp"

namespace mcal::nn {

struct Linear {
    ad::ParamTensor W;
    ad::ParamTensor b;

    Linear() = default;
    Linear(const std::string& name, std::size_t in, std::size_t out, std::uint64_t seed);

    std::size_t in() const { return W.cols(); }
    std::size_t out() const { return W.rows(); }
    ad::Var operator()(ad::Var x) { return ad::affine(x, W, b); }
    ad::ParamList params() { return {&W, &b}; }
};

/// Affine layers with ReLU between them and a linear last layer.
class Mlp {
public:
    Mlp() = default;
    Mlp(const std::string& name, const std::vector<std::size_t>& widths, std::uint64_t seed);

    ad::Var operator()(ad::Var x);
    ad::ParamList params();
    std::vector<Linear>& layers() { return layers_; }
    const std::vector<Linear>& layers() const { return layers_; }
    void set_trainable(bool on);

private:
    std::vector<Linear> layers_;
};

struct LstmState {
    ad::Var h;
    ad::Var c;
};

/// One gated cell. Gates are stacked [input, forget, candidate, output] in
/// the rows of W (4H x (in + H)).
class LstmCell {
public:
    LstmCell() = default;
    LstmCell(const std::string& name, std::size_t in, std::size_t hidden, std::uint64_t seed);

    LstmState step(ad::Var x, const LstmState& s);
    LstmState zero_state(ad::Tape& t) const;
    std::size_t hidden() const { return hidden_; }
    std::size_t in() const { return in_; }
    ad::ParamList params() { return {&W, &b}; }

    ad::ParamTensor W;
    ad::ParamTensor b;

private:
    std::size_t in_ = 0;
    std::size_t hidden_ = 0;
};

/// Stack of LSTM cells; the last layer's final hidden state is the encoding.
class Lstm {
public:
    Lstm() = default;
    Lstm(const std::string& name, std::size_t in, std::size_t hidden, std::size_t layers,
         std::uint64_t seed);

    ad::Var encode(ad::Tape& t, const std::vector<ad::Var>& sequence);
    ad::ParamList params();
    std::size_t hidden() const { return cells_.empty() ? 0 : cells_.front().hidden(); }

private:
    std::vector<LstmCell> cells_;
};

}  // namespace mcal::nn
