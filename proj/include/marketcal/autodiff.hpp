#pragma once

// Small reverse-mode differentiation core over dense double vectors.
// Values live on a Tape as flat vectors; parameters live outside the tape in
// ParamTensor objects and receive gradients when the tape is run backward.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mcal::ad {

struct ParamTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grads;
    bool trainable = true;
    std::uint64_t id = 0;

    ParamTensor() = default;
    ParamTensor(std::string name, std::vector<std::size_t> shape);

    std::size_t size() const { return values.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    void zero_grad();
    bool finite() const;
};

using ParamList = std::vector<ParamTensor*>;

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
    Tape* tape = nullptr;
    std::int32_t id = -1;

    std::span<const double> value() const;
    std::size_t size() const;
    double scalar() const;
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(std::span<const double> v);
    Var constant(std::vector<double> v);
    Var scalar(double x);

    std::span<const double> value(Var v) const;
    std::span<const double> grad(Var v) const;

    /// Seeds d(out)/d(out) = 1 and runs every recorded backward closure once,
    /// newest first. Parameter grads accumulate.
    void backward(Var out);

    /// Drops recorded nodes; parameter values are never touched.
    void clear();
    std::size_t node_count() const { return nodes_.size(); }

    /// Turns off closure recording (forward values are unchanged).
    void set_recording(bool on) { recording_ = on; }
    bool recording() const { return recording_; }

    /// Smallest |argument| seen at a non-differentiable point (relu input,
    /// hinge input, norm of a vector) since the last clear.
    double kink_margin() const { return kink_margin_; }
    void note_kink(double distance);

    // used by op implementations
    using Backward = std::function<void(Tape&)>;
    Var push(std::vector<double> value, Backward bw = {});
    std::vector<double>& grad_mut(Var v);

private:
    struct Node {
        std::vector<double> value;
        std::vector<double> grad;
        Backward backward;
    };
    std::vector<Node> nodes_;
    bool recording_ = true;
    double kink_margin_ = 1e300;
};

// ---- ops ----------------------------------------------------------------

/// y = W x + b with W stored row-major (rows = out, cols = in).
Var affine(Var x, ParamTensor& W, ParamTensor& b);
/// Same with W and b produced on the tape (hypernetwork-generated weights).
/// `w` is row-major out x in.
Var affine(Var x, Var w, Var b, std::size_t out);

Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // element-wise
Var scale(Var a, double k);
Var concat(Var a, Var b);
Var slice(Var a, std::size_t offset, std::size_t len);
Var sum(Var a);
/// Squared Euclidean norm, a scalar.
Var sq_norm(Var a);
/// Euclidean norm, a scalar (kink at the origin).
Var norm(Var a);
/// max(x, 0) element-wise, recorded as a kink.
Var hinge(Var a);
/// Cuts the gradient path: same value, nothing flows back.
Var detach(Var a);
/// Element-wise y = f(x) with derivative df.
Var map(Var a, std::function<double(double)> f, std::function<double(double)> df);
/// Copies a ParamTensor's values onto the tape as a differentiable leaf.
Var leaf(Tape& t, ParamTensor& p);

// ---- optimisation --------------------------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(ParamList params, AdamConfig cfg = {});

    /// Bias-corrected update of every trainable parameter, then zeroes grads.
    /// Throws std::runtime_error naming the tensor if a grad is not finite.
    void step();
    std::uint64_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    ParamList params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::uint64_t t_ = 0;
};

/// Glorot-uniform weights; biases left at zero.
void glorot_init(ParamTensor& W, std::uint64_t seed);

// ---- gradient check ------------------------------------------------------

struct GradCheckReport {
    double max_rel_error = 0;
    std::string worst;  // "name[index]"
    std::size_t checked = 0;
    std::size_t coarse = 0;  // coordinates settled by the coarse-step retry
    bool passed = false;
};

struct GradCheckOptions {
    double tolerance = 1e-5;
    double step = 1e-5;           // scaled by max(1, |theta|)
    double denom_floor = 1e-6;    // relative error denominator floor
    // Central differences cannot resolve a gradient better than about
    // eps*max(1,|L|)/h in absolute terms. A coordinate that misses the
    // tolerance while its gradient sits below resolution/tolerance is retried
    // once at coarse_factor*h (roundoff shrinks, truncation is still tiny);
    // 0 disables the retry.
    double coarse_factor = 100.0;
    std::size_t max_coords = 0;   // 0 = every coordinate, else a seeded sample per tensor
    std::uint64_t seed = 1;
};

/// `loss` builds a scalar on the given tape from the current parameter
/// values. Analytic grads come from one backward pass; numeric ones from
/// central differences on each (sampled) coordinate.
GradCheckReport grad_check(const std::function<Var(Tape&)>& loss, const ParamList& params,
                           const GradCheckOptions& opt = {});

}  // namespace mcal::ad
