#pragma once

// Single-layer fully-connected recurrent policy network.
//
// Each neuron sees the current code, every neuron's output from the previous
// activation, and a constant bias input of 1. The number of neurons equals the
// number of actions; the chosen action is the argmax output.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "compressor.hpp"
#include "error.hpp"

namespace pixelnes {

enum class Activation : std::uint32_t { tanh = 0, identity = 1, logistic = 2 };

inline double apply_activation(Activation f, double x)
{
    switch (f) {
    case Activation::identity:
        return x;
    case Activation::logistic:
        return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh:
    default:
        return std::tanh(x);
    }
}

inline std::string to_string(Activation f)
{
    switch (f) {
    case Activation::identity:
        return "identity";
    case Activation::logistic:
        return "logistic";
    default:
        return "tanh";
    }
}

inline Activation parse_activation(const std::string& name)
{
    if (name == "tanh")
        return Activation::tanh;
    if (name == "identity")
        return Activation::identity;
    if (name == "logistic")
        return Activation::logistic;
    throw ContractViolation("unknown activation '" + name + "'");
}

struct ControllerShape {
    std::size_t n_inputs = 0;
    std::size_t n_neurons = 1;

    std::size_t weight_count() const { return n_neurons * (n_inputs + n_neurons + 1); }
    void validate() const { require(n_neurons >= 1, "controller needs at least one neuron"); }
    bool operator==(const ControllerShape&) const = default;
};

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool operator==(const IndexRange&) const = default;
};

/**
 * Genotype-to-phenotype mapping of the flat weight vector.
 *
 * Blocks in order: all input weights (neuron-major, neuron i owns
 * [i*n_inputs, (i+1)*n_inputs)), then all recurrent weights (neuron-major,
 * n_neurons each), then one bias per neuron.
 */
struct GenotypeLayout {
    ControllerShape shape;
    IndexRange input;
    IndexRange recurrent;
    IndexRange bias;

    std::size_t total() const { return bias.end; }

    std::size_t input_index(std::size_t neuron, std::size_t input_idx) const
    {
        return input.begin + neuron * shape.n_inputs + input_idx;
    }
    std::size_t recurrent_index(std::size_t neuron, std::size_t from) const
    {
        return recurrent.begin + neuron * shape.n_neurons + from;
    }
    std::size_t bias_index(std::size_t neuron) const { return bias.begin + neuron; }
};

inline GenotypeLayout genotype_layout(const ControllerShape& shape)
{
    shape.validate();
    GenotypeLayout l;
    l.shape = shape;
    l.input = {0, shape.n_neurons * shape.n_inputs};
    l.recurrent = {l.input.end, l.input.end + shape.n_neurons * shape.n_neurons};
    l.bias = {l.recurrent.end, l.recurrent.end + shape.n_neurons};
    return l;
}

/// Positions (in the enlarged genotype) that an input expansion inserts, ascending.
inline std::vector<std::size_t> expansion_insert_positions(const ControllerShape& shape, std::size_t new_n_inputs)
{
    require(new_n_inputs >= shape.n_inputs, "controller inputs cannot shrink");
    const std::size_t grow = new_n_inputs - shape.n_inputs;
    std::vector<std::size_t> pos;
    pos.reserve(grow * shape.n_neurons);
    for (std::size_t i = 0; i < shape.n_neurons; ++i)
        for (std::size_t g = 0; g < grow; ++g)
            pos.push_back(i * new_n_inputs + shape.n_inputs + g);
    return pos;
}

struct ControllerState {
    std::vector<double> prev_outputs;

    static ControllerState zeros(std::size_t n_neurons) { return {std::vector<double>(n_neurons, 0.0)}; }
    bool operator==(const ControllerState&) const = default;
};

struct ActivationResult {
    std::size_t action = 0;
    ControllerState state;
};

namespace detail {

template <typename InputTerm>
ActivationResult activate_impl(std::span<const double> w, const ControllerShape& shape, const ControllerState& s,
                               Activation f, InputTerm&& input_term)
{
    require(w.size() == shape.weight_count(), "weight vector does not match controller shape");
    require(s.prev_outputs.size() == shape.n_neurons, "state does not match controller shape");
    const GenotypeLayout l = genotype_layout(shape);

    ActivationResult r;
    r.state.prev_outputs.resize(shape.n_neurons);
    for (std::size_t i = 0; i < shape.n_neurons; ++i) {
        double net = input_term(w.subspan(l.input_index(i, 0), shape.n_inputs));
        for (std::size_t j = 0; j < shape.n_neurons; ++j)
            net += w[l.recurrent_index(i, j)] * s.prev_outputs[j];
        net += w[l.bias_index(i)];
        r.state.prev_outputs[i] = apply_activation(f, net);
    }
    for (std::size_t i = 1; i < shape.n_neurons; ++i)
        if (r.state.prev_outputs[i] > r.state.prev_outputs[r.action])
            r.action = i;
    return r;
}

} // namespace detail

/// One forward step on a real-valued input vector.
inline ActivationResult activate(std::span<const double> w, const ControllerShape& shape, const ControllerState& s,
                                 std::span<const double> input, Activation f = Activation::tanh)
{
    require(input.size() == shape.n_inputs, "input length does not match controller inputs");
    return detail::activate_impl(w, shape, s, f, [&](std::span<const double> row) {
        double acc = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k)
            acc += row[k] * input[k];
        return acc;
    });
}

/// One forward step on a binary code; only the set bits contribute.
inline ActivationResult activate(std::span<const double> w, const ControllerShape& shape, const ControllerState& s,
                                 const SparseCode& code, Activation f = Activation::tanh)
{
    require(code.size() == shape.n_inputs, "code length does not match controller inputs");
    return detail::activate_impl(w, shape, s, f, [&](std::span<const double> row) {
        double acc = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k)
            if (code.bits[k])
                acc += row[k];
        return acc;
    });
}

/// Grows the input block; old weights keep their connections, new ones are zero.
inline std::pair<std::vector<double>, ControllerShape> expand_inputs(std::span<const double> w,
                                                                     const ControllerShape& shape,
                                                                     std::size_t new_n_inputs)
{
    require(w.size() == shape.weight_count(), "weight vector does not match controller shape");
    require(new_n_inputs >= shape.n_inputs, "controller inputs cannot shrink");

    const ControllerShape grown{new_n_inputs, shape.n_neurons};
    const GenotypeLayout from = genotype_layout(shape);
    const GenotypeLayout to = genotype_layout(grown);

    std::vector<double> out(grown.weight_count(), 0.0);
    for (std::size_t i = 0; i < shape.n_neurons; ++i) {
        for (std::size_t k = 0; k < shape.n_inputs; ++k)
            out[to.input_index(i, k)] = w[from.input_index(i, k)];
        for (std::size_t j = 0; j < shape.n_neurons; ++j)
            out[to.recurrent_index(i, j)] = w[from.recurrent_index(i, j)];
        out[to.bias_index(i)] = w[from.bias_index(i)];
    }
    return {std::move(out), grown};
}

/// Weights plus the recurrent state of one running policy.
class Controller {
public:
    Controller(std::vector<double> weights, ControllerShape shape, Activation f = Activation::tanh)
        : weights_(std::move(weights)), shape_(shape), activation_(f), state_(ControllerState::zeros(shape.n_neurons))
    {
        shape_.validate();
        require(weights_.size() == shape_.weight_count(), "weight vector does not match controller shape");
    }

    void reset() { state_ = ControllerState::zeros(shape_.n_neurons); }

    std::size_t act(const SparseCode& code)
    {
        auto r = activate(weights_, shape_, state_, code, activation_);
        state_ = std::move(r.state);
        return r.action;
    }

    const ControllerShape& shape() const { return shape_; }
    const ControllerState& state() const { return state_; }
    std::span<const double> weights() const { return weights_; }

private:
    std::vector<double> weights_;
    ControllerShape shape_;
    Activation activation_;
    ControllerState state_;
};

} // namespace pixelnes
