#include <gtest/gtest.h>

#include <random>

#include <pixelnes/controller.hpp>

using namespace pixelnes;

TEST(GenotypeLayout, TwoInputsOneNeuron)
{
    const auto l = genotype_layout({2, 1});
    EXPECT_EQ(l.input, (IndexRange{0, 2}));
    EXPECT_EQ(l.recurrent, (IndexRange{2, 3}));
    EXPECT_EQ(l.bias, (IndexRange{3, 4}));
    EXPECT_EQ(l.total(), 4u);
}

TEST(GenotypeLayout, NoInputs)
{
    const auto l = genotype_layout({0, 1});
    EXPECT_EQ(l.input.size(), 0u);
    EXPECT_EQ(l.total(), 2u);
}

TEST(GenotypeLayout, MultiNeuronBlocks)
{
    const auto l = genotype_layout({3, 2});
    EXPECT_EQ(l.total(), 2u * (3 + 2 + 1));
    EXPECT_EQ(l.input_index(1, 0), 3u);
    EXPECT_EQ(l.recurrent_index(0, 1), 7u);
    EXPECT_EQ(l.bias_index(1), 11u);
    EXPECT_THROW(genotype_layout({3, 0}), ContractViolation);
}

TEST(GenotypeLayout, InsertPositionsLandInsideEachInputBlock)
{
    EXPECT_EQ(expansion_insert_positions({2, 1}, 4), (std::vector<std::size_t>{2, 3}));
    // 2 neurons, 1 -> 3 inputs: neuron 0 owns [0,3), neuron 1 owns [3,6)
    EXPECT_EQ(expansion_insert_positions({1, 2}, 3), (std::vector<std::size_t>{1, 2, 4, 5}));
}

TEST(Activate, AllZeroWeightsPickAction0)
{
    const ControllerShape s{3, 4};
    const std::vector<double> w(s.weight_count(), 0.0);
    EXPECT_EQ(activate(w, s, ControllerState::zeros(4), SparseCode{{1, 0, 1}}).action, 0u);
}

TEST(Activate, SingleNeuronAlwaysAction0)
{
    const ControllerShape s{2, 1};
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n;
    for (int i = 0; i < 20; ++i) {
        std::vector<double> w(s.weight_count());
        for (auto& x : w)
            x = n(rng);
        EXPECT_EQ(activate(w, s, ControllerState::zeros(1), SparseCode{{1, 1}}).action, 0u);
    }
}

TEST(Activate, HandComputedForwardPass)
{
    // 1 input, 2 neurons; layout [in0, in1, r00, r01, r10, r11, b0, b1]
    const ControllerShape s{1, 2};
    const std::vector<double> w{0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 0.1, -0.2};
    const auto r = activate(w, s, ControllerState::zeros(2), std::vector<double>{1.0});
    // net0 = 0.5 + 0.1 = 0.6, net1 = 1.0 - 0.2 = 0.8
    EXPECT_EQ(r.action, 1u);
    EXPECT_DOUBLE_EQ(r.state.prev_outputs[0], std::tanh(0.6));
    EXPECT_DOUBLE_EQ(r.state.prev_outputs[1], std::tanh(0.8));

    // Recurrence: feed the state back with input 0
    const std::vector<double> w2{0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0};
    const auto r2 = activate(w2, s, ControllerState{{0.5, 0.0}}, std::vector<double>{0.0});
    EXPECT_DOUBLE_EQ(r2.state.prev_outputs[1], std::tanh(1.0));
    EXPECT_EQ(r2.action, 1u);
}

TEST(Activate, BinaryAndRealInputsAgree)
{
    const ControllerShape s{4, 3};
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n;
    std::vector<double> w(s.weight_count());
    for (auto& x : w)
        x = n(rng);
    const SparseCode code{{1, 0, 0, 1}};
    const auto a = activate(w, s, ControllerState::zeros(3), code);
    const auto b = activate(w, s, ControllerState::zeros(3), std::vector<double>{1, 0, 0, 1});
    EXPECT_EQ(a.action, b.action);
    EXPECT_EQ(a.state, b.state);
}

TEST(Activate, Activations)
{
    EXPECT_DOUBLE_EQ(apply_activation(Activation::identity, 2.5), 2.5);
    EXPECT_DOUBLE_EQ(apply_activation(Activation::logistic, 0.0), 0.5);
    EXPECT_EQ(parse_activation("logistic"), Activation::logistic);
    EXPECT_THROW(parse_activation("relu"), ContractViolation);
}

TEST(Activate, LengthMismatchThrows)
{
    const ControllerShape s{2, 2};
    const std::vector<double> w(s.weight_count(), 0.0);
    EXPECT_THROW(activate(w, s, ControllerState::zeros(2), SparseCode{{1}}), ContractViolation);
    EXPECT_THROW(activate(std::vector<double>(3), s, ControllerState::zeros(2), SparseCode{{1, 0}}),
                 ContractViolation);
}

TEST(ExpandInputs, ByZeroIsIdentity)
{
    const std::vector<double> w{1, 2, 3, 4, 5, 6, 7, 8};
    const auto [out, shape] = expand_inputs(w, {1, 2}, 1);
    EXPECT_EQ(out, w);
    EXPECT_EQ(shape, (ControllerShape{1, 2}));
}

TEST(ExpandInputs, ZerosGoBeforeRecurrentAndBias)
{
    const auto [out, shape] = expand_inputs(std::vector<double>{11, 12, 7, 9}, {2, 1}, 4);
    EXPECT_EQ(out, (std::vector<double>{11, 12, 0, 0, 7, 9}));
    EXPECT_EQ(shape.n_inputs, 4u);
}

TEST(ExpandInputs, ShrinkingRejected)
{
    EXPECT_THROW(expand_inputs(std::vector<double>(4), {2, 1}, 1), ContractViolation);
}

TEST(ExpandInputs, InsertPositionsAreTheNewZeros)
{
    const ControllerShape s{3, 2};
    std::vector<double> w(s.weight_count());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = static_cast<double>(i + 1);
    const auto [out, grown] = expand_inputs(w, s, 5);
    const auto pos = expansion_insert_positions(s, 5);
    std::vector<double> kept;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (std::find(pos.begin(), pos.end(), i) != pos.end())
            EXPECT_EQ(out[i], 0.0);
        else
            kept.push_back(out[i]);
    }
    EXPECT_EQ(kept, w); // relative order of old weights is preserved
}

TEST(ExpandInputs, InvarianceProperty)
{
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 500; ++trial) {
        const ControllerShape s{rng() % 6, 1 + rng() % 6};
        const std::size_t grow = rng() % 5;
        std::vector<double> w(s.weight_count());
        for (auto& x : w)
            x = n(rng);
        ControllerState st{std::vector<double>(s.n_neurons)};
        for (auto& x : st.prev_outputs)
            x = std::tanh(n(rng));
        std::vector<double> in(s.n_inputs);
        for (auto& x : in)
            x = n(rng);

        const auto [w2, s2] = expand_inputs(w, s, s.n_inputs + grow);
        std::vector<double> padded = in;
        padded.resize(s2.n_inputs, 0.0);
        const auto a = activate(w, s, st, in);
        const auto b = activate(w2, s2, st, padded);
        ASSERT_EQ(a.action, b.action);
        ASSERT_EQ(a.state, b.state);
    }
}

TEST(Controller, StateResetGivesIdenticalEpisodes)
{
    const ControllerShape s{2, 3};
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    std::vector<double> w(s.weight_count());
    for (auto& x : w)
        x = n(rng);
    Controller c(w, s);
    const std::vector<SparseCode> stream{{{1, 0}}, {{0, 1}}, {{1, 1}}, {{0, 0}}, {{1, 0}}};
    std::vector<std::size_t> first, second;
    for (const auto& code : stream)
        first.push_back(c.act(code));
    c.reset();
    for (const auto& code : stream)
        second.push_back(c.act(code));
    EXPECT_EQ(first, second);
}

TEST(Controller, LayoutRoundTrip)
{
    const ControllerShape s{3, 2};
    const auto l = genotype_layout(s);
    std::vector<double> w(s.weight_count(), -1.0);
    double v = 0;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t k = 0; k < 3; ++k)
            w[l.input_index(i, k)] = v++;
        for (std::size_t j = 0; j < 2; ++j)
            w[l.recurrent_index(i, j)] = v++;
        w[l.bias_index(i)] = v++;
    }
    // Every slot written exactly once.
    std::vector<double> sorted = w;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        EXPECT_EQ(sorted[i], static_cast<double>(i));
}
