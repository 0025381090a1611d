#include <gtest/gtest.h>

#include <random>
#include <set>

#include "sofic/toeplitz.hpp"

using namespace sofic;

namespace {

// Symbolic rendering of Psi_1 over x0, x1, ... written as "x<n>".
std::string symbolic_psi(Int p, Int q, Int lo, Int hi) {
    std::string s;
    for (Int j = lo; j <= hi; ++j) {
        auto n = psi_level(p, q, j);
        s += n ? "x" + std::to_string(*n) : "$";
    }
    return s;
}

std::string symbolic_omega(Int p, Int k, const std::vector<std::string>& w, std::vector<std::string>& out) {
    out.clear();
    std::string s;
    for (std::size_t j = 0; static_cast<std::size_t>(j * p + k) < w.size(); ++j) {
        out.push_back(w[j * p + k]);
        s += out.back();
    }
    return s;
}

std::vector<std::string> tokens(Int p, Int q, Int lo, Int hi) {
    std::vector<std::string> out;
    for (Int j = lo; j <= hi; ++j) {
        auto n = psi_level(p, q, j);
        out.push_back(n ? "x" + std::to_string(*n) : "$");
    }
    return out;
}

struct StubFlow {
    std::set<Bits> forbidden;
    bool incompatible = false;
    bool word_forbidden(const Bits& w, std::size_t) const { return forbidden.contains(w); }
    bool action_incompatible(std::size_t, const Bits&, const Bits&, std::size_t) const { return incompatible; }
};

LayerWord layer_word(Int p, const std::vector<Bits>& per_generator, Int lo, Int hi) {
    LayerWord lw{p, per_generator.size(), {}};
    for (Int q = 1; q < p; ++q)
        for (const auto& x : per_generator) lw.layers.push_back(psi_encode(p, q, x, lo, hi));
    return lw;
}

}  // namespace

TEST(Toeplitz, SymbolicWindow) {
    EXPECT_EQ(symbolic_psi(3, 1, 0, 30), "$x0$x1x0$$x0$x2x0$x1x0$$x0$$x0$x1x0$$x0$x3x0$x1");
    auto w = tokens(3, 1, 0, 30);
    std::vector<std::string> o1, o2;
    EXPECT_EQ(symbolic_omega(3, 0, w, o1), "$x1$x2x1$$x1$x3x1");
    EXPECT_EQ(symbolic_omega(3, 0, o1, o2), "$x2$x3");
}

TEST(Toeplitz, EncodeMatchesLevels) {
    Bits x{1, 0, 1, 1};
    TWord w = psi_encode(3, 1, x, 0, 30);
    EXPECT_EQ(w.at(0), TSym::Dollar);
    EXPECT_EQ(w.at(1), TSym::One);
    EXPECT_EQ(w.at(3), TSym::Zero);
    EXPECT_EQ(w.at(9), TSym::One);
    EXPECT_EQ(w.at(27), TSym::One);
    EXPECT_THROW(psi_encode(3, 1, Bits{1, 0}, 0, 9), InsufficientPrefix);
    EXPECT_EQ(to_string(psi_encode(3, 2, Bits{1, 0}, 0, 8)), "$$1$$10$1");
}

TEST(Toeplitz, OmegaShiftsPositions) {
    TWord w = tword_from_string(0, "$0$1$$0$");
    TWord o = omega(3, 0, w);
    EXPECT_EQ(o.start, 0);
    EXPECT_EQ(to_string(o), "$10");
    TWord shifted = tword_from_string(-4, "$0$1$$0$");
    EXPECT_EQ(omega(3, 1, shifted).start, -1);
}

TEST(Toeplitz, FindK0) {
    Bits x{0, 1, 1, 0, 1};
    EXPECT_EQ(find_k0(3, 1, psi_encode(3, 1, x, 0, 30)), 0);
    EXPECT_EQ(find_k0(3, 2, psi_encode(3, 2, x, 0, 30)), 0);
    TWord shifted = psi_encode(3, 1, x, 1, 31);
    shifted.start = 0;
    EXPECT_EQ(find_k0(3, 1, shifted), 2);
    EXPECT_THROW(find_k0(3, 1, tword_from_string(0, "$$$$$$$$$")), NotToeplitz);
}

TEST(Toeplitz, RoundTripRandom) {
    std::mt19937 rng(23);
    std::bernoulli_distribution bit(0.5);
    for (Int p : {3, 5})
        for (int trial = 0; trial < 50; ++trial) {
            Bits x(6);
            for (auto& b : x) b = bit(rng);
            Int q = 1 + trial % (p - 1);
            int depth = 3;
            Int hi = ipow(p, depth + 1);
            TWord w = psi_encode(p, q, x, 0, hi);
            auto r = decode(p, q, w, depth);
            EXPECT_EQ(r.prefix, Bits(x.begin(), x.begin() + depth));
            EXPECT_EQ(r.k_chain, (std::vector<Int>{0, 0}));
        }
}

TEST(Toeplitz, DecodeOfShiftedWindow) {
    Bits x{1, 0, 0, 1, 1, 0};
    TWord w = psi_encode(3, 1, x, 40, 40 + 200);
    auto r = decode(3, 1, w, 4);
    EXPECT_EQ(r.prefix, (Bits{1, 0, 0, 1}));
    EXPECT_EQ(r.k_chain.size(), 3u);
}

TEST(Toeplitz, DistinctPrefixesGiveDistinctWords) {
    std::set<std::string> images;
    for (int m = 0; m < 16; ++m) {
        Bits x{static_cast<std::uint8_t>(m & 1), static_cast<std::uint8_t>(m >> 1 & 1),
               static_cast<std::uint8_t>(m >> 2 & 1), static_cast<std::uint8_t>(m >> 3 & 1)};
        images.insert(to_string(psi_encode(3, 1, x, 0, 80)));
    }
    EXPECT_EQ(images.size(), 16u);
}

TEST(Toeplitz, ShortWindowReported) {
    TWord w = psi_encode(3, 1, Bits{1, 0, 1}, 0, 5);
    EXPECT_THROW(decode(3, 1, w, 3), Error);
}

TEST(Toeplitz, RecognizerAcceptsEncodedWords) {
    StubFlow flow;
    LayerWord lw = layer_word(3, {{1, 0, 1, 1}, {0, 1, 1, 0}}, 0, 80);
    auto r = recognize_top_word(3, lw, flow, 3, 8);
    EXPECT_TRUE(r.accepted()) << r.reason;
}

TEST(Toeplitz, RecognizerRejections) {
    StubFlow flow;
    LayerWord lw = layer_word(3, {{1, 0, 1, 1}, {0, 1, 1, 0}}, 0, 80);

    LayerWord broken = lw;
    broken.layer(1, 0).at(2) = TSym::One;
    EXPECT_EQ(recognize_top_word(3, broken, flow, 3, 8).stage, RecognitionStage::Structure);

    LayerWord misaligned = lw;
    misaligned.layer(1, 1) = psi_encode(3, 1, Bits{0, 1, 1, 0, 1}, 1, 81);
    misaligned.layer(1, 1).start = 0;
    EXPECT_EQ(recognize_top_word(3, misaligned, flow, 3, 8).stage, RecognitionStage::Alignment);

    LayerWord crossed = lw;
    crossed.layer(2, 0) = psi_encode(3, 2, Bits{0, 0, 1, 1}, 0, 80);
    EXPECT_EQ(recognize_top_word(3, crossed, flow, 3, 8).stage, RecognitionStage::CrossQ);

    StubFlow strict;
    strict.forbidden.insert(Bits{0, 1, 1});
    EXPECT_EQ(recognize_top_word(3, lw, strict, 3, 8).stage, RecognitionStage::Flow);
    StubFlow incompatible;
    incompatible.incompatible = true;
    EXPECT_EQ(recognize_top_word(3, lw, incompatible, 3, 8).stage, RecognitionStage::Flow);
}
