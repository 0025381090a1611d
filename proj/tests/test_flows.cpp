#include <gtest/gtest.h>

#include <set>

#include "sofic/flows.hpp"

using namespace sofic;

namespace {

std::shared_ptr<const HGroup> z_group() { return heisenberg_group(); }

std::shared_ptr<RecodedFlow> ternary_flow() {
    static auto flow = squarefree_flow(z_group(), 3);
    return flow;
}

bool has_square(const std::vector<int>& w, std::size_t max_half) {
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t l = 1; l <= max_half && i + 2 * l <= w.size(); ++l)
            if (std::equal(w.begin() + static_cast<std::ptrdiff_t>(i), w.begin() + static_cast<std::ptrdiff_t>(i + l),
                           w.begin() + static_cast<std::ptrdiff_t>(i + l)))
                return true;
    return false;
}

bool matches(const Cylinder& c, const FlowOracle& flow, const HElem& h) {
    for (const auto& [n, v] : c)
        if (flow.point_bit(h, n) != v) return false;
    return true;
}

}  // namespace

TEST(Flows, LengthLexEnumeration) {
    CoordinateEnumeration e(z_group());
    auto h = z_group();
    EXPECT_TRUE(e.word(0).empty());
    EXPECT_EQ(h->format_word(e.word(1)), "e");
    EXPECT_EQ(h->format_word(e.word(2)), "t");
    EXPECT_EQ(h->format_word(e.word(3)), "T");
    EXPECT_EQ(h->format_word(e.word(4)), "ee");
    EXPECT_EQ(h->format_word(e.word(8)), "tt");
    EXPECT_EQ(e.element(1), h->identity());
    EXPECT_EQ(e.index_of(HElem{0}), 0u);
    EXPECT_EQ(e.index_of(HElem{1}), 2u);
    EXPECT_EQ(e.index_of(HElem{-2}), 12u);
}

TEST(Flows, DuplicateCoordinatesForbidden) {
    auto flow = recode_subshift(std::make_shared<FullShift>(z_group(), 2));
    auto words = flow->forbidden_words(2);
    std::set<Cylinder> got(words.begin(), words.end());
    EXPECT_EQ(got, (std::set<Cylinder>{{{0, 0}, {1, 1}}, {{0, 1}, {1, 0}}}));
    EXPECT_TRUE(flow->word_forbidden({0, 1}, 2));
    EXPECT_FALSE(flow->word_forbidden({1, 1}, 2));
    // full shift: nothing beyond duplicate conflicts
    for (const auto& c : flow->forbidden_words(20)) {
        ASSERT_EQ(c.size(), 2u);
        auto it = c.begin();
        EXPECT_NE(it->second, std::next(it)->second);
        EXPECT_EQ(flow->coordinates().element(static_cast<std::size_t>(it->first)),
                  flow->coordinates().element(static_cast<std::size_t>(std::next(it)->first)));
    }
}

TEST(Flows, InvalidCodesForbidden) {
    auto flow = ternary_flow();
    EXPECT_EQ(flow->k(), 2);
    EXPECT_TRUE(flow->word_forbidden({1, 1}, 4));
    EXPECT_FALSE(flow->word_forbidden({1, 0}, 4));
}

TEST(Flows, MonotoneInBudget) {
    auto flow = ternary_flow();
    std::set<Cylinder> prev;
    for (std::size_t t = 1; t <= 14; ++t) {
        auto words = flow->forbidden_words(t);
        std::set<Cylinder> cur(words.begin(), words.end());
        EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) << t;
        prev = std::move(cur);
    }
}

TEST(Flows, SoundAgainstExactPoint) {
    auto flow = ternary_flow();
    auto ball = flow->group().ball(3);
    for (const auto& c : flow->forbidden_words(20))
        for (const auto& h : ball) ASSERT_FALSE(matches(c, *flow, h));
}

TEST(Flows, ActionForbiddenSound) {
    auto flow = ternary_flow();
    const auto& H = flow->group();
    for (std::size_t s = 0; s < H.size(); ++s) {
        Bits ws = flow->point_prefix(H.generator(s), 12);
        Bits w1 = flow->point_prefix(H.identity(), 40);
        for (const auto& c : flow->action_forbidden(s, cylinder_of(ws), 8))
            EXPECT_FALSE(matches(c, *flow, H.identity()));
        EXPECT_FALSE(flow->action_incompatible(s, ws, w1, 8));
        Bits wrong = ws;
        wrong[0] ^= 1;
        EXPECT_TRUE(flow->action_incompatible(s, wrong, w1, 8)) << s;
    }
}

TEST(Flows, RecodingRoundTrip) {
    auto flow = ternary_flow();
    const auto& z = flow->subshift();
    for (const auto& g : flow->group().ball(2)) {
        std::size_t n = flow->coordinates().index_of(g);
        int code = 0;
        for (int b = 0; b < flow->k(); ++b)
            code |= flow->point_bit(flow->group().identity(), static_cast<Int>(n) * flow->k() + b) << b;
        EXPECT_EQ(code, z.exact(g));
    }
}

TEST(Flows, SquareFreeWordOfLength61) {
    SquareFreeSubshift z(z_group(), 3, 31, 30);
    std::vector<int> w;
    for (Int i = -30; i <= 30; ++i) w.push_back(z.exact({i}));
    EXPECT_EQ(w.size(), 61u);
    EXPECT_FALSE(has_square(w, w.size()));
}

TEST(Flows, TwoColoursImpossible) {
    int squareless = 0;
    for (int m = 0; m < 16; ++m) {
        std::vector<int> w{m & 1, m >> 1 & 1, m >> 2 & 1, m >> 3 & 1};
        squareless += !has_square(w, 2);
    }
    EXPECT_EQ(squareless, 0);
    EXPECT_THROW(SquareFreeSubshift(z_group(), 2, 8, 2), NoColoringFound);
}

TEST(Flows, DefaultColouringHasNoShortSquares) {
    const auto& z = dynamic_cast<const SquareFreeSubshift&>(ternary_flow()->subshift());
    std::vector<int> w;
    for (Int i = -z.radius(); i <= z.radius(); ++i) w.push_back(z.exact({i}));
    EXPECT_FALSE(has_square(w, static_cast<std::size_t>(z.path_budget())));
    EXPECT_THROW(z.exact({z.radius() + 1}), BudgetExceeded);
}

TEST(Flows, NonabelianColouring) {
    auto f2 = std::make_shared<FreeGroup>(std::vector<std::string>{"a", "b"},
                                          std::vector<Mat2>{Mat2{1, 1, 0, 1}, Mat2{1, 0, 1, 1}});
    SquareFreeSubshift z(f2, 3, 3, 3);
    std::set<HElem> inside(z.ball().begin(), z.ball().end());
    auto lookup = [&](const HElem& g) { return inside.contains(g) ? z.exact(g) : -1; };
    for (const auto& g : z.ball()) EXPECT_FALSE(z.square_through(g, lookup));
}

TEST(Flows, PointEvalRoutes) {
    auto flow = ternary_flow();
    const auto& H = flow->group();
    auto ball = H.ball(3);
    for (Int n = 0; n < 8; ++n)
        EXPECT_EQ(flow_point_eval(*flow, H.identity(), n), flow->point_bit_via_coordinates(H.identity(), n));
    for (const auto& h : ball)
        for (Int n = 0; n < 40; ++n) ASSERT_EQ(flow->point_bit(h, n), flow->point_bit_via_coordinates(h, n));
    // f_t(x*) is the shift of z*
    HElem t{1};
    for (Int n = 0; n < 20; ++n) {
        HElem g = flow->coordinates().element(static_cast<std::size_t>(n / 2));
        EXPECT_EQ(flow->point_bit(t, n), flow->subshift().exact(H.mul(H.inv(t), g)) >> (n % 2) & 1);
    }
    // composition of the action
    for (const auto& h1 : H.ball(2))
        for (const auto& h2 : H.ball(2))
            for (Int n = 0; n < 24; ++n)
                ASSERT_EQ(flow->point_bit(H.mul(h1, h2), n), flow->point_bit(h2, flow->source_coordinate(h1, n)));
}

TEST(Flows, FreenessWitness) {
    auto flow = ternary_flow();
    Bits base = flow->point_prefix({0}, 64);
    for (Int h = -4; h <= 4; ++h)
        if (h != 0) EXPECT_NE(flow->point_prefix({h}, 64), base) << h;
}

TEST(Flows, FactorIdentityRecoversSquares) {
    auto flow = ternary_flow();
    auto fac = factor_flow_to_subshift(flow, identity_block_map(3));
    const auto& H = flow->group();
    std::set<std::set<std::pair<HElem, int>>> emitted;
    for (const auto& c : fac->forbidden_codings(6)) {
        std::set<std::pair<HElem, int>> cells;
        bool via_e = false;
        for (const auto& [w, a] : c.cells) {
            via_e |= w.size() == 1 && w[0].gen == 0;
            cells.insert({H.eval(w), a});
        }
        if (!via_e) emitted.insert(cells);
    }
    std::set<std::set<std::pair<HElem, int>>> squares;
    for (int a = 0; a < 3; ++a) {
        squares.insert({{HElem{0}, a}, {HElem{1}, a}});
        squares.insert({{HElem{0}, a}, {HElem{-1}, a}});
    }
    EXPECT_EQ(emitted, squares);
}

TEST(Flows, FactorConstantMap) {
    auto flow = ternary_flow();
    BlockMap m{{{Cylinder{}}, {}}};
    auto fac = factor_flow_to_subshift(flow, m);
    for (const auto& c : fac->forbidden_codings(4)) {
        bool has_one = false;
        for (const auto& cell : c.cells) has_one |= cell.second == 1;
        EXPECT_TRUE(has_one);
    }
    EXPECT_FALSE(fac->forbidden_codings(4).empty());
}

TEST(Flows, FactorTwoCoordinateMapSound) {
    auto flow = ternary_flow();
    BlockMap m{{{{{0, 0}, {4, 0}}, {{0, 1}, {4, 1}}}, {{{0, 0}, {4, 1}}, {{0, 1}, {4, 0}}}}};
    auto fac = factor_flow_to_subshift(flow, m);
    const auto& H = flow->group();
    auto codings = fac->forbidden_codings(12);
    for (const auto& c : codings)
        for (const auto& g : H.ball(4)) {
            bool realized = true;
            for (const auto& [w, a] : c.cells) realized &= fac->exact(H.mul(g, H.eval(w))) == a;
            ASSERT_FALSE(realized);
        }
}
