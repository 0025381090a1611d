#pragma once

// Rule scanning over balls of G, equivariance of the decoder and period
// witnesses.

#include <algorithm>
#include <atomic>
#include <functional>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "sofic/construction.hpp"

namespace sofic {

struct Violation {
    std::string rule;  // "cell", "glue(s)" or "window(layer,depth)"
    GElem location;
    std::string detail;

    friend bool operator<(const Violation& a, const Violation& b) {
        return std::tie(a.location, a.rule, a.detail) < std::tie(b.location, b.rule, b.detail);
    }
    friend bool operator==(const Violation&, const Violation&) = default;
};

struct RuleSet {
    bool cell = true;
    bool glue = true;
    bool window = true;
    std::shared_ptr<const FlowOracle> flow;  // null: window words are only checked for structure
    std::size_t budget = 12;
    unsigned threads = 0;  // 0: hardware concurrency
};

/// Half-width of the normalized coset window read by the window rules.
inline Int window_halfwidth(Int p, int depth) { return (ipow(p, depth + 1) - 1) / 2; }

/// Coset representatives h of a ball, with the smallest ball element on
/// each coset as the location of window violations.
inline std::map<HElem, GElem> ball_cosets(const std::vector<GElem>& ball) {
    std::map<HElem, GElem> out;
    for (const auto& g : ball) {
        auto [it, fresh] = out.try_emplace(g.h, g);
        if (!fresh && g < it->second) it->second = g;
    }
    return out;
}

/// Every cell read by scan_rules on ball(radius) and by upsilon_decode at
/// the same depth, ball elements excluded.
inline std::vector<GElem> support_cells(const Semidirect& G, int radius, int depth, Int p = 3) {
    auto ball = G.ball(radius);
    std::set<GElem> in_ball(ball.begin(), ball.end());
    std::set<GElem> extra;
    auto add = [&](const GElem& g) {
        if (!in_ball.contains(g)) extra.insert(g);
    };
    const HGroup& H = G.H();
    for (const auto& g : ball)
        for (std::size_t s = 0; s < H.size(); ++s) add(G.mul(g, G.lift(H.inv(H.generator(s)))));
    const Int w = window_halfwidth(p, depth);
    for (const auto& [h, loc] : ball_cosets(ball))
        for (Int i = -w; i <= w; ++i)
            for (Int j = -w; j <= w; ++j) add(G.mul(G.lift(h), G.translation({i, j})));
    const Int side = ipow(p, depth + 1);
    for (Int i = 0; i < side; ++i)
        for (Int j = 0; j < side; ++j) add(G.translation({i, j}));
    return {extra.begin(), extra.end()};
}

namespace detail {

struct NoFlowChecks {
    bool word_forbidden(const Bits&, std::size_t) const { return false; }
    bool action_incompatible(std::size_t, const Bits&, const Bits&, std::size_t) const { return false; }
};

/// Runs task(i) for i < n on a pool of threads.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline std::string vec_text(Vec2 v) { return "(" + std::to_string(v.x) + "," + std::to_string(v.y) + ")"; }

inline void cell_rules(const PointOracle& y, const GElem& g, std::vector<Violation>& out) {
    std::string why;
    if (!pi_cell_check(y.at(g), y.layout(), &why)) out.push_back({"cell", g, why});
}

inline void glue_rules(const PointOracle& y, const GElem& g, std::vector<Violation>& out) {
    const auto& G = y.group();
    const HGroup& H = G.H();
    CellSymbol here = y.at(g);
    for (std::size_t s = 0; s < H.size(); ++s) {
        HElem sinv = H.inv(H.generator(s));
        GElem partner = G.mul(g, G.lift(sinv));
        std::string why;
        if (!glue_check(s, here, y.at(partner), reduce_mod_p(H.phi(sinv), y.layout().p), y.layout(), &why))
            out.push_back({"glue(" + H.names()[s] + ")", g, why + " (partner " + G.format(partner) + ")"});
    }
}

template <class Flow>
void window_rules(const PointOracle& y, const HElem& h, const GElem& loc, int depth, const Flow& flow,
                  std::size_t budget, std::vector<Violation>& out) {
    const auto& G = y.group();
    const CellLayout& l = y.layout();
    const Int w = window_halfwidth(l.p, depth), side = 2 * w + 1;
    const std::string tag = "window(", dtag = "," + std::to_string(depth) + ")";
    std::vector<CellSymbol> cells;
    cells.reserve(static_cast<std::size_t>(side * side));
    for (Int j = -w; j <= w; ++j)
        for (Int i = -w; i <= w; ++i) cells.push_back(y.at(G.mul(G.lift(h), G.translation({i, j}))));
    auto at = [&](Int i, Int j) -> const CellSymbol& { return cells[static_cast<std::size_t>((j + w) * side + i + w)]; };

    for (Vec2 v : nonzero_vectors(l.p)) {
        Patch patch({-w, -w}, side, side);
        patch.for_each([&](Vec2 pos, bool) { patch.set(pos, at(pos.x, pos.y).subs[l.sub(v)] != 0); });
        if (!is_in_language(SubRule(l.p, v), patch))
            out.push_back({tag + "sub" + vec_text(v) + dtag, loc, "Sub" + vec_text(v) + " window not in the language"});
    }

    const std::size_t n = l.toeplitz_count();
    for (std::size_t k = 0; k < n; ++k) {
        for (Int i = -w; i <= w; ++i)
            for (Int j = -w + 1; j <= w; ++j)
                if (at(i, j).hlayers[k] != at(i, -w).hlayers[k]) {
                    out.push_back({tag + "H" + std::to_string(k) + dtag, loc,
                                   "H layer " + std::to_string(k) + " not constant on column " + std::to_string(i)});
                    j = w;
                    i = w;
                }
        for (Int j = -w; j <= w; ++j)
            for (Int i = -w + 1; i <= w; ++i)
                if (at(i, j).vlayers[k] != at(-w, j).vlayers[k]) {
                    out.push_back({tag + "V" + std::to_string(k) + dtag, loc,
                                   "V layer " + std::to_string(k) + " not constant on row " + std::to_string(j)});
                    j = w;
                    i = w;
                }
    }

    LayerWord hw{l.p, l.d, std::vector<TWord>(n, TWord{-w, {}})}, vw = hw;
    for (std::size_t k = 0; k < n; ++k)
        for (Int c = -w; c <= w; ++c) {
            hw.layers[k].symbols.push_back(at(c, 0).hlayers[k]);
            vw.layers[k].symbols.push_back(at(0, c).vlayers[k]);
        }
    for (auto [name, word] : {std::pair{"H", &hw}, std::pair{"V", &vw}}) {
        Recognition r = recognize_top_word(l.p, *word, flow, depth, budget);
        if (!r.accepted())
            out.push_back({tag + "top" + name + dtag, loc,
                           std::string(name) + " layers rejected at " + to_string(r.stage) + ": " + r.reason});
    }
}

}  // namespace detail

/// Cell rules on ball(radius), glue rules between g and g(0,s^-1), window
/// rules on each normalized coset window c -> y((0,h)(c,1_H)). The result
/// is sorted by location.
inline std::vector<Violation> scan_rules(const PointOracle& y, int radius, const RuleSet& rules, int depth) {
    const auto& G = y.group();
    auto ball = G.ball(radius);
    auto cosets = ball_cosets(ball);
    std::vector<std::pair<HElem, GElem>> coset_list(cosets.begin(), cosets.end());
    const std::size_t nb = ball.size();
    const std::size_t tasks = nb + (rules.window ? coset_list.size() : 0);
    std::vector<std::vector<Violation>> found(tasks);
    detail::parallel_for(tasks, rules.threads, [&](std::size_t i) {
        if (i < nb) {
            if (rules.cell) detail::cell_rules(y, ball[i], found[i]);
            if (rules.glue) detail::glue_rules(y, ball[i], found[i]);
            return;
        }
        const auto& [h, loc] = coset_list[i - nb];
        if (rules.flow)
            detail::window_rules(y, h, loc, depth, *rules.flow, rules.budget, found[i]);
        else
            detail::window_rules(y, h, loc, depth, detail::NoFlowChecks{}, rules.budget, found[i]);
    });
    std::vector<Violation> out;
    for (auto& v : found) out.insert(out.end(), v.begin(), v.end());
    std::sort(out.begin(), out.end());
    return out;
}

struct EquivarianceResult {
    bool pass = false;
    Bits decoded;
    Bits expected;
    std::string detail;
};

/// Upsilon of sigma_(0,h)(y) against the first `depth` bits of f_h(x*).
inline EquivarianceResult check_equivariance(const FlowOracle& flow, std::shared_ptr<const PointOracle> y,
                                             const HElem& h, int depth) {
    EquivarianceResult r;
    for (Int n = 0; n < depth; ++n) r.expected.push_back(flow_point_eval(flow, h, n));
    ShiftedOracle shifted(y, y->group().lift(h));
    try {
        r.decoded = upsilon_decode(shifted, depth);
    } catch (const Inconsistent& e) {
        r.detail = e.what();
        return r;
    }
    r.pass = r.decoded == r.expected;
    if (!r.pass) r.detail = "decoded prefix differs from f_h(x*)";
    return r;
}

struct PeriodWitness {
    GElem g;
    std::optional<GElem> position;  // y(g^-1 position) != y(position)
    Int radius = 0;                 // search radius used
    std::string route;

    bool excluded() const { return position.has_value(); }
};

namespace detail {

/// Cells (n, 1_H) with |n| <= r, in Chebyshev shells around the origin.
template <class Visit>
bool visit_shells(Int r, Visit&& visit) {
    for (Int k = 0; k <= r; ++k)
        for (Int i = -k; i <= k; ++i)
            for (Int j = -k; j <= k; ++j) {
                if (std::max(i < 0 ? -i : i, j < 0 ? -j : j) != k) continue;
                if (visit(Vec2{i, j})) return true;
            }
    return false;
}

}  // namespace detail

/// Looks for a cell where sigma_g(y) and y differ among the cells
/// (n, h') with |n| <= radius and h' in the H-ball of radius 1.
inline PeriodWitness check_aperiodicity(const PointOracle& y, const GElem& g, Int radius) {
    const auto& G = y.group();
    const HGroup& H = G.H();
    const CellLayout& l = y.layout();
    if (g == G.identity()) throw Error("the identity is a period of every configuration");
    const GElem ginv = G.inv(g);
    PeriodWitness w{g, std::nullopt, radius, ""};
    auto differs = [&](const GElem& pos) { return y.at(G.mul(ginv, pos)) != y.at(pos); };
    auto on_base = [&](Vec2 n) { return G.translation(n); };
    auto try_at = [&](const GElem& pos, const char* route) {
        if (pos.vec.chebyshev() > radius || !differs(pos)) return false;
        w.position = pos;
        w.route = route;
        return true;
    };

    if (H.is_identity(g.h)) {
        // sigma_(z,1) moves the level-m lattice of Sub(1,1) off itself once
        // p^{m+1} > 2|z|
        Int zmax = g.vec.chebyshev(), per = l.p;
        Int scale = 1;
        while (per <= 2 * zmax) {
            per *= l.p;
            scale *= l.p;
        }
        Vec2 base{scale, scale};
        for (Int a = -2; a <= 2; ++a)
            for (Int b = -2; b <= 2; ++b)
                if (try_at(on_base(base + per * Vec2{a, b}), "lattice")) return w;
        // a translate of B_m can land on another level; then some lower or
        // higher lattice cell separates the two
        for (Int lv = 1; lv <= per * l.p; lv *= l.p)
            for (Int a = -l.p; a <= l.p; ++a)
                for (Int b = -l.p; b <= l.p; ++b)
                    if (try_at(on_base(lv * Vec2{1, 1} + lv * l.p * Vec2{a, b}), "lattice")) return w;
    } else {
        // Toeplitz H layers along row 0: f_s(f_h(x*)) against f_s(x*)
        bool hit = detail::visit_shells(radius, [&](Vec2 n) {
            if (n.y != 0 && n.x != 0) return false;
            GElem pos = on_base(n);
            CellSymbol a = y.at(G.mul(ginv, pos)), b = y.at(pos);
            if (a.hlayers == b.hlayers && a.vlayers == b.vlayers) return false;
            w.position = pos;
            w.route = "decoded layers";
            return true;
        });
        if (hit) return w;
    }

    if (detail::visit_shells(radius, [&](Vec2 n) { return try_at(on_base(n), "cells"); })) return w;
    for (const auto& h : H.ball(1)) {
        if (H.is_identity(h)) continue;
        if (detail::visit_shells(radius, [&](Vec2 n) { return try_at(G.mul(G.lift(h), G.translation(n)), "cells"); }))
            return w;
    }
    return w;
}

/// Changes one component of a cell to a different value.
template <class Rng>
std::string inject_fault(CellSymbol& c, Rng& rng) {
    const std::size_t nt = c.hlayers.size(), ns = c.subs.size();
    std::uniform_int_distribution<std::size_t> pick(0, 2 * nt + ns - 1);
    std::size_t k = pick(rng);
    if (k < 2 * nt) {
        auto& layer = k < nt ? c.hlayers : c.vlayers;
        std::size_t i = k % nt;
        std::uniform_int_distribution<int> step(1, 2);
        layer[i] = static_cast<TSym>((static_cast<int>(layer[i]) + step(rng)) % 3);
        return std::string(k < nt ? "H" : "V") + std::to_string(i);
    }
    c.subs[k - 2 * nt] ^= 1;
    return "sub" + std::to_string(k - 2 * nt);
}

}  // namespace sofic
