#pragma once

// The two-colour substitutions s_v on Z^2: each cell becomes a p x p block
// whose cell z is black iff z = v, or z = (0,0) and the source was black.

#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "sofic/core.hpp"

namespace sofic {

struct SubRule {
    Int p = 3;
    Vec2 v{1, 1};

    SubRule() = default;
    SubRule(Int p_, Vec2 v_) : p(p_), v(v_.mod(p_)) {
        if (p < 3) throw Error("substitution modulus must be at least 3");
        if (v == Vec2{0, 0}) throw Error("substitution vector must be nonzero mod p");
    }

    friend bool operator==(const SubRule&, const SubRule&) = default;
};

/// All nonzero vectors of (Z/pZ)^2 in the order (a,b) lexicographic.
inline std::vector<Vec2> nonzero_vectors(Int p = 3) {
    std::vector<Vec2> out;
    for (Int a = 0; a < p; ++a)
        for (Int b = 0; b < p; ++b)
            if (a != 0 || b != 0) out.push_back({a, b});
    return out;
}

/// A finite rectangle of white/black cells in absolute coordinates.
class Patch {
public:
    Patch() = default;
    Patch(Vec2 origin, Int width, Int height, bool fill = false)
        : origin_(origin), width_(width), height_(height),
          cells_(static_cast<std::size_t>(width * height), fill ? 1 : 0) {
        if (width < 0 || height < 0) throw Error("negative patch size");
    }

    Vec2 origin() const { return origin_; }
    Int width() const { return width_; }
    Int height() const { return height_; }
    bool empty() const { return width_ == 0 || height_ == 0; }

    bool contains(Vec2 pos) const {
        return pos.x >= origin_.x && pos.y >= origin_.y && pos.x < origin_.x + width_ &&
               pos.y < origin_.y + height_;
    }

    bool black(Vec2 pos) const { return cells_[index(pos)] != 0; }
    void set(Vec2 pos, bool b) { cells_[index(pos)] = b ? 1 : 0; }

    /// Colour by offset from the origin.
    bool local(Int dx, Int dy) const { return cells_[static_cast<std::size_t>(dy * width_ + dx)] != 0; }

    template <class F>
    void for_each(F&& f) const {
        for (Int dy = 0; dy < height_; ++dy)
            for (Int dx = 0; dx < width_; ++dx) f(Vec2{origin_.x + dx, origin_.y + dy}, local(dx, dy));
    }

    std::vector<Vec2> black_cells() const {
        std::vector<Vec2> out;
        for_each([&](Vec2 pos, bool b) {
            if (b) out.push_back(pos);
        });
        return out;
    }

    std::size_t count_black() const {
        std::size_t n = 0;
        for (auto c : cells_) n += c;
        return n;
    }

    /// Same cells, translated so that the origin moves to `origin`.
    Patch moved_to(Vec2 origin) const {
        Patch p = *this;
        p.origin_ = origin;
        return p;
    }

    Patch crop(Vec2 origin, Int width, Int height) const {
        Patch out(origin, width, height);
        out.for_each([&](Vec2 pos, bool) { out.set(pos, black(pos)); });
        return out;
    }

    friend bool operator==(const Patch&, const Patch&) = default;

private:
    std::size_t index(Vec2 pos) const {
        if (!contains(pos)) throw Error("position outside patch");
        return static_cast<std::size_t>((pos.y - origin_.y) * width_ + (pos.x - origin_.x));
    }

    Vec2 origin_{0, 0};
    Int width_ = 0;
    Int height_ = 0;
    std::vector<std::uint8_t> cells_;
};

inline Patch substitute_once(const SubRule& rule, const Patch& patch) {
    const Int p = rule.p;
    Patch out(p * patch.origin(), p * patch.width(), p * patch.height());
    patch.for_each([&](Vec2 c, bool b) {
        for (Int zy = 0; zy < p; ++zy)
            for (Int zx = 0; zx < p; ++zx) {
                Vec2 z{zx, zy};
                bool black = z == rule.v || (b && z == Vec2{0, 0});
                out.set(p * c + z, black);
            }
    });
    return out;
}

/// s_v^n(seed) as a p^n x p^n patch with origin (0,0).
inline Patch iterate(const SubRule& rule, bool seed_black, int n) {
    Patch out({0, 0}, 1, 1, seed_black);
    for (int i = 0; i < n; ++i) out = substitute_once(rule, out);
    return out;
}

/// The level-m black lattice anchor + p^m v + p^{m+1} Z^2.
struct Lattice {
    int level = 0;
    Vec2 anchor;  // reduced mod p^{level+1}
    Vec2 v;       // reduced mod p
    Int p = 3;

    Int period() const { return ipow(p, level + 1); }
    Vec2 offset() const { return (anchor + ipow(p, level) * v).mod(period()); }
    bool contains(Vec2 pos) const { return (pos - offset()).mod(period()) == Vec2{0, 0}; }

    friend bool operator==(const Lattice&, const Lattice&) = default;
};

struct LatticeDecomposition {
    SubRule rule;
    std::vector<Lattice> levels;
    std::optional<Vec2> residual;
};

struct Desubstitution {
    Patch quotient;
    Vec2 anchor;  // in [0,p)^2; quotient cell c sits at anchor + p c
};

namespace detail {

/// Residue classes r mod p that could be the level-0 black lattice: every
/// cell of the class inside the patch is black (and there is at least one),
/// and every black cell lies in class r or in the parent class r - v.
inline std::vector<Vec2> level0_candidates(const SubRule& rule, const Patch& patch) {
    const Int p = rule.p;
    std::vector<Vec2> out;
    std::vector<int> seen(static_cast<std::size_t>(p * p), 0), white(static_cast<std::size_t>(p * p), 0);
    patch.for_each([&](Vec2 pos, bool b) {
        Vec2 r = pos.mod(p);
        auto i = static_cast<std::size_t>(r.x * p + r.y);
        seen[i] = 1;
        if (!b) white[i] = 1;
    });
    auto blacks = patch.black_cells();
    for (Int rx = 0; rx < p; ++rx)
        for (Int ry = 0; ry < p; ++ry) {
            auto i = static_cast<std::size_t>(rx * p + ry);
            if (!seen[i] || white[i]) continue;
            Vec2 r{rx, ry};
            Vec2 parent = (r - rule.v).mod(p);
            bool ok = true;
            for (Vec2 b : blacks) {
                Vec2 c = b.mod(p);
                if (c != r && c != parent) {
                    ok = false;
                    break;
                }
            }
            if (ok) out.push_back(r);
        }
    return out;
}

inline Desubstitution quotient_for(const SubRule& rule, const Patch& patch, Vec2 r) {
    const Int p = rule.p;
    Vec2 anchor = (r - rule.v).mod(p);
    Vec2 o = patch.origin();
    Int x0 = floor_div(o.x - anchor.x + p - 1, p);
    Int x1 = floor_div(o.x + patch.width() - 1 - anchor.x, p);
    Int y0 = floor_div(o.y - anchor.y + p - 1, p);
    Int y1 = floor_div(o.y + patch.height() - 1 - anchor.y, p);
    Patch q({x0, y0}, std::max<Int>(0, x1 - x0 + 1), std::max<Int>(0, y1 - y0 + 1));
    q.for_each([&](Vec2 c, bool) { q.set(c, patch.black(anchor + p * c)); });
    return {std::move(q), anchor};
}

}  // namespace detail

/// Inverts one substitution step. Unique derivation guarantees a single
/// candidate class once both sides are at least 2p; smaller patches may be
/// ambiguous, which is reported as NotSubstitutive.
inline Desubstitution desubstitute(const SubRule& rule, const Patch& patch) {
    auto candidates = detail::level0_candidates(rule, patch);
    if (candidates.empty()) throw NotSubstitutive("no residue class carries the level-0 lattice");
    if (candidates.size() > 1) throw NotSubstitutive("level-0 lattice is ambiguous");
    return detail::quotient_for(rule, patch, candidates.front());
}

/// Finds B_0 ... B_maxlevel by repeated desubstitution. Black cells left
/// over after the last level form the residual, of which there may be at
/// most one.
inline LatticeDecomposition decompose_lattices(const SubRule& rule, const Patch& patch, int maxlevel) {
    if (maxlevel < 0) throw Error("maxlevel must be non-negative");
    const Int need = ipow(rule.p, maxlevel + 1);
    if (patch.width() < need || patch.height() < need)
        throw Error("patch side must be at least p^(maxlevel+1)");
    LatticeDecomposition out{rule, {}, std::nullopt};
    Patch current = patch;
    Vec2 base{0, 0};
    Int scale = 1;
    for (int m = 0; m <= maxlevel; ++m) {
        Desubstitution d = desubstitute(rule, current);
        base = base + scale * d.anchor;
        scale *= rule.p;
        out.levels.push_back({m, base.mod(scale), rule.v, rule.p});
        current = std::move(d.quotient);
    }
    auto rest = current.black_cells();
    if (rest.size() > 1) throw NotSubstitutive("more than one black cell outside the detected lattices");
    if (rest.size() == 1) out.residual = base + scale * rest.front();
    return out;
}

/// Image of a lattice under an automorphism A: the vector transforms by
/// A mod p and the anchor by A.
inline Lattice map_lattice(const Mat2& a, const Lattice& l) {
    Vec2 v = reduce_mod_p(a, l.p).apply(l.v);
    return {l.level, (a * l.anchor).mod(l.period()), v, l.p};
}

namespace detail {

inline bool occurs_in(const Patch& pattern, const Patch& host) {
    const Int w = pattern.width(), h = pattern.height();
    for (Int oy = 0; oy + h <= host.height(); ++oy)
        for (Int ox = 0; ox + w <= host.width(); ++ox) {
            bool match = true;
            for (Int dy = 0; dy < h && match; ++dy)
                for (Int dx = 0; dx < w; ++dx)
                    if (pattern.local(dx, dy) != host.local(ox + dx, oy + dy)) {
                        match = false;
                        break;
                    }
            if (match) return true;
        }
    return false;
}

}  // namespace detail

namespace detail {

inline std::vector<std::uint8_t> two_by_two_blocks(const Patch& host) {
    std::vector<std::uint8_t> seen(16, 0);
    for (Int dy = 0; dy + 1 < host.height(); ++dy)
        for (Int dx = 0; dx + 1 < host.width(); ++dx)
            seen[static_cast<std::size_t>(host.local(dx, dy) << 3 | host.local(dx + 1, dy) << 2 |
                                          host.local(dx, dy + 1) << 1 | host.local(dx + 1, dy + 1))] = 1;
    return seen;
}

}  // namespace detail

/// Depth from which s^n(black) contains every legal 2x2 block. The set of
/// 2x2 blocks of s(P) depends only on that of P, so one stable step
/// means stable forever.
inline int block_depth(const SubRule& rule) {
    auto prev = detail::two_by_two_blocks(iterate(rule, true, 1));
    for (int n = 1;; ++n) {
        auto next = detail::two_by_two_blocks(iterate(rule, true, n + 1));
        if (next == prev) return n;
        prev = std::move(next);
    }
}

/// Depth n such that every legal pattern of the given side occurs in
/// s^n(black): the pattern sits in the image under s^k of a legal 2x2
/// block once p^k >= side.
inline int language_depth(const SubRule& rule, Int side) {
    int k = 0;
    while (ipow(rule.p, k) < side) ++k;
    return k + block_depth(rule);
}

namespace detail {

inline std::uint64_t pack_window(const Patch& host, Int ox, Int oy, Int w, Int h) {
    std::uint64_t key = 0;
    for (Int dy = 0; dy < h; ++dy)
        for (Int dx = 0; dx < w; ++dx) key = key << 1 | (host.local(ox + dx, oy + dy) ? 1u : 0u);
    return key;
}

/// Packed w x h windows of s^n(black), for w * h <= 64, built once per
/// rule and shape.
inline const std::unordered_set<std::uint64_t>& window_set(const SubRule& rule, Int w, Int h) {
    using Key = std::tuple<Int, Int, Int, Int, Int>;
    static std::shared_mutex mutex;
    static std::map<Key, std::unordered_set<std::uint64_t>> cache;
    Key key{rule.p, rule.v.x, rule.v.y, w, h};
    {
        std::shared_lock lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    Patch host = iterate(rule, true, language_depth(rule, std::max(w, h)));
    std::unordered_set<std::uint64_t> set;
    for (Int oy = 0; oy + h <= host.height(); ++oy)
        for (Int ox = 0; ox + w <= host.width(); ++ox) set.insert(pack_window(host, ox, oy, w, h));
    std::unique_lock lock(mutex);
    return cache.try_emplace(key, std::move(set)).first->second;
}

}  // namespace detail

/// Offset search in s^n(black) with n = language_depth.
inline bool occurs_in_iterate(const SubRule& rule, const Patch& patch) {
    if (patch.empty()) return true;
    const Int w = patch.width(), h = patch.height();
    if (w * h <= 64) return detail::window_set(rule, w, h).contains(detail::pack_window(patch, 0, 0, w, h));
    Patch host = iterate(rule, true, language_depth(rule, std::max(w, h)));
    return detail::occurs_in(patch, host);
}

/// Membership of a finite pattern in the language of Sub_v: desubstitute
/// while both sides are at least 2p (trying every consistent level-0 class),
/// then search the small remainder exhaustively.
inline bool is_in_language(const SubRule& rule, const Patch& patch) {
    if (patch.width() < 2 * rule.p || patch.height() < 2 * rule.p) return occurs_in_iterate(rule, patch);
    for (Vec2 r : detail::level0_candidates(rule, patch))
        if (is_in_language(rule, detail::quotient_for(rule, patch, r).quotient)) return true;
    return false;
}

}  // namespace sofic
