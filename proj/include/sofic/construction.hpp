#pragma once

// The product alphabet of Pi(X,f), its local and glue rules, the explicit
// points y^h and y*, the decoder Upsilon and the projective read-back.

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "sofic/flows.hpp"
#include "sofic/substitution.hpp"
#include "sofic/toeplitz.hpp"

namespace sofic {

/// Index sets of one cell: Toeplitz layers by (q, s) in {1..p-1} x S and
/// substitution layers by v in (Z/pZ)^2 \ {0}.
struct CellLayout {
    Int p = 3;
    std::size_t d = 1;  // |S|, identity included

    std::size_t toeplitz_count() const { return static_cast<std::size_t>(p - 1) * d; }
    std::size_t subs_count() const { return static_cast<std::size_t>(p * p - 1); }
    std::size_t layer(Int q, std::size_t s) const { return static_cast<std::size_t>(q - 1) * d + s; }
    std::size_t sub(Vec2 v) const {
        Vec2 r = v.mod(p);
        if (r == Vec2{0, 0}) throw Error("substitution layer index must be nonzero");
        return static_cast<std::size_t>(r.x * p + r.y - 1);
    }

    friend bool operator==(const CellLayout&, const CellLayout&) = default;
};

struct CellSymbol {
    std::vector<TSym> hlayers;
    std::vector<TSym> vlayers;
    std::vector<std::uint8_t> subs;  // 1 = black

    static CellSymbol blank(const CellLayout& l) {
        return {std::vector<TSym>(l.toeplitz_count(), TSym::Dollar), std::vector<TSym>(l.toeplitz_count(), TSym::Dollar),
                std::vector<std::uint8_t>(l.subs_count(), 0)};
    }

    friend bool operator==(const CellSymbol&, const CellSymbol&) = default;
};

inline bool is_bit(TSym s) { return s != TSym::Dollar; }

/// Rules 1 and 2 of Pi on one cell. Rule 1 is read as: a black substitution
/// cell forces a non-$ symbol in the matching H and V layers.
inline bool pi_cell_check(const CellSymbol& c, const CellLayout& l, std::string* why = nullptr) {
    for (Vec2 v : nonzero_vectors(l.p)) {
        if (!c.subs[l.sub(v)]) continue;
        if (v.x != 0 && !is_bit(c.hlayers[l.layer(v.x, 0)])) {
            if (why) *why = "Sub(" + std::to_string(v.x) + "," + std::to_string(v.y) + ") black over $ in H layer";
            return false;
        }
        if (v.y != 0 && !is_bit(c.vlayers[l.layer(v.y, 0)])) {
            if (why) *why = "Sub(" + std::to_string(v.x) + "," + std::to_string(v.y) + ") black over $ in V layer";
            return false;
        }
    }
    if (c.subs[l.sub({1, 1})])
        for (std::size_t s = 0; s < l.d; ++s)
            if (c.hlayers[l.layer(1, s)] != c.vlayers[l.layer(1, s)]) {
                if (why) *why = "Sub(1,1) black but H and V layers (1," + std::to_string(s) + ") differ";
                return false;
            }
    return true;
}

/// Glue rule for generator s between c1 at (0,1_H) and c2 at (0,s^-1);
/// (a,b) is phi~_{s^-1}(1,1).
inline bool glue_check(std::size_t s, const CellSymbol& c1, const CellSymbol& c2, const ModMatrix& phi_s_inv,
                       const CellLayout& l, std::string* why = nullptr) {
    Vec2 ab = phi_s_inv.apply({1, 1});
    if (!c1.subs[l.sub(ab)]) return true;
    if (!c2.subs[l.sub({1, 1})]) {
        if (why) *why = "black Sub(a,b) not matched by black Sub(1,1) in the s^-1 coset";
        return false;
    }
    if (ab.x != 0 && c1.hlayers[l.layer(ab.x, s)] != c2.hlayers[l.layer(1, 0)]) {
        if (why) *why = "H layer (a,s) differs from H layer (1,1_H) across the glue";
        return false;
    }
    if (ab.y != 0 && c1.vlayers[l.layer(ab.y, s)] != c2.vlayers[l.layer(1, 0)]) {
        if (why) *why = "V layer (b,s) differs from V layer (1,1_H) across the glue";
        return false;
    }
    return true;
}

/// Colour of z_(a,b) at pos: black iff pos = p^m (a,b) mod p^{m+1} for some m.
inline bool build_zab(Int p, Vec2 v, Vec2 pos) {
    if (v.mod(p) == Vec2{0, 0}) throw Error("z_(a,b) needs (a,b) nonzero mod p");
    if (pos == Vec2{0, 0}) return false;
    Int scale = 1;
    for (;;) {
        Int per = scale * p;
        if ((pos - scale * v).mod(per) == Vec2{0, 0}) return true;
        // pos must be divisible by the current scale to match deeper levels
        if (pos.mod(per) != Vec2{0, 0}) return false;
        scale = per;
    }
}

/// Cell (i,j) of y^h: Toeplitz layers carry Psi_q(f_s(f_h(x*))) along
/// rows and columns, substitution layers carry z_v.
inline CellSymbol build_yh(const FlowOracle& flow, const CellLayout& l, const HElem& h, Vec2 pos) {
    const HGroup& H = flow.group();
    CellSymbol c = CellSymbol::blank(l);
    for (std::size_t s = 0; s < l.d; ++s) {
        HElem sh = H.mul(H.generator(s), h);
        for (Int q = 1; q < l.p; ++q) {
            if (auto n = psi_level(l.p, q, pos.x)) c.hlayers[l.layer(q, s)] = tsym_from_bit(flow.point_bit(sh, *n));
            if (auto n = psi_level(l.p, q, pos.y)) c.vlayers[l.layer(q, s)] = tsym_from_bit(flow.point_bit(sh, *n));
        }
    }
    for (Vec2 v : nonzero_vectors(l.p)) c.subs[l.sub(v)] = build_zab(l.p, v, pos) ? 1 : 0;
    return c;
}

/// y*((i,j),h) = y^{h^-1} at phi_{h^-1}(i,j).
inline CellSymbol build_ystar(const FlowOracle& flow, const Semidirect& G, const CellLayout& l, const GElem& g) {
    HElem hi = G.H().inv(g.h);
    return build_yh(flow, l, hi, G.H().phi(hi) * g.vec);
}

/// Pointwise access to a configuration of the G-subshift.
class PointOracle {
public:
    virtual ~PointOracle() = default;
    virtual const Semidirect& group() const = 0;
    virtual const CellLayout& layout() const = 0;
    virtual CellSymbol at(const GElem& g) const = 0;
};

/// y* over a flow with exact layer, memoized.
class YStarOracle : public PointOracle {
public:
    YStarOracle(std::shared_ptr<const FlowOracle> flow, std::shared_ptr<const HGroup> h, Int p = 3)
        : flow_(std::move(flow)), G_(std::move(h)), layout_{p, G_.H().size()} {
        if (!flow_->has_exact()) throw Error("y* needs a flow with an exact layer");
    }

    const Semidirect& group() const override { return G_; }
    const CellLayout& layout() const override { return layout_; }
    const FlowOracle& flow() const { return *flow_; }

    CellSymbol at(const GElem& g) const override {
        {
            std::shared_lock lock(mutex_);
            if (auto it = memo_.find(g); it != memo_.end()) return it->second;
        }
        CellSymbol c = build_ystar(*flow_, G_, layout_, g);
        std::unique_lock lock(mutex_);
        return memo_.try_emplace(g, std::move(c)).first->second;
    }

private:
    std::shared_ptr<const FlowOracle> flow_;
    Semidirect G_;
    CellLayout layout_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<GElem, CellSymbol, GElemHash> memo_;
};

/// Finitely many recorded cells, e.g. read back from a dump.
class TableOracle : public PointOracle {
public:
    TableOracle(std::shared_ptr<const HGroup> h, CellLayout l) : G_(std::move(h)), layout_(l) {}

    const Semidirect& group() const override { return G_; }
    const CellLayout& layout() const override { return layout_; }

    void set(const GElem& g, CellSymbol c) { cells_[g] = std::move(c); }
    bool contains(const GElem& g) const { return cells_.contains(g); }
    const std::unordered_map<GElem, CellSymbol, GElemHash>& cells() const { return cells_; }

    CellSymbol at(const GElem& g) const override {
        auto it = cells_.find(g);
        if (it == cells_.end()) throw BudgetExceeded("cell " + G_.format(g) + " is not recorded");
        return it->second;
    }

private:
    Semidirect G_;
    CellLayout layout_;
    std::unordered_map<GElem, CellSymbol, GElemHash> cells_;
};

/// A base oracle with some cells replaced.
class OverrideOracle : public PointOracle {
public:
    explicit OverrideOracle(std::shared_ptr<const PointOracle> base) : base_(std::move(base)) {}

    const Semidirect& group() const override { return base_->group(); }
    const CellLayout& layout() const override { return base_->layout(); }
    void set(const GElem& g, CellSymbol c) { over_[g] = std::move(c); }

    CellSymbol at(const GElem& g) const override {
        if (auto it = over_.find(g); it != over_.end()) return it->second;
        return base_->at(g);
    }

private:
    std::shared_ptr<const PointOracle> base_;
    std::unordered_map<GElem, CellSymbol, GElemHash> over_;
};

/// sigma_t(y): the cell at g is y(t^-1 g).
class ShiftedOracle : public PointOracle {
public:
    ShiftedOracle(std::shared_ptr<const PointOracle> base, GElem t)
        : base_(std::move(base)), t_inv_(base_->group().inv(t)) {}

    const Semidirect& group() const override { return base_->group(); }
    const CellLayout& layout() const override { return base_->layout(); }
    CellSymbol at(const GElem& g) const override { return base_->at(group().mul(t_inv_, g)); }

private:
    std::shared_ptr<const PointOracle> base_;
    GElem t_inv_;
};

/// The Sub_v layer of the (Z^2, 1_H) coset on [origin, origin + side)^2.
inline Patch coset_patch(const PointOracle& y, Vec2 v, Vec2 origin, Int side) {
    const CellLayout& l = y.layout();
    const auto& G = y.group();
    Patch out(origin, side, side);
    out.for_each([&](Vec2 pos, bool) { out.set(pos, y.at({pos, G.H().identity()}).subs[l.sub(v)] != 0); });
    return out;
}

/// Reads x_0 ... x_{depth-1}: x_m is the H-layer (1, 1_H) symbol on the
/// level-m lattice of Sub(1,1) in the (Z^2, 1_H) coset.
inline Bits upsilon_decode(const PointOracle& y, int depth) {
    if (depth <= 0) return {};
    const CellLayout& l = y.layout();
    const Int side = ipow(l.p, depth + 1);
    const auto& G = y.group();
    Patch sub = coset_patch(y, {1, 1}, {0, 0}, side);
    LatticeDecomposition dec;
    try {
        dec = decompose_lattices(SubRule(l.p, {1, 1}), sub, depth - 1);
    } catch (const NotSubstitutive& e) {
        throw Inconsistent(std::string("Sub(1,1) layer has no lattice structure: ") + e.what());
    }
    Bits out;
    for (const auto& lat : dec.levels) {
        std::optional<TSym> seen;
        sub.for_each([&](Vec2 pos, bool) {
            if (!lat.contains(pos)) return;
            TSym s = y.at({pos, G.H().identity()}).hlayers[l.layer(1, 0)];
            if (!is_bit(s))
                throw Inconsistent("level " + std::to_string(lat.level) + " lattice cell (" + std::to_string(pos.x) +
                                   "," + std::to_string(pos.y) + ") carries $");
            if (seen && *seen != s)
                throw Inconsistent("level " + std::to_string(lat.level) + " lattice carries two symbols");
            seen = s;
        });
        if (!seen) throw Inconsistent("level " + std::to_string(lat.level) + " lattice misses the window");
        out.push_back(*seen == TSym::One ? 1 : 0);
    }
    return out;
}

/// 0 iff the cyclic word u0 u1 u2 has a 0 directly followed by $.
inline std::uint8_t proj_phi(const std::array<TSym, 3>& u) {
    for (std::size_t i = 0; i < 3; ++i)
        if (u[i] == TSym::Zero && u[(i + 1) % 3] == TSym::Dollar) return 0;
    return 1;
}

/// Symbol at h of the H-projective subdynamics, read from the H layer
/// (1, 1_H) on (0,h)((i,0),1_H) for i < 3^k. With k = 1 this is proj_phi;
/// with more bits per symbol the cells are Toeplitz-decoded.
inline std::map<HElem, int> projective_read(const PointOracle& y, const std::vector<HElem>& hs, int k = 1) {
    const auto& G = y.group();
    const CellLayout& l = y.layout();
    std::map<HElem, int> out;
    for (const auto& h : hs) {
        GElem base = G.lift(h);
        auto cell = [&](Int i) { return y.at(G.mul(base, G.translation({i, 0}))).hlayers[l.layer(1, 0)]; };
        if (k == 1) {
            out[h] = proj_phi({cell(0), cell(1), cell(2)});
            continue;
        }
        TWord w{0, {}};
        for (Int i = 0; i < ipow(l.p, k); ++i) w.symbols.push_back(cell(i));
        Bits bits = decode(l.p, 1, w, k).prefix;
        int a = 0;
        for (int b = 0; b < k; ++b) a |= bits[static_cast<std::size_t>(b)] << b;
        out[h] = a;
    }
    return out;
}

}  // namespace sofic
