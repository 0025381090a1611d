#pragma once

// Toeplitz encodings of binary sequences over {0, 1, $}: position j carries
// x_n when j = q p^n mod p^{n+1}, and $ otherwise.

#include <optional>
#include <string>
#include <vector>

#include "sofic/core.hpp"

namespace sofic {

enum class TSym : std::uint8_t { Zero = 0, One = 1, Dollar = 2 };

inline char to_char(TSym s) { return s == TSym::Zero ? '0' : s == TSym::One ? '1' : '$'; }

inline TSym tsym_from_char(char c) {
    switch (c) {
        case '0': return TSym::Zero;
        case '1': return TSym::One;
        case '$': return TSym::Dollar;
        default: throw ParseError(std::string("invalid Toeplitz symbol '") + c + "'");
    }
}

inline TSym tsym_from_bit(std::uint8_t b) { return b ? TSym::One : TSym::Zero; }

using Bits = std::vector<std::uint8_t>;

/// A finite window [start, start + size) of a Z-indexed sequence.
template <class T>
struct Window {
    Int start = 0;
    std::vector<T> symbols;

    Int size() const { return static_cast<Int>(symbols.size()); }
    Int last() const { return start + size() - 1; }
    bool empty() const { return symbols.empty(); }
    bool contains(Int j) const { return j >= start && j <= last(); }
    const T& at(Int j) const { return symbols.at(static_cast<std::size_t>(j - start)); }
    T& at(Int j) { return symbols.at(static_cast<std::size_t>(j - start)); }

    friend bool operator==(const Window&, const Window&) = default;
};

using TWord = Window<TSym>;

inline std::string to_string(const TWord& w) {
    std::string s;
    for (TSym c : w.symbols) s += to_char(c);
    return s;
}

inline TWord tword_from_string(Int start, const std::string& text) {
    TWord w{start, {}};
    for (char c : text) w.symbols.push_back(tsym_from_char(c));
    return w;
}

/// The level n with j = q p^n mod p^{n+1}, if any.
inline std::optional<int> psi_level(Int p, Int q, Int j) {
    if (j == 0) return std::nullopt;
    int n = 0;
    while (j % p == 0) {
        j /= p;
        ++n;
    }
    if (floor_mod(j, p) != q) return std::nullopt;
    return n;
}

/// Psi_q(x) restricted to [lo, hi].
inline TWord psi_encode(Int p, Int q, const Bits& x, Int lo, Int hi) {
    if (p < 3 || q < 1 || q >= p) throw Error("psi_encode needs p >= 3 and 1 <= q < p");
    TWord w{lo, {}};
    for (Int j = lo; j <= hi; ++j) {
        auto n = psi_level(p, q, j);
        if (!n) {
            w.symbols.push_back(TSym::Dollar);
            continue;
        }
        if (static_cast<std::size_t>(*n) >= x.size())
            throw InsufficientPrefix("position " + std::to_string(j) + " needs x_" + std::to_string(*n));
        w.symbols.push_back(tsym_from_bit(x[static_cast<std::size_t>(*n)]));
    }
    return w;
}

/// (Omega_k y)_j = y_{jp+k}, on every j whose source lies in the window.
template <class T>
Window<T> omega(Int p, Int k, const Window<T>& w) {
    Window<T> out{floor_div(w.start - k + p - 1, p), {}};
    if (w.empty()) return out;
    Int hi = floor_div(w.last() - k, p);
    for (Int j = out.start; j <= hi; ++j) out.symbols.push_back(w.at(j * p + k));
    return out;
}

struct AnchorClass {
    Int k0 = 0;       // (residue - q) mod p
    Int residue = 0;  // class carrying the level symbol
    TSym symbol = TSym::Dollar;
};

/// Locates the unique residue class whose cells carry one common non-$
/// symbol, each preceded by q-1 and followed by p-q-1 dollars.
inline AnchorClass locate_anchor_class(Int p, Int q, const TWord& w) {
    std::optional<AnchorClass> found;
    for (Int r = 0; r < p; ++r) {
        std::optional<TSym> sym;
        bool ok = true, any = false;
        for (Int j = w.start + floor_mod(r - w.start, p); j <= w.last() && ok; j += p) {
            any = true;
            TSym s = w.at(j);
            if (s == TSym::Dollar || (sym && *sym != s)) {
                ok = false;
                break;
            }
            sym = s;
            for (Int d = 1; d <= q - 1; ++d)
                if (w.contains(j - d) && w.at(j - d) != TSym::Dollar) ok = false;
            for (Int d = 1; d <= p - q - 1; ++d)
                if (w.contains(j + d) && w.at(j + d) != TSym::Dollar) ok = false;
        }
        if (!ok || !any) continue;
        if (found) throw NotToeplitz("more than one residue class qualifies as the x_0 class");
        found = AnchorClass{floor_mod(r - q, p), r, *sym};
    }
    if (!found) throw NotToeplitz("no residue class carries a constant symbol framed by $");
    return *found;
}

inline Int find_k0(Int p, Int q, const TWord& w) { return locate_anchor_class(p, q, w).k0; }

struct DecodeResult {
    Bits prefix;
    std::vector<Int> k_chain;  // k0 of each Omega step taken
    std::optional<Int> residual;
};

/// Reads x_0 ... x_{depth-1} from a window of the orbit closure of
/// Psi_q(x) by alternating anchor detection and Omega_{k0}.
inline DecodeResult decode(Int p, Int q, TWord w, int depth) {
    DecodeResult out;
    Int base = 0, scale = 1;
    for (int level = 0; level < depth; ++level) {
        if (w.empty()) throw WindowTooSmall("window exhausted at level " + std::to_string(level));
        AnchorClass a;
        try {
            a = locate_anchor_class(p, q, w);
        } catch (const NotToeplitz& e) {
            if (level > 0 && w.size() < 2 * p + 1)
                throw WindowTooSmall("window too short at level " + std::to_string(level) + ": " + e.what());
            throw;
        }
        out.prefix.push_back(a.symbol == TSym::One ? 1 : 0);
        if (level + 1 < depth) {
            out.k_chain.push_back(a.k0);
            base += scale * a.k0;
            scale *= p;
            w = omega(p, a.k0, w);
        } else {
            for (Int j = w.start; j <= w.last(); ++j)
                if (w.at(j) != TSym::Dollar && floor_mod(j - a.residue, p) != 0) {
                    out.residual = base + scale * j;
                    break;
                }
        }
    }
    return out;
}

/// Layers indexed by (q, s) in {1..p-1} x S, all on the same interval.
struct LayerWord {
    Int p = 3;
    std::size_t generators = 1;
    std::vector<TWord> layers;  // index (q-1) * generators + s

    const TWord& layer(Int q, std::size_t s) const {
        return layers.at(static_cast<std::size_t>(q - 1) * generators + s);
    }
    TWord& layer(Int q, std::size_t s) { return layers.at(static_cast<std::size_t>(q - 1) * generators + s); }
};

enum class RecognitionStage { Accepted, Structure, Alignment, CrossQ, Flow };

inline const char* to_string(RecognitionStage s) {
    switch (s) {
        case RecognitionStage::Accepted: return "accepted";
        case RecognitionStage::Structure: return "structure";
        case RecognitionStage::Alignment: return "alignment";
        case RecognitionStage::CrossQ: return "cross-q";
        case RecognitionStage::Flow: return "flow";
    }
    return "?";
}

struct Recognition {
    RecognitionStage stage = RecognitionStage::Accepted;
    std::string reason;

    bool accepted() const { return stage == RecognitionStage::Accepted; }
};

/// Every p-length factor is a cyclic permutation of a $^{q-1} b $^{p-q-1}
/// with b in {0,1}.
inline bool has_gap_structure(Int p, Int q, const TWord& w) {
    for (Int i = w.start; i + p - 1 <= w.last(); ++i) {
        bool any_rotation = false;
        for (Int t = 0; t < p && !any_rotation; ++t) {
            bool ok = true;
            for (Int idx = 0; idx < p && ok; ++idx) {
                TSym s = w.at(i + floor_mod(t + idx, p));
                if (idx == 0) continue;
                if (idx == q)
                    ok = s != TSym::Dollar;
                else
                    ok = s == TSym::Dollar;
            }
            any_rotation = ok;
        }
        if (!any_rotation) return false;
    }
    return true;
}

/// Recognizer for finite windows of Top(X,f). `Flow` must provide
///   bool word_forbidden(const Bits& w, std::size_t budget) const;
///   bool action_incompatible(std::size_t s, const Bits& ws, const Bits& w1,
///                            std::size_t budget) const;
/// Acceptance is a semi-decision: it holds up to the given budget.
template <class Flow>
Recognition recognize_top_word(Int p, const LayerWord& lw, const Flow& flow, int depth, std::size_t budget) {
    const std::size_t d = lw.generators;
    std::vector<TWord> current = lw.layers;
    std::vector<Bits> decoded(current.size());
    for (int level = 0; level < depth; ++level) {
        std::optional<Int> k0;
        for (std::size_t i = 0; i < current.size(); ++i) {
            Int q = static_cast<Int>(i / d) + 1;
            if (!has_gap_structure(p, q, current[i]))
                return {RecognitionStage::Structure,
                        "layer (q=" + std::to_string(q) + ",s=" + std::to_string(i % d) + ") level " +
                            std::to_string(level) + ": factor is not a framed cyclic permutation"};
            AnchorClass a;
            try {
                a = locate_anchor_class(p, q, current[i]);
            } catch (const NotToeplitz& e) {
                return {RecognitionStage::Structure, std::string("level ") + std::to_string(level) + ": " + e.what()};
            }
            if (k0 && *k0 != a.k0)
                return {RecognitionStage::Alignment,
                        "level " + std::to_string(level) + ": k0 differs between layers"};
            k0 = a.k0;
            decoded[i].push_back(a.symbol == TSym::One ? 1 : 0);
        }
        if (level + 1 < depth)
            for (auto& w : current) w = omega(p, *k0, w);
    }
    for (std::size_t s = 0; s < d; ++s)
        for (Int q = 2; q < p; ++q)
            if (decoded[static_cast<std::size_t>(q - 1) * d + s] != decoded[s])
                return {RecognitionStage::CrossQ, "generator " + std::to_string(s) + ": q=" + std::to_string(q) +
                                                       " decodes a different word than q=1"};
    for (std::size_t s = 0; s < d; ++s) {
        if (flow.word_forbidden(decoded[s], budget))
            return {RecognitionStage::Flow, "decoded word of generator " + std::to_string(s) + " is forbidden"};
        if (flow.action_incompatible(s, decoded[s], decoded[0], budget))
            return {RecognitionStage::Flow,
                    "decoded word of generator " + std::to_string(s) + " is not the image of the base word"};
    }
    return {};
}

}  // namespace sofic
