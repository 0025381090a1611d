#pragma once

// Effectively closed H-flows on {0,1}^N given as budget-truncated oracles,
// the recoding of an H-subshift into such a flow, and the way back.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sofic/groups.hpp"
#include "sofic/toeplitz.hpp"

namespace sofic {

/// A cylinder set named by a partial assignment coordinate -> bit. A binary
/// word w is the assignment {0: w_0, ..., |w|-1: w_{|w|-1}}.
using Cylinder = std::map<Int, std::uint8_t>;

inline Cylinder cylinder_of(const Bits& w) {
    Cylinder c;
    for (std::size_t i = 0; i < w.size(); ++i) c.emplace(static_cast<Int>(i), w[i]);
    return c;
}

/// Merge of two assignments; nullopt if they disagree somewhere.
inline std::optional<Cylinder> merge(const Cylinder& a, const Cylinder& b) {
    Cylinder out = a;
    for (const auto& [i, v] : b) {
        auto [it, inserted] = out.emplace(i, v);
        if (!inserted && it->second != v) return std::nullopt;
    }
    return out;
}

/// [big] is inside [small], i.e. big extends small.
inline bool extends(const Cylinder& big, const Cylinder& small) {
    for (const auto& [i, v] : small) {
        auto it = big.find(i);
        if (it == big.end() || it->second != v) return false;
    }
    return true;
}

/// Finite pattern named without choosing coset representatives: the symbol
/// `second` sits at the group element spelled by `first`.
struct PatternCoding {
    std::vector<std::pair<Word, int>> cells;

    friend auto operator<=>(const PatternCoding&, const PatternCoding&) = default;
};

/// Effectively closed flow: the complement of X and of the preimages
/// f_s^{-1}([w]) are enumerated up to a budget.
class FlowOracle {
public:
    virtual ~FlowOracle() = default;

    virtual const HGroup& group() const = 0;
    /// Cylinders disjoint from X found within the budget.
    virtual std::vector<Cylinder> forbidden_words(std::size_t budget) const = 0;
    /// Cylinders covering part of the complement of f_s^{-1}([w]); s indexes S.
    virtual std::vector<Cylinder> action_forbidden(std::size_t s, const Cylinder& w, std::size_t budget) const = 0;

    virtual bool has_exact() const { return false; }
    /// Bit n of f_h(x*).
    virtual std::uint8_t point_bit(const HElem&, Int) const { throw Error("flow has no exact layer"); }

    /// Prefix of f_h(x*).
    Bits point_prefix(const HElem& h, Int n) const {
        Bits out;
        for (Int i = 0; i < n; ++i) out.push_back(point_bit(h, i));
        return out;
    }

    /// The word w meets a forbidden cylinder entirely.
    bool word_forbidden(const Bits& w, std::size_t budget) const {
        Cylinder c = cylinder_of(w);
        for (const auto& f : forbidden_words(budget))
            if (extends(c, f)) return true;
        return false;
    }

    /// No x in [w1] has f_s(x) in [ws], as far as the budget shows.
    bool action_incompatible(std::size_t s, const Bits& ws, const Bits& w1, std::size_t budget) const {
        Cylinder c = cylinder_of(w1);
        for (const auto& f : action_forbidden(s, cylinder_of(ws), budget))
            if (extends(c, f)) return true;
        return false;
    }
};

/// Effectively closed H-subshift over {0, ..., alphabet-1}.
class SubshiftOracle {
public:
    virtual ~SubshiftOracle() = default;

    virtual const HGroup& group() const = 0;
    virtual std::shared_ptr<const HGroup> group_ptr() const = 0;
    virtual int alphabet() const = 0;
    virtual std::vector<PatternCoding> forbidden_codings(std::size_t budget) const = 0;
    virtual bool has_exact() const { return false; }
    virtual int exact(const HElem&) const { throw Error("subshift has no exact point"); }
};

/// Words over S u S^-1 in length-lex order (letter order e, s1, s1^-1, ...),
/// extended on demand. Word n names the group element element(n).
class CoordinateEnumeration {
public:
    explicit CoordinateEnumeration(std::shared_ptr<const HGroup> h, std::size_t max_words = std::size_t{1} << 21)
        : h_(std::move(h)), letters_(h_->symmetric_letters()), max_words_(max_words) {
        words_.push_back({});
        elems_.push_back(h_->identity());
        first_.emplace(h_->identity(), 0);
    }

    const HGroup& group() const { return *h_; }

    Word word(std::size_t n) const {
        ensure(n + 1);
        std::shared_lock lock(mutex_);
        return words_[n];
    }

    HElem element(std::size_t n) const {
        ensure(n + 1);
        std::shared_lock lock(mutex_);
        return elems_[n];
    }

    /// Least n with element(n) = g, searching only below `limit`.
    std::optional<std::size_t> index_within(const HElem& g, std::size_t limit) const {
        ensure(limit);
        std::shared_lock lock(mutex_);
        auto it = first_.find(g);
        if (it != first_.end() && it->second < limit) return it->second;
        return std::nullopt;
    }

    /// Least n with element(n) = g.
    std::size_t index_of(const HElem& g) const {
        {
            std::shared_lock lock(mutex_);
            if (auto it = first_.find(g); it != first_.end()) return it->second;
        }
        std::size_t target = 1;
        for (;;) {
            {
                std::shared_lock lock(mutex_);
                if (auto it = first_.find(g); it != first_.end()) return it->second;
                target = words_.size() * letters_.size() + 1;
            }
            if (target > max_words_)
                throw BudgetExceeded("element " + format_elem(g) + " not reached within the enumeration budget");
            ensure(target);
        }
    }

private:
    void ensure(std::size_t count) const {
        {
            std::shared_lock lock(mutex_);
            if (words_.size() >= count) return;
        }
        if (count > max_words_) throw BudgetExceeded("coordinate enumeration budget exceeded");
        std::unique_lock lock(mutex_);
        while (words_.size() < count) {
            // words of the next length come from the current level in order
            const Word base = words_[parent_];
            const HElem base_elem = elems_[parent_];
            for (const auto& l : letters_) {
                Word w = base;
                w.push_back(l);
                HElem g = h_->mul(base_elem, h_->letter(l));
                first_.try_emplace(g, words_.size());
                words_.push_back(std::move(w));
                elems_.push_back(std::move(g));
            }
            ++parent_;
        }
    }

    std::shared_ptr<const HGroup> h_;
    std::vector<Letter> letters_;
    std::size_t max_words_;
    mutable std::shared_mutex mutex_;
    mutable std::vector<Word> words_;
    mutable std::vector<HElem> elems_;
    mutable std::map<HElem, std::size_t> first_;
    mutable std::size_t parent_ = 0;
};

inline int bits_per_symbol(int alphabet) {
    int k = 1;
    while ((1 << k) < alphabet) ++k;
    return k;
}

/// The flow (rho(Z), shift) on {0,1}^N: rho(z)_n = bit (n mod k) of
/// z at element(n / k).
class RecodedFlow : public FlowOracle {
public:
    explicit RecodedFlow(std::shared_ptr<const SubshiftOracle> z)
        : z_(std::move(z)), enum_(z_->group_ptr()), k_(bits_per_symbol(z_->alphabet())) {}

    const HGroup& group() const override { return z_->group(); }
    const SubshiftOracle& subshift() const { return *z_; }
    const CoordinateEnumeration& coordinates() const { return enum_; }
    int k() const { return k_; }

    std::vector<Cylinder> forbidden_words(std::size_t budget) const override {
        std::set<Cylinder> out;
        // the same element named twice must carry the same code
        for (std::size_t n = 1; n < budget; ++n) {
            std::size_t least = enum_.index_of(enum_.element(n));
            if (least == n) continue;
            for (int b = 0; b < k_; ++b)
                for (std::uint8_t v : {0, 1})
                    out.insert(Cylinder{{coord(least, b), v}, {coord(n, b), static_cast<std::uint8_t>(1 - v)}});
        }
        // codes that name no symbol
        for (std::size_t n = 0; n < budget; ++n)
            for (int a = z_->alphabet(); a < (1 << k_); ++a) out.insert(code_cylinder(n, a));
        // forbidden patterns of Z at every translate among the first coordinates
        auto codings = z_->forbidden_codings(budget);
        std::set<HElem> translates;
        for (std::size_t n = 0; n < budget; ++n) translates.insert(enum_.element(n));
        for (const HElem& g : translates)
            for (const auto& c : codings) {
                Cylinder cyl;
                bool ok = true;
                for (const auto& [w, a] : c.cells) {
                    auto idx = enum_.index_within(group().mul(g, group().eval(w)), budget);
                    if (!idx) {
                        ok = false;
                        break;
                    }
                    auto m = merge(cyl, code_cylinder(*idx, a));
                    if (!m) {
                        ok = false;
                        break;
                    }
                    cyl = std::move(*m);
                }
                if (ok) out.insert(std::move(cyl));
            }
        return {out.begin(), out.end()};
    }

    /// Coordinate of f_h(x) at index n, as a coordinate of x.
    Int source_coordinate(const HElem& h, Int n) const {
        HElem g = group().mul(group().inv(h), enum_.element(static_cast<std::size_t>(n / k_)));
        return coord(enum_.index_of(g), static_cast<int>(n % k_));
    }

    /// The cylinder f_h^{-1}([w]), or nullopt when it is empty.
    std::optional<Cylinder> pullback(const HElem& h, const Cylinder& w) const {
        Cylinder out;
        for (const auto& [n, v] : w) {
            auto [it, inserted] = out.emplace(source_coordinate(h, n), v);
            if (!inserted && it->second != v) return std::nullopt;
        }
        return out;
    }

    std::vector<Cylinder> action_forbidden(std::size_t s, const Cylinder& w, std::size_t) const override {
        auto pre = pullback(group().generator(s), w);
        if (!pre) return {Cylinder{}};
        std::vector<Cylinder> out;
        for (const auto& [i, v] : *pre) out.push_back(Cylinder{{i, static_cast<std::uint8_t>(1 - v)}});
        return out;
    }

    bool has_exact() const override { return z_->has_exact(); }

    /// Reads z* at h^-1 element(n / k) directly.
    std::uint8_t point_bit(const HElem& h, Int n) const override {
        HElem g = group().mul(group().inv(h), enum_.element(static_cast<std::size_t>(n / k_)));
        return static_cast<std::uint8_t>(z_->exact(g) >> (n % k_) & 1);
    }

    /// Same bit, through the coordinate map n -> source coordinate and
    /// then x* itself.
    std::uint8_t point_bit_via_coordinates(const HElem& h, Int n) const {
        Int m = source_coordinate(h, n);
        return point_bit(group().identity(), m);
    }

private:
    Int coord(std::size_t n, int b) const { return static_cast<Int>(n) * k_ + b; }

    Cylinder code_cylinder(std::size_t n, int a) const {
        Cylinder c;
        for (int b = 0; b < k_; ++b) c.emplace(coord(n, b), static_cast<std::uint8_t>(a >> b & 1));
        return c;
    }

    std::shared_ptr<const SubshiftOracle> z_;
    CoordinateEnumeration enum_;
    int k_;
};

inline std::shared_ptr<RecodedFlow> recode_subshift(std::shared_ptr<const SubshiftOracle> z) {
    return std::make_shared<RecodedFlow>(std::move(z));
}

/// All colourings, with a hash-derived designated point.
class FullShift : public SubshiftOracle {
public:
    FullShift(std::shared_ptr<const HGroup> h, int colors) : h_(std::move(h)), colors_(colors) {
        if (colors < 1) throw Error("full shift needs at least one colour");
    }
    const HGroup& group() const override { return *h_; }
    std::shared_ptr<const HGroup> group_ptr() const override { return h_; }
    int alphabet() const override { return colors_; }
    std::vector<PatternCoding> forbidden_codings(std::size_t) const override { return {}; }
    bool has_exact() const override { return true; }
    int exact(const HElem& h) const override {
        std::uint64_t x = 0x9E3779B97F4A7C15ULL;
        for (Int v : h) x = (x ^ static_cast<std::uint64_t>(v)) * 0xBF58476D1CE4E5B9ULL;
        x ^= x >> 31;
        return static_cast<int>(x % static_cast<std::uint64_t>(colors_));
    }

private:
    std::shared_ptr<const HGroup> h_;
    int colors_;
};

/// Colourings of the right Cayley graph of H with no simple path of at most
/// 2L vertices reading a square ww.
class SquareFreeSubshift : public SubshiftOracle {
public:
    SquareFreeSubshift(std::shared_ptr<const HGroup> h, int colors, int path_budget, int radius)
        : h_(std::move(h)), colors_(colors), L_(path_budget), radius_(radius) {
        if (colors < 1 || path_budget < 1 || radius < 0) throw Error("invalid square-free parameters");
        solve();
    }

    const HGroup& group() const override { return *h_; }
    std::shared_ptr<const HGroup> group_ptr() const override { return h_; }
    int alphabet() const override { return colors_; }
    int path_budget() const { return L_; }
    int radius() const { return radius_; }
    const std::vector<HElem>& ball() const { return order_; }

    bool has_exact() const override { return true; }
    int exact(const HElem& h) const override {
        auto it = colour_.find(h);
        if (it == colour_.end())
            throw BudgetExceeded("element " + format_elem(h) + " lies outside the coloured ball of radius " +
                                 std::to_string(radius_));
        return it->second;
    }

    /// Square patterns along simple paths from the identity with at most
    /// min(budget, 2L) vertices.
    std::vector<PatternCoding> forbidden_codings(std::size_t budget) const override {
        std::vector<PatternCoding> out;
        const std::size_t max_vertices = std::min<std::size_t>(budget, static_cast<std::size_t>(2 * L_));
        auto letters = non_identity_letters();
        std::vector<Word> prefixes{{}};
        std::vector<HElem> visited{h_->identity()};
        std::function<void()> extend = [&] {
            std::size_t v = prefixes.size();
            if (v % 2 == 0 && v >= 2) emit_squares(prefixes, out);
            if (v >= max_vertices) return;
            for (const auto& l : letters) {
                HElem n = h_->mul(visited.back(), h_->letter(l));
                if (std::find(visited.begin(), visited.end(), n) != visited.end()) continue;
                Word w = prefixes.back();
                w.push_back(l);
                prefixes.push_back(std::move(w));
                visited.push_back(n);
                extend();
                prefixes.pop_back();
                visited.pop_back();
            }
        };
        extend();
        return out;
    }

    /// Neighbours h s^{+-1} in the right Cayley graph.
    std::vector<HElem> neighbours(const HElem& h) const {
        std::vector<HElem> out;
        for (const auto& l : non_identity_letters()) {
            HElem n = h_->mul(h, h_->letter(l));
            if (n != h && std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
        }
        return out;
    }

    /// Some simple path of at most 2L vertices inside `colours` reading a
    /// square, if any passes through v.
    template <class Lookup>
    bool square_through(const HElem& v, const Lookup& colour_of) const {
        std::vector<std::vector<HElem>> arms;
        std::vector<HElem> path{v};
        collect_arms(path, colour_of, arms);
        for (const auto& a : arms)
            for (const auto& b : arms) {
                std::size_t total = a.size() + b.size() - 1;
                if (total % 2 || total > static_cast<std::size_t>(2 * L_) || total < 2) continue;
                if (!disjoint_apart_from_root(a, b)) continue;
                // the path reads reverse(a) then b without the shared root
                std::vector<int> colours;
                for (std::size_t i = a.size(); i-- > 0;) colours.push_back(colour_of(a[i]));
                for (std::size_t i = 1; i < b.size(); ++i) colours.push_back(colour_of(b[i]));
                std::size_t half = total / 2;
                if (std::equal(colours.begin(), colours.begin() + static_cast<std::ptrdiff_t>(half),
                               colours.begin() + static_cast<std::ptrdiff_t>(half)))
                    return true;
            }
        return false;
    }

private:
    std::vector<Letter> non_identity_letters() const {
        std::vector<Letter> out;
        for (const auto& l : h_->symmetric_letters())
            if (l.gen != 0 && !h_->is_identity(h_->letter(l))) out.push_back(l);
        return out;
    }

    void emit_squares(const std::vector<Word>& prefixes, std::vector<PatternCoding>& out) const {
        std::size_t half = prefixes.size() / 2;
        std::vector<int> u(half, 0);
        for (;;) {
            PatternCoding c;
            for (std::size_t i = 0; i < prefixes.size(); ++i) c.cells.emplace_back(prefixes[i], u[i % half]);
            out.push_back(std::move(c));
            std::size_t i = 0;
            while (i < half && ++u[i] == colors_) u[i++] = 0;
            if (i == half) break;
        }
    }

    template <class Lookup>
    void collect_arms(std::vector<HElem>& path, const Lookup& colour_of,
                      std::vector<std::vector<HElem>>& arms) const {
        arms.push_back(path);
        if (path.size() >= static_cast<std::size_t>(2 * L_)) return;
        for (const auto& n : neighbours(path.back())) {
            if (colour_of(n) < 0 || std::find(path.begin(), path.end(), n) != path.end()) continue;
            path.push_back(n);
            collect_arms(path, colour_of, arms);
            path.pop_back();
        }
    }

    static bool disjoint_apart_from_root(const std::vector<HElem>& a, const std::vector<HElem>& b) {
        for (std::size_t i = 1; i < a.size(); ++i)
            for (std::size_t j = 1; j < b.size(); ++j)
                if (a[i] == b[j]) return false;
        return true;
    }

    void solve() {
        order_ = h_->ball(radius_);
        std::map<HElem, int> partial;
        auto lookup = [&](const HElem& g) {
            auto it = partial.find(g);
            return it == partial.end() ? -1 : it->second;
        };
        std::vector<int> choice(order_.size(), -1);
        std::size_t i = 0;
        std::size_t steps = 0;
        while (i < order_.size()) {
            if (++steps > 50'000'000) throw NoColoringFound("backtracking step budget exhausted");
            int c = choice[i] + 1;
            partial.erase(order_[i]);
            bool placed = false;
            for (; c < colors_; ++c) {
                partial[order_[i]] = c;
                if (!square_through(order_[i], lookup)) {
                    placed = true;
                    break;
                }
            }
            if (placed) {
                choice[i] = c;
                ++i;
                continue;
            }
            partial.erase(order_[i]);
            choice[i] = -1;
            if (i == 0)
                throw NoColoringFound("no square-free colouring with " + std::to_string(colors_) +
                                      " colours on the ball of radius " + std::to_string(radius_));
            --i;
        }
        colour_ = std::move(partial);
    }

    std::shared_ptr<const HGroup> h_;
    int colors_;
    int L_;
    int radius_;
    std::vector<HElem> order_;
    std::map<HElem, int> colour_;
};

inline int default_path_budget(const HGroup& h) { return h.kind() == "z" ? 8 : 3; }
inline int default_colouring_radius(const HGroup& h) { return h.kind() == "z" ? 30 : 4; }

/// The recoded square-free flow on H.
inline std::shared_ptr<RecodedFlow> squarefree_flow(std::shared_ptr<const HGroup> h, int colors,
                                                    std::optional<int> path_budget = std::nullopt,
                                                    std::optional<int> radius = std::nullopt) {
    int L = path_budget.value_or(default_path_budget(*h));
    int r = radius.value_or(default_colouring_radius(*h));
    return recode_subshift(std::make_shared<SquareFreeSubshift>(h, colors, L, r));
}

/// Bit n of f_h(x*).
inline std::uint8_t flow_point_eval(const FlowOracle& flow, const HElem& h, Int n) {
    if (!flow.has_exact()) throw Error("flow has no exact layer");
    return flow.point_bit(h, n);
}

/// Symbol a is read where the point lies in W_a, a union of cylinders.
struct BlockMap {
    std::vector<std::vector<Cylinder>> sets;  // W_a for a = 0, 1, ...

    int alphabet() const { return static_cast<int>(sets.size()); }
};

/// The map x -> (symbol of f_{h^-1}(x))_h, read at its coordinate-0 code:
/// symbol a iff the first k bits spell a.
inline BlockMap identity_block_map(int alphabet) {
    int k = bits_per_symbol(alphabet);
    BlockMap m;
    for (int a = 0; a < alphabet; ++a) {
        Cylinder c;
        for (int b = 0; b < k; ++b) c.emplace(b, static_cast<std::uint8_t>(a >> b & 1));
        m.sets.push_back({c});
    }
    return m;
}

/// Factor of a recoded flow through a block map. A coding is emitted once
/// every cylinder of the intersection of the f_w(W_a) is contradictory or
/// inside a forbidden cylinder of the flow.
class FactorSubshift : public SubshiftOracle {
public:
    FactorSubshift(std::shared_ptr<const RecodedFlow> flow, BlockMap map, std::vector<Word> support = {})
        : flow_(std::move(flow)), map_(std::move(map)), support_(std::move(support)) {
        if (support_.empty()) {
            support_.push_back({});
            for (const auto& l : flow_->group().symmetric_letters()) support_.push_back({l});
        }
    }

    const HGroup& group() const override { return flow_->group(); }
    std::shared_ptr<const HGroup> group_ptr() const override { return flow_->subshift().group_ptr(); }
    int alphabet() const override { return map_.alphabet(); }

    /// Codings of one or two cells over the support words.
    std::vector<PatternCoding> forbidden_codings(std::size_t budget) const override {
        auto forbidden = flow_->forbidden_words(budget);
        std::vector<PatternCoding> out;
        const int A = alphabet();
        for (std::size_t i = 0; i < support_.size(); ++i)
            for (int a = 0; a < A; ++a) {
                PatternCoding single{{{support_[i], a}}};
                if (empty_cylinder_union(single, forbidden)) out.push_back(single);
                for (std::size_t j = i + 1; j < support_.size(); ++j)
                    for (int b = 0; b < A; ++b) {
                        PatternCoding pair{{{support_[i], a}, {support_[j], b}}};
                        if (empty_cylinder_union(pair, forbidden)) out.push_back(pair);
                    }
            }
        return out;
    }

    bool has_exact() const override { return flow_->has_exact(); }
    /// Symbol of the factor of x* at h: the a with f_{h^-1}(x*) in W_a.
    int exact(const HElem& h) const override {
        HElem hi = group().inv(h);
        for (int a = 0; a < alphabet(); ++a)
            for (const auto& c : map_.sets[static_cast<std::size_t>(a)]) {
                bool in = true;
                for (const auto& [n, v] : c)
                    if (flow_->point_bit(hi, n) != v) {
                        in = false;
                        break;
                    }
                if (in) return a;
            }
        throw Error("block map does not cover the point");
    }

    /// The conjunction over cells of {x : f_{w^-1}(x) in W_a}, in DNF.
    std::vector<Cylinder> pattern_cylinders(const PatternCoding& c) const {
        std::vector<Cylinder> dnf{Cylinder{}};
        for (const auto& [w, a] : c.cells) {
            HElem winv = group().inv(group().eval(w));
            std::vector<Cylinder> next;
            for (const auto& cur : dnf)
                for (const auto& cyl : map_.sets.at(static_cast<std::size_t>(a))) {
                    auto pre = flow_->pullback(winv, cyl);
                    if (!pre) continue;
                    if (auto m = merge(cur, *pre)) next.push_back(std::move(*m));
                }
            dnf = std::move(next);
        }
        return dnf;
    }

private:
    bool empty_cylinder_union(const PatternCoding& c, const std::vector<Cylinder>& forbidden) const {
        for (const auto& conj : pattern_cylinders(c)) {
            bool covered = false;
            for (const auto& f : forbidden)
                if (extends(conj, f)) {
                    covered = true;
                    break;
                }
            if (!covered) return false;
        }
        return true;
    }

    std::shared_ptr<const RecodedFlow> flow_;
    BlockMap map_;
    std::vector<Word> support_;
};

inline std::shared_ptr<FactorSubshift> factor_flow_to_subshift(std::shared_ptr<const RecodedFlow> flow, BlockMap map,
                                                               std::vector<Word> support = {}) {
    return std::make_shared<FactorSubshift>(std::move(flow), std::move(map), std::move(support));
}

}  // namespace sofic
