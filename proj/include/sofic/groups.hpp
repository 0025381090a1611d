#pragma once

// Finitely generated groups H with decidable word problem, homomorphisms
// H -> GL(2,Z), and the semidirect product G = Z^2 x| H.

#include <cctype>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sofic/core.hpp"

namespace sofic {

/// Canonical form of an element of H. The meaning of the integers is
/// group specific (exponent, exponent vector, reduced word, residue, ...).
using HElem = std::vector<Int>;

struct Letter {
    std::size_t gen = 0;  // index into the generator list S, 0 = identity
    bool inverse = false;

    friend auto operator<=>(const Letter&, const Letter&) = default;
};

using Word = std::vector<Letter>;

inline std::string format_elem(const HElem& h) {
    std::string out = "[";
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(h[i]);
    }
    return out + "]";
}

inline HElem parse_elem(std::string_view text) {
    if (text.size() < 2 || text.front() != '[' || text.back() != ']')
        throw ParseError("malformed group element: " + std::string(text));
    HElem out;
    std::string body(text.substr(1, text.size() - 2));
    if (body.empty()) return out;
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stoll(tok));
        } catch (const std::exception&) {
            throw ParseError("malformed group element: " + std::string(text));
        }
    }
    return out;
}

/// A finitely generated group with decidable equality and an assignment of
/// GL(2,Z) matrices to its generators. The generator list S always starts
/// with the identity, named "e".
///
/// Generator names are single lowercase letters; in word notation the
/// uppercase letter denotes the inverse.
class HGroup {
public:
    HGroup(std::vector<std::string> names, std::vector<Mat2> matrices)
        : names_{"e"}, matrices_{Mat2::identity()} {
        if (names.size() != matrices.size())
            throw Error("one matrix is required per generator");
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto& n = names[i];
            if (n.size() != 1 || !std::islower(static_cast<unsigned char>(n[0])) || n == "e")
                throw Error("generator names must be single lowercase letters other than 'e'");
            for (const auto& prev : names_)
                if (prev == n) throw Error("duplicate generator name " + n);
            Int d = matrices[i].det();
            if (d != 1 && d != -1) throw Error("phi(" + n + ") is not in GL(2,Z)");
            names_.push_back(n);
            matrices_.push_back(matrices[i]);
        }
    }
    virtual ~HGroup() = default;

    virtual std::string kind() const = 0;
    virtual HElem identity() const = 0;
    virtual HElem mul(const HElem& a, const HElem& b) const = 0;
    virtual HElem inv(const HElem& a) const = 0;
    /// Element named by generator i (i = 0 gives the identity).
    virtual HElem generator(std::size_t i) const = 0;
    /// The automorphism phi(h) as an integer matrix.
    virtual Mat2 phi(const HElem& h) const = 0;

    /// |S|, identity included.
    std::size_t size() const { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const std::vector<std::string>& names() const { return names_; }
    const Mat2& generator_matrix(std::size_t i) const { return matrices_.at(i); }

    HElem letter(Letter l) const {
        HElem g = generator(l.gen);
        return l.inverse ? inv(g) : g;
    }

    HElem eval(const Word& w) const {
        HElem h = identity();
        for (const auto& l : w) h = mul(h, letter(l));
        return h;
    }

    bool is_identity(const HElem& h) const { return h == identity(); }

    /// Ordered product of generator matrices along a word.
    Mat2 phi_of(const Word& w) const {
        Mat2 m;
        for (const auto& l : w) {
            const Mat2& g = matrices_.at(l.gen);
            m = m * (l.inverse ? g.inverse() : g);
        }
        return m;
    }

    /// The letters of S u S^-1 in declaration order: e, s1, s1^-1, s2, ...
    std::vector<Letter> symmetric_letters() const {
        std::vector<Letter> out{{0, false}};
        for (std::size_t i = 1; i < size(); ++i) {
            out.push_back({i, false});
            if (inv(generator(i)) != generator(i)) out.push_back({i, true});
        }
        return out;
    }

    Word parse_word(std::string_view text) const {
        Word w;
        for (char c : text) {
            if (std::isspace(static_cast<unsigned char>(c)) || c == '.') continue;
            bool inverse = std::isupper(static_cast<unsigned char>(c));
            std::string n(1, static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            std::size_t idx = 0;
            while (idx < names_.size() && names_[idx] != n) ++idx;
            if (idx == names_.size()) throw ParseError("unknown generator '" + n + "'");
            w.push_back({idx, inverse && idx != 0});
        }
        return w;
    }

    std::string format_word(const Word& w) const {
        std::string out;
        for (const auto& l : w) {
            char c = names_.at(l.gen)[0];
            out += l.inverse ? static_cast<char>(std::toupper(c)) : c;
        }
        return out.empty() ? "." : out;
    }

    /// Ball of radius r in the Cayley graph of (H, S), breadth-first order.
    std::vector<HElem> ball(int radius) const {
        std::vector<HElem> out{identity()};
        std::set<HElem> seen{identity()};
        std::size_t frontier_begin = 0;
        for (int r = 0; r < radius; ++r) {
            std::size_t frontier_end = out.size();
            for (std::size_t i = frontier_begin; i < frontier_end; ++i) {
                for (const auto& l : symmetric_letters()) {
                    if (l.gen == 0) continue;
                    HElem n = mul(out[i], letter(l));
                    if (seen.insert(n).second) out.push_back(n);
                }
            }
            frontier_begin = frontier_end;
        }
        return out;
    }

    /// A shortest word for h, found by breadth-first search up to max_length.
    Word shortest_word(const HElem& h, int max_length = 16) const {
        std::map<HElem, Word> seen{{identity(), {}}};
        std::vector<HElem> frontier{identity()};
        if (is_identity(h)) return {};
        for (int r = 0; r < max_length; ++r) {
            std::vector<HElem> next;
            for (const auto& g : frontier) {
                for (const auto& l : symmetric_letters()) {
                    if (l.gen == 0) continue;
                    HElem n = mul(g, letter(l));
                    if (seen.contains(n)) continue;
                    Word w = seen[g];
                    w.push_back(l);
                    if (n == h) return w;
                    seen.emplace(n, std::move(w));
                    next.push_back(n);
                }
            }
            frontier = std::move(next);
        }
        throw BudgetExceeded("no word of length <= " + std::to_string(max_length) + " found");
    }

protected:
    std::vector<std::string> names_;
    std::vector<Mat2> matrices_;
};

/// H = Z, one generator t, elements stored as {n} meaning t^n.
class IntegerGroup final : public HGroup {
public:
    explicit IntegerGroup(Mat2 phi_t, std::string name = "t")
        : HGroup({std::move(name)}, {phi_t}) {}

    std::string kind() const override { return "z"; }
    HElem identity() const override { return {0}; }
    HElem mul(const HElem& a, const HElem& b) const override { return {a[0] + b[0]}; }
    HElem inv(const HElem& a) const override { return {-a[0]}; }
    HElem generator(std::size_t i) const override { return {i == 0 ? 0 : 1}; }
    Mat2 phi(const HElem& h) const override { return matrices_[1].pow(h[0]); }
};

/// H = Z^d with pairwise commuting generator matrices.
class LatticeGroup final : public HGroup {
public:
    LatticeGroup(std::vector<std::string> names, std::vector<Mat2> matrices)
        : HGroup(std::move(names), std::move(matrices)) {
        for (std::size_t i = 1; i < size(); ++i)
            for (std::size_t j = i + 1; j < size(); ++j)
                if (matrices_[i] * matrices_[j] != matrices_[j] * matrices_[i])
                    throw Error("matrices of an abelian group must commute");
    }

    std::string kind() const override { return "zd"; }
    HElem identity() const override { return HElem(size() - 1, 0); }
    HElem mul(const HElem& a, const HElem& b) const override {
        HElem r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
        return r;
    }
    HElem inv(const HElem& a) const override {
        HElem r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
        return r;
    }
    HElem generator(std::size_t i) const override {
        HElem r = identity();
        if (i > 0) r.at(i - 1) = 1;
        return r;
    }
    Mat2 phi(const HElem& h) const override {
        Mat2 m;
        for (std::size_t i = 0; i < h.size(); ++i) m = m * matrices_[i + 1].pow(h[i]);
        return m;
    }
};

/// Free group on the declared generators. Elements are freely reduced
/// words; letter +k / -k is generator k or its inverse.
class FreeGroup final : public HGroup {
public:
    using HGroup::HGroup;

    std::string kind() const override { return "free"; }
    HElem identity() const override { return {}; }
    HElem mul(const HElem& a, const HElem& b) const override {
        HElem r = a;
        for (Int l : b) {
            if (!r.empty() && r.back() == -l)
                r.pop_back();
            else
                r.push_back(l);
        }
        return r;
    }
    HElem inv(const HElem& a) const override {
        HElem r(a.rbegin(), a.rend());
        for (auto& l : r) l = -l;
        return r;
    }
    HElem generator(std::size_t i) const override {
        if (i == 0) return {};
        return {static_cast<Int>(i)};
    }
    Mat2 phi(const HElem& h) const override {
        Mat2 m;
        for (Int l : h) {
            const Mat2& g = matrices_[static_cast<std::size_t>(std::abs(l))];
            m = m * (l < 0 ? g.inverse() : g);
        }
        return m;
    }
};

/// Cyclic group Z/nZ generated by one element whose matrix has order
/// dividing n.
class CyclicGroup final : public HGroup {
public:
    CyclicGroup(Int order, Mat2 phi_t, std::string name = "t")
        : HGroup({std::move(name)}, {phi_t}), order_(order) {
        if (order < 1) throw Error("group order must be positive");
        if (phi_t.pow(order) != Mat2::identity())
            throw Error("phi(t)^n must be the identity for a cyclic group of order n");
    }

    std::string kind() const override { return "finite"; }
    Int order() const { return order_; }
    HElem identity() const override { return {0}; }
    HElem mul(const HElem& a, const HElem& b) const override {
        return {floor_mod(a[0] + b[0], order_)};
    }
    HElem inv(const HElem& a) const override { return {floor_mod(-a[0], order_)}; }
    HElem generator(std::size_t i) const override { return {i == 0 ? 0 : floor_mod(1, order_)}; }
    Mat2 phi(const HElem& h) const override { return matrices_[1].pow(h[0]); }

private:
    Int order_;
};

/// Finite permutation group given by generating permutations of
/// {0, ..., n-1}; elements are image vectors. phi is extended along a
/// spanning tree of the Cayley graph and checked for consistency.
class PermutationGroup final : public HGroup {
public:
    PermutationGroup(std::vector<std::string> names, std::vector<HElem> perms,
                     std::vector<Mat2> matrices)
        : HGroup(std::move(names), std::move(matrices)), perms_(std::move(perms)) {
        if (perms_.size() + 1 != size()) throw Error("one permutation is required per generator");
        degree_ = perms_.empty() ? 0 : perms_[0].size();
        for (const auto& p : perms_) {
            if (p.size() != degree_) throw Error("permutations must have equal degree");
            std::vector<bool> hit(degree_, false);
            for (Int x : p) {
                if (x < 0 || static_cast<std::size_t>(x) >= degree_ || hit[x])
                    throw Error("generator is not a permutation");
                hit[x] = true;
            }
        }
        std::deque<HElem> queue{identity()};
        table_.emplace(identity(), Mat2::identity());
        while (!queue.empty()) {
            HElem g = queue.front();
            queue.pop_front();
            for (std::size_t i = 1; i < size(); ++i) {
                HElem n = mul(g, generator(i));
                Mat2 m = table_.at(g) * matrices_[i];
                auto [it, inserted] = table_.emplace(n, m);
                if (inserted)
                    queue.push_back(n);
                else if (it->second != m)
                    throw Error("generator matrices do not define a homomorphism");
            }
        }
    }

    std::string kind() const override { return "custom"; }
    std::size_t order() const { return table_.size(); }
    HElem identity() const override {
        HElem r(degree_);
        std::iota(r.begin(), r.end(), Int{0});
        return r;
    }
    /// (a*b)(x) = a(b(x)).
    HElem mul(const HElem& a, const HElem& b) const override {
        HElem r(degree_);
        for (std::size_t x = 0; x < degree_; ++x) r[x] = a[static_cast<std::size_t>(b[x])];
        return r;
    }
    HElem inv(const HElem& a) const override {
        HElem r(degree_);
        for (std::size_t x = 0; x < degree_; ++x) r[static_cast<std::size_t>(a[x])] = static_cast<Int>(x);
        return r;
    }
    HElem generator(std::size_t i) const override { return i == 0 ? identity() : perms_.at(i - 1); }
    Mat2 phi(const HElem& h) const override { return table_.at(h); }

private:
    std::vector<HElem> perms_;
    std::size_t degree_ = 0;
    std::map<HElem, Mat2> table_;
};

/// An element ((i,j), h) of Z^2 x|_phi H.
struct GElem {
    Vec2 vec;
    HElem h;

    friend auto operator<=>(const GElem&, const GElem&) = default;
};

struct GElemHash {
    std::size_t operator()(const GElem& g) const noexcept {
        std::size_t s = std::hash<Int>{}(g.vec.x) * 0x9E3779B97F4A7C15ULL ^ std::hash<Int>{}(g.vec.y);
        for (Int x : g.h) s = s * 1099511628211ULL ^ std::hash<Int>{}(x);
        return s;
    }
};

/// G = Z^2 x|_phi H with (n1,h1)(n2,h2) = (n1 + phi(h1) n2, h1 h2).
class Semidirect {
public:
    explicit Semidirect(std::shared_ptr<const HGroup> h) : h_(std::move(h)) {
        if (!h_) throw Error("null group");
    }

    const HGroup& H() const { return *h_; }
    std::shared_ptr<const HGroup> H_ptr() const { return h_; }

    GElem identity() const { return {{0, 0}, h_->identity()}; }

    GElem mul(const GElem& a, const GElem& b) const {
        return {a.vec + h_->phi(a.h) * b.vec, h_->mul(a.h, b.h)};
    }

    GElem inv(const GElem& g) const {
        HElem hi = h_->inv(g.h);
        return {-(h_->phi(hi) * g.vec), hi};
    }

    GElem translation(Vec2 z) const { return {z, h_->identity()}; }
    GElem lift(const HElem& h) const { return {{0, 0}, h}; }

    /// Generators of the word metric: (+-e1, 1), (+-e2, 1) and (0, s^+-1)
    /// for s in S other than the identity.
    std::vector<GElem> generators() const {
        std::vector<GElem> out{translation({1, 0}), translation({-1, 0}), translation({0, 1}),
                               translation({0, -1})};
        for (const auto& l : h_->symmetric_letters())
            if (l.gen != 0) out.push_back(lift(h_->letter(l)));
        return out;
    }

    /// Ball of the given radius in breadth-first order, canonical and
    /// deduplicated.
    std::vector<GElem> ball(int radius) const {
        std::vector<GElem> out{identity()};
        std::set<GElem> seen{identity()};
        auto gens = generators();
        std::size_t begin = 0;
        for (int r = 0; r < radius; ++r) {
            std::size_t end = out.size();
            for (std::size_t i = begin; i < end; ++i)
                for (const auto& s : gens) {
                    GElem n = mul(out[i], s);
                    if (seen.insert(n).second) out.push_back(n);
                }
            begin = end;
        }
        return out;
    }

    std::string format(const GElem& g) const {
        std::ostringstream os;
        os << "((" << g.vec.x << ',' << g.vec.y << ")," << format_elem(g.h) << ')';
        return os.str();
    }

private:
    std::shared_ptr<const HGroup> h_;
};

/// The discrete Heisenberg group as Z^2 x| Z with phi(1) = [[1,1],[0,1]].
inline std::shared_ptr<const HGroup> heisenberg_group() {
    return std::make_shared<IntegerGroup>(Mat2{1, 1, 0, 1});
}

}  // namespace sofic
