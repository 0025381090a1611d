// Acceptance run: one PASS/FAIL line per criterion, with wall time.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>

#include "sofic/sofic.hpp"

using namespace sofic;

namespace {

struct Outcome {
    bool pass = false;
    std::string note;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

// Symbolic Psi_1 window: position j shows "x<n>" when the encoding of the
// unit prefix e_n puts a 1 there.
Window<std::string> symbolic_window(Int lo, Int hi, int levels) {
    Window<std::string> w{lo, std::vector<std::string>(static_cast<std::size_t>(hi - lo + 1), "$")};
    for (int n = 0; n < levels; ++n) {
        Bits e(static_cast<std::size_t>(levels), 0);
        e[static_cast<std::size_t>(n)] = 1;
        TWord t = psi_encode(3, 1, e, lo, hi);
        for (Int j = lo; j <= hi; ++j)
            if (t.at(j) == TSym::One) w.at(j) = "x" + std::to_string(n);
    }
    return w;
}

std::string join(const Window<std::string>& w) {
    std::string s;
    for (const auto& t : w.symbols) s += t;
    return s;
}

Outcome toeplitz_example() {
    const std::string psi = "$x0$x1x0$$x0$x2x0$x1x0$$x0$$x0$x1x0$$x0$x3x0$x1";
    const std::string om1 = "$x1$x2x1$$x1$x3x1";
    const std::string om2 = "$x2$x3";
    auto w = symbolic_window(0, 30, 4);
    if (w.size() != 31 || join(w) != psi) return fail("Psi_1 window is " + join(w));
    auto o1 = omega(3, 0, w);
    o1.symbols.resize(11);
    if (join(o1) != om1) return fail("Omega_0 window is " + join(o1));
    auto o2 = omega(3, 0, omega(3, 0, w));
    o2.symbols.resize(4);
    if (join(o2) != om2) return fail("Omega_0^2 window is " + join(o2));
    return {true, "31 symbols, Omega_0 and Omega_0^2 exact"};
}

Outcome substitution_displays() {
    SubRule r(3, {1, 1});
    auto black_set = [](const Patch& p) {
        auto b = p.black_cells();
        return std::set<Vec2>(b.begin(), b.end());
    };
    if (black_set(substitute_once(r, Patch({0, 0}, 1, 1, false))) != std::set<Vec2>{{1, 1}})
        return fail("s(white) differs from the display");
    if (black_set(substitute_once(r, Patch({0, 0}, 1, 1, true))) != std::set<Vec2>{{0, 0}, {1, 1}})
        return fail("s(black) differs from the display");
    int checked = 0;
    for (Vec2 v : nonzero_vectors(3))
        for (bool seed : {false, true})
            for (int n = 0; n <= 4; ++n) {
                Patch p = iterate(SubRule(3, v), seed, n);
                for (int m = 0; m < n; ++m, ++checked)
                    if (!p.black(ipow(3, m) * v))
                        return fail("cell 3^" + std::to_string(m) + " v white for v=(" + std::to_string(v.x) + "," +
                                    std::to_string(v.y) + ") n=" + std::to_string(n));
            }
    return {true, std::to_string(checked) + " forced cells black"};
}

// Greedy classification of black cells: at level m, the residue classes
// mod 3^{m+1} lying wholly inside the still-unclassified black set.
std::vector<std::vector<Vec2>> fully_black_classes(const Patch& patch, const std::set<Vec2>& remaining, int m) {
    const Int per = ipow(3, m + 1);
    std::vector<std::vector<Vec2>> out;
    for (Int rx = 0; rx < per; ++rx)
        for (Int ry = 0; ry < per; ++ry) {
            std::vector<Vec2> cls;
            bool full = true;
            for (Int x = patch.origin().x + floor_mod(rx - patch.origin().x, per); x < patch.origin().x + patch.width() && full;
                 x += per)
                for (Int y = patch.origin().y + floor_mod(ry - patch.origin().y, per);
                     y < patch.origin().y + patch.height(); y += per) {
                    if (!remaining.contains({x, y})) {
                        full = false;
                        break;
                    }
                    cls.push_back({x, y});
                }
            if (full && !cls.empty()) out.push_back(std::move(cls));
        }
    return out;
}

Outcome lattice_decomposition() {
    for (Vec2 v : nonzero_vectors(3)) {
        SubRule rule(3, v);
        Patch patch = iterate(rule, true, 4);
        auto dec = decompose_lattices(rule, patch, 3);
        auto cells = patch.black_cells();
        std::set<Vec2> remaining(cells.begin(), cells.end());
        for (int m = 0; m <= 3; ++m) {
            auto candidates = fully_black_classes(patch, remaining, m);
            std::vector<Vec2> mine;
            for (Vec2 c : remaining)
                if (dec.levels[static_cast<std::size_t>(m)].contains(c)) mine.push_back(c);
            std::vector<Vec2> all_in_window;
            patch.for_each([&](Vec2 pos, bool) {
                if (dec.levels[static_cast<std::size_t>(m)].contains(pos)) all_in_window.push_back(pos);
            });
            std::sort(mine.begin(), mine.end());
            std::sort(all_in_window.begin(), all_in_window.end());
            if (mine != all_in_window) return fail("level " + std::to_string(m) + " lattice overlaps white or used cells");
            bool matched = false;
            for (auto& c : candidates) {
                std::sort(c.begin(), c.end());
                matched |= c == mine;
            }
            if (!matched) return fail("level " + std::to_string(m) + " is not a fully black class");
            if (m < 3 && candidates.size() != 1)
                return fail("level " + std::to_string(m) + " has " + std::to_string(candidates.size()) + " candidates");
            for (Vec2 c : mine) remaining.erase(c);
        }
        if (remaining.size() > 1) return fail(std::to_string(remaining.size()) + " cells left unclassified");
        if (remaining.size() != (dec.residual ? 1u : 0u) || (dec.residual && *remaining.begin() != *dec.residual))
            return fail("residual cell differs");
    }
    return {true, "8 vectors, levels 0-3 exact, residual <= 1"};
}

Outcome automorphism_law() {
    const std::vector<Mat2> mats{{1, 1, 0, 1}, {0, -1, 1, 0}, {1, 0, 1, 1}, {-1, 0, 0, 1}, {2, 1, 1, 1}};
    int checked = 0;
    for (const Mat2& a : mats) {
        Mat2 ainv = a.inverse();
        ModMatrix am = reduce_mod_p(a);
        for (Vec2 v : nonzero_vectors(3)) {
            Patch src = iterate(SubRule(3, v), true, 4);
            Vec2 w = am.apply(v);
            Vec2 centre = a * Vec2{40, 40};
            Patch img(centre - Vec2{13, 13}, 27, 27);
            bool inside = true;
            img.for_each([&](Vec2 pos, bool) {
                Vec2 back = ainv * pos;
                if (!src.contains(back)) inside = false;
                else img.set(pos, src.black(back));
            });
            if (!inside) return fail("window leaves the source patch");
            if (!is_in_language(SubRule(3, w), img))
                return fail("image window not in the language of Sub(" + std::to_string(w.x) + "," +
                            std::to_string(w.y) + ")");
            auto sdec = decompose_lattices(SubRule(3, v), src, 3);
            LatticeDecomposition idec;
            try {
                idec = decompose_lattices(SubRule(3, w), img, 1);
            } catch (const NotSubstitutive&) {
                idec = decompose_lattices(SubRule(3, w), img, 2);
            }
            for (int m = 0; m <= 1; ++m) {
                Lattice mapped = map_lattice(a, sdec.levels[static_cast<std::size_t>(m)]);
                if (mapped.v != w) return fail("mapped vector is not phi~(v)");
                bool same = true;
                img.for_each([&](Vec2 pos, bool) {
                    same &= mapped.contains(pos) == idec.levels[static_cast<std::size_t>(m)].contains(pos);
                });
                if (!same) return fail("level " + std::to_string(m) + " lattice not carried by A");
            }
            ++checked;
        }
    }
    return {true, std::to_string(checked) + " (matrix, v) pairs"};
}

Outcome coding_round_trip() {
    std::mt19937 rng(31);
    std::bernoulli_distribution bit(0.5);
    const Int lo = -729, hi = 729;
    for (Int q : {1, 2})
        for (int t = 0; t < 100; ++t) {
            Bits x(5);
            for (auto& b : x) b = bit(rng);
            Bits padded = x;
            padded.resize(7, 0);
            auto r = decode(3, q, psi_encode(3, q, padded, lo, hi), 5);
            if (r.prefix != x) return fail("decode(encode(x)) != x for q=" + std::to_string(q));
        }
    int pairs = 0;
    for (int m = 0; pairs < 50; ++m) {
        Bits x(7), y(7);
        for (auto& b : x) b = bit(rng);
        for (auto& b : y) b = bit(rng);
        if (std::equal(x.begin(), x.begin() + 5, y.begin())) continue;
        for (Int q : {1, 2})
            if (psi_encode(3, q, x, lo, hi) == psi_encode(3, q, y, lo, hi)) return fail("two prefixes share a code");
        ++pairs;
    }
    return {true, "200 round trips, 50 distinct pairs"};
}

Outcome phi_identity() {
    std::set<std::array<TSym, 3>> realizable;
    std::set<std::uint8_t> x0s;
    for (int m = 0; m < 32; ++m) {
        Bits x;
        for (int b = 0; b < 5; ++b) x.push_back(static_cast<std::uint8_t>(m >> b & 1));
        TWord w = psi_encode(3, 1, x, -242, 242);
        for (Int j = -242; j + 2 <= 242; ++j) {
            std::array<TSym, 3> u{w.at(j), w.at(j + 1), w.at(j + 2)};
            realizable.insert(u);
            if (proj_phi(u) != x[0]) return fail("phase " + std::to_string(j) + " of x=" + std::to_string(m));
        }
        x0s.insert(x[0]);
    }
    if (x0s.size() != 2) return fail("both x0 values must occur");
    return {true, std::to_string(realizable.size()) + " realizable triples, both x0"};
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(SOFIC_CLI) + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Outcome end_to_end() {
    auto dir = std::filesystem::temp_directory_path() / ("sofic_acc_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    std::string dump = (dir / "h3.dump").string();
    int b = run_cli("build --group heisenberg --flow squarefree:3 --radius 3 --depth 2 --out " + dump);
    if (b != 0) return fail("build exited " + std::to_string(b));
    int v = run_cli("verify --in " + dump);
    Dump d = read_dump(read_file(dump));
    std::filesystem::remove_all(dir);
    if (v != 0) return fail("verify exited " + std::to_string(v));
    return {true, std::to_string(d.ball.size()) + " ball cells, " + std::to_string(d.table->cells().size()) +
                      " recorded, exit 0"};
}

struct Heis {
    std::shared_ptr<const HGroup> h = heisenberg_group();
    std::shared_ptr<RecodedFlow> flow = squarefree_flow(h, 3);
    std::shared_ptr<YStarOracle> y = std::make_shared<YStarOracle>(flow, h);
    Semidirect G{h};
};

const Heis& heis() {
    static Heis h;
    return h;
}

Outcome equivariance() {
    const auto& I = heis();
    int n = 0;
    for (const auto& h : I.h->ball(2)) {
        auto r = check_equivariance(*I.flow, I.y, h, 3);
        if (!r.pass) return fail(format_elem(h) + ": " + r.detail);
        // second route: through the coordinate enumeration and the colouring
        Bits other;
        for (Int k = 0; k < 3; ++k) {
            HElem g = I.flow->coordinates().element(static_cast<std::size_t>(k / I.flow->k()));
            int colour = I.flow->subshift().exact(I.h->mul(I.h->inv(h), g));
            other.push_back(static_cast<std::uint8_t>(colour >> (k % I.flow->k()) & 1));
        }
        if (r.decoded != other) return fail(format_elem(h) + ": second route disagrees");
        ++n;
    }
    return {true, std::to_string(n) + " elements, 3 coordinates, two routes"};
}

Outcome aperiodicity() {
    const auto& I = heis();
    int n = 0;
    Int far = 0;
    for (const auto& g : I.G.ball(2)) {
        if (g == I.G.identity()) continue;
        auto w = check_aperiodicity(*I.y, g, 81);
        if (!w.excluded()) return fail(I.G.format(g) + ": PeriodNotExcluded");
        if (w.position->vec.chebyshev() > 81) return fail(I.G.format(g) + ": witness outside radius 81");
        if (I.y->at(I.G.mul(I.G.inv(g), *w.position)) == I.y->at(*w.position))
            return fail(I.G.format(g) + ": reported position is not a witness");
        far = std::max(far, w.position->vec.chebyshev());
        ++n;
    }
    return {true, std::to_string(n) + " witnesses, farthest at radius " + std::to_string(far)};
}

Outcome fault_injection() {
    const auto& I = heis();
    DumpHeader hd{3, "heisenberg", "squarefree:3", 2, 2};
    Dump d = read_dump(write_dump(hd, *I.y));
    RuleSet rules;
    rules.flow = I.flow;
    std::mt19937 rng(99);
    std::uniform_int_distribution<std::size_t> pick(0, d.ball.size() - 1);
    int caught = 0, by_scan = 0;
    for (int t = 0; t < 100; ++t) {
        auto table = std::make_shared<TableOracle>(*d.table);
        const GElem& g = d.ball[pick(rng)];
        CellSymbol c = table->at(g);
        std::string what = inject_fault(c, rng);
        table->set(g, c);
        bool hit = !scan_rules(*table, 2, rules, 2).empty();
        by_scan += hit;
        if (!hit) try {
                upsilon_decode(*table, 2);
            } catch (const Inconsistent&) {
                hit = true;
            }
        if (!hit) return fail("corruption " + what + " at " + I.G.format(g) + " went unnoticed");
        ++caught;
    }
    return {true, std::to_string(caught) + "/100 caught (" + std::to_string(by_scan) + " by rule scan)"};
}

bool has_square(const std::vector<int>& w) {
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t l = 1; i + 2 * l <= w.size(); ++l)
            if (std::equal(w.begin() + static_cast<std::ptrdiff_t>(i), w.begin() + static_cast<std::ptrdiff_t>(i + l),
                           w.begin() + static_cast<std::ptrdiff_t>(i + l)))
                return true;
    return false;
}

Outcome projective_readback() {
    const auto& I = heis();
    std::vector<HElem> hs;
    for (Int i = -8; i <= 8; ++i) hs.push_back({i});
    auto read = projective_read(*I.y, hs, I.flow->k());
    std::vector<int> word;
    for (const auto& h : hs) {
        int want = I.flow->subshift().exact(h);
        if (read.at(h) != want) return fail("symbol at t^" + std::to_string(h[0]) + " differs");
        word.push_back(read.at(h));
    }
    if (has_square(word)) return fail("read-back word contains a square");
    std::string s;
    for (int a : word) s += char('0' + a);
    return {true, "17 symbols " + s};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"toeplitz example", toeplitz_example},
        {"substitution displays", substitution_displays},
        {"lattice decomposition", lattice_decomposition},
        {"automorphism lattice law", automorphism_law},
        {"coding round trip", coding_round_trip},
        {"projection identity", phi_identity},
        {"end-to-end build and verify", end_to_end},
        {"equivariance", equivariance},
        {"strong aperiodicity", aperiodicity},
        {"fault injection", fault_injection},
        {"projective read-back", projective_readback},
    };
    int failed = 0, i = 0;
    for (const auto& c : criteria) {
        ++i;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s %2d %-28s %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", i, c.name, secs, o.note.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", i - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
