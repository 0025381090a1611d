#pragma once

// Text formats, group and flow descriptors, dumps of y*, renders and JSON
// reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sofic/verify.hpp"

namespace sofic {

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline Int to_int(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        Int v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("bad ") + what + ": '" + s + "'");
    }
}

inline std::string tsyms(const std::vector<TSym>& v) {
    std::string s;
    for (TSym c : v) s += to_char(c);
    return s;
}

inline std::vector<TSym> parse_tsyms(const std::string& s) {
    std::vector<TSym> v;
    for (char c : s) v.push_back(tsym_from_char(c));
    return v;
}

}  // namespace detail

/// Writes through a temporary file in the same directory and renames it.
inline void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << bytes;
        if (!out.flush()) throw Error("short write on " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- patches: "p vx vy ox oy w h", then rows from the top, '.' and '#'

inline std::string write_patch(const SubRule& rule, const Patch& patch) {
    std::ostringstream os;
    os << rule.p << ' ' << rule.v.x << ' ' << rule.v.y << ' ' << patch.origin().x << ' ' << patch.origin().y << ' '
       << patch.width() << ' ' << patch.height() << '\n';
    for (Int dy = patch.height() - 1; dy >= 0; --dy) {
        for (Int dx = 0; dx < patch.width(); ++dx) os << (patch.local(dx, dy) ? '#' : '.');
        os << '\n';
    }
    return os.str();
}

inline std::pair<SubRule, Patch> read_patch(const std::string& text) {
    std::istringstream is(text);
    Int p, vx, vy, ox, oy, w, h;
    if (!(is >> p >> vx >> vy >> ox >> oy >> w >> h)) throw ParseError("patch header must be 'p vx vy ox oy w h'");
    SubRule rule(p, {vx, vy});
    Patch patch({ox, oy}, w, h);
    for (Int dy = h - 1; dy >= 0; --dy) {
        std::string row;
        if (!(is >> row) || static_cast<Int>(row.size()) != w)
            throw ParseError("patch row " + std::to_string(h - 1 - dy) + " must have " + std::to_string(w) + " cells");
        for (Int dx = 0; dx < w; ++dx) {
            if (row[static_cast<std::size_t>(dx)] != '.' && row[static_cast<std::size_t>(dx)] != '#')
                throw ParseError("patch cells are '.' or '#'");
            patch.set({ox + dx, oy + dy}, row[static_cast<std::size_t>(dx)] == '#');
        }
    }
    return {rule, patch};
}

// ---- Toeplitz words: "p q a b", then the symbols of positions a..b

struct TWordFile {
    Int p = 3;
    Int q = 1;
    TWord word;
};

inline std::string write_tword(Int p, Int q, const TWord& w) {
    std::ostringstream os;
    os << p << ' ' << q << ' ' << w.start << ' ' << w.last() << '\n' << to_string(w) << '\n';
    return os.str();
}

inline TWordFile read_tword(const std::string& text) {
    std::istringstream is(text);
    TWordFile f;
    Int a, b;
    if (!(is >> f.p >> f.q >> a >> b)) throw ParseError("Toeplitz header must be 'p q a b'");
    std::string body, chunk;
    while (is >> chunk) body += chunk;
    if (static_cast<Int>(body.size()) != b - a + 1)
        throw ParseError("expected " + std::to_string(b - a + 1) + " symbols, found " + std::to_string(body.size()));
    f.word = tword_from_string(a, body);
    return f;
}

// ---- descriptors

/// heisenberg | trivial | free2 | cyclic4 | z:a,b,c,d (phi(t) = [[a,b],[c,d]])
inline std::shared_ptr<const HGroup> make_group(const std::string& desc) {
    if (desc == "heisenberg") return heisenberg_group();
    if (desc == "trivial") return std::make_shared<LatticeGroup>(std::vector<std::string>{}, std::vector<Mat2>{});
    if (desc == "free2")
        return std::make_shared<FreeGroup>(std::vector<std::string>{"a", "b"},
                                           std::vector<Mat2>{Mat2{1, 1, 0, 1}, Mat2{1, 0, 1, 1}});
    if (desc == "cyclic4") return std::make_shared<CyclicGroup>(4, Mat2{0, -1, 1, 0});
    if (desc.starts_with("z:")) {
        auto parts = detail::split(desc.substr(2), ',');
        if (parts.size() != 4) throw ParseError("z:a,b,c,d needs four entries");
        Mat2 m{detail::to_int(parts[0], "matrix entry"), detail::to_int(parts[1], "matrix entry"),
               detail::to_int(parts[2], "matrix entry"), detail::to_int(parts[3], "matrix entry")};
        if (m.det() != 1 && m.det() != -1) throw ParseError("phi(t) must lie in GL(2,Z)");
        return std::make_shared<IntegerGroup>(m);
    }
    throw ParseError("unknown group '" + desc + "' (heisenberg, trivial, free2, cyclic4, z:a,b,c,d)");
}

/// squarefree:c[:L[:R]] | fullshift:c | factor:<descriptor> (identity
/// block map through the flow, recoded again)
inline std::shared_ptr<RecodedFlow> make_flow(const std::string& desc, std::shared_ptr<const HGroup> h) {
    auto parts = detail::split(desc, ':');
    if (parts.size() >= 2 && parts[0] == "factor") {
        auto inner = make_flow(desc.substr(7), h);
        int a = inner->subshift().alphabet();
        return recode_subshift(factor_flow_to_subshift(inner, identity_block_map(a)));
    }
    if (parts.size() >= 2 && parts.size() <= 4 && parts[0] == "squarefree") {
        int c = static_cast<int>(detail::to_int(parts[1], "colour count"));
        std::optional<int> L, R;
        if (parts.size() >= 3) L = static_cast<int>(detail::to_int(parts[2], "path budget"));
        if (parts.size() == 4) R = static_cast<int>(detail::to_int(parts[3], "colouring radius"));
        return squarefree_flow(std::move(h), c, L, R);
    }
    if (parts.size() == 2 && parts[0] == "fullshift")
        return recode_subshift(
            std::make_shared<FullShift>(std::move(h), static_cast<int>(detail::to_int(parts[1], "colour count"))));
    throw ParseError("unknown flow '" + desc + "' (squarefree:c[:L[:R]], fullshift:c, factor:<flow>)");
}

// ---- dumps of y*
//
//   sofic-dump p <p> group <g> flow <f> radius <r> depth <d>
//   B i j [h] <hlayers> <vlayers> <subs>      ball(r) in ball order
//   S i j [h] <hlayers> <vlayers> <subs>      support cells, sorted

struct DumpHeader {
    Int p = 3;
    std::string group = "heisenberg";
    std::string flow = "squarefree:3";
    int radius = 0;
    int depth = 2;
};

struct Dump {
    DumpHeader header;
    std::shared_ptr<const HGroup> h;
    std::vector<GElem> ball;
    std::shared_ptr<TableOracle> table;
};

inline std::string format_record(char tag, const GElem& g, const CellSymbol& c) {
    std::string subs;
    for (auto b : c.subs) subs += b ? '1' : '0';
    std::ostringstream os;
    os << tag << ' ' << g.vec.x << ' ' << g.vec.y << ' ' << format_elem(g.h) << ' ' << detail::tsyms(c.hlayers) << ' '
       << detail::tsyms(c.vlayers) << ' ' << subs << '\n';
    return os.str();
}

inline std::string write_dump(const DumpHeader& hd, const PointOracle& y) {
    const auto& G = y.group();
    std::ostringstream os;
    os << "sofic-dump p " << hd.p << " group " << hd.group << " flow " << hd.flow << " radius " << hd.radius
       << " depth " << hd.depth << '\n';
    for (const auto& g : G.ball(hd.radius)) os << format_record('B', g, y.at(g));
    for (const auto& g : support_cells(G, hd.radius, hd.depth, hd.p)) os << format_record('S', g, y.at(g));
    return os.str();
}

inline Dump read_dump(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty dump");
    Dump d;
    {
        std::istringstream hs(line);
        std::string magic, k;
        hs >> magic;
        if (magic != "sofic-dump") throw ParseError("not a dump (missing 'sofic-dump' header)");
        while (hs >> k) {
            std::string v;
            if (!(hs >> v)) throw ParseError("dump header key '" + k + "' has no value");
            if (k == "p") d.header.p = detail::to_int(v, "p");
            else if (k == "group") d.header.group = v;
            else if (k == "flow") d.header.flow = v;
            else if (k == "radius") d.header.radius = static_cast<int>(detail::to_int(v, "radius"));
            else if (k == "depth") d.header.depth = static_cast<int>(detail::to_int(v, "depth"));
            else throw ParseError("unknown dump header key '" + k + "'");
        }
    }
    d.h = make_group(d.header.group);
    CellLayout l{d.header.p, d.h->size()};
    d.table = std::make_shared<TableOracle>(d.h, l);
    for (std::size_t lineno = 2; std::getline(is, line); ++lineno) {
        if (line.empty()) continue;
        std::istringstream rs(line);
        std::string tag, elem, hl, vl, subs;
        GElem g;
        if (!(rs >> tag >> g.vec.x >> g.vec.y >> elem >> hl >> vl >> subs) || (tag != "B" && tag != "S"))
            throw ParseError("dump line " + std::to_string(lineno) + " is malformed");
        g.h = parse_elem(elem);
        CellSymbol c{detail::parse_tsyms(hl), detail::parse_tsyms(vl), {}};
        for (char b : subs) {
            if (b != '0' && b != '1') throw ParseError("dump line " + std::to_string(lineno) + ": bad substitution bit");
            c.subs.push_back(b == '1');
        }
        if (c.hlayers.size() != l.toeplitz_count() || c.vlayers.size() != l.toeplitz_count() ||
            c.subs.size() != l.subs_count())
            throw ParseError("dump line " + std::to_string(lineno) + ": layer counts do not match the layout");
        if (tag == "B") d.ball.push_back(g);
        d.table->set(g, std::move(c));
    }
    return d;
}

// ---- renders of a coset window c -> y((0,h)(c,1_H))

/// "sub:a,b", "h:q,s" or "v:q,s"
struct LayerSelect {
    char kind = 's';
    Int a = 1, b = 1;
};

inline LayerSelect parse_layer(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos) throw ParseError("layer must be sub:a,b, h:q,s or v:q,s");
    std::string k = text.substr(0, colon);
    auto nums = detail::split(text.substr(colon + 1), ',');
    if (nums.size() != 2) throw ParseError("layer needs two indices");
    LayerSelect sel{k == "sub" ? 's' : k == "h" ? 'h' : k == "v" ? 'v' : '?', detail::to_int(nums[0], "layer index"),
                    detail::to_int(nums[1], "layer index")};
    if (sel.kind == '?') throw ParseError("unknown layer kind '" + k + "'");
    return sel;
}

inline char glyph(const CellSymbol& c, const CellLayout& l, const LayerSelect& sel) {
    if (sel.kind == 's') return c.subs.at(l.sub({sel.a, sel.b})) ? '#' : '.';
    if (sel.a < 1 || sel.a >= l.p || sel.b < 0 || static_cast<std::size_t>(sel.b) >= l.d)
        throw Error("Toeplitz layer index out of range");
    const auto& v = sel.kind == 'h' ? c.hlayers : c.vlayers;
    return to_char(v[l.layer(sel.a, static_cast<std::size_t>(sel.b))]);
}

/// Rows from the top.
inline std::vector<std::string> render_window(const PointOracle& y, const HElem& h, Vec2 origin, Int w, Int ht,
                                              const LayerSelect& sel) {
    const auto& G = y.group();
    std::vector<std::string> rows;
    for (Int j = origin.y + ht - 1; j >= origin.y; --j) {
        std::string row;
        for (Int i = origin.x; i < origin.x + w; ++i)
            row += glyph(y.at(G.mul(G.lift(h), G.translation({i, j}))), y.layout(), sel);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string render_ascii(const std::vector<std::string>& rows) {
    std::string s;
    for (const auto& r : rows) s += r + '\n';
    return s;
}

/// Binary P6, one pixel per glyph: '#' and '1' dark, '.' and '0' light,
/// '$' grey.
inline std::string render_ppm(const std::vector<std::string>& rows) {
    std::size_t w = rows.empty() ? 0 : rows[0].size();
    std::string out = "P6\n" + std::to_string(w) + ' ' + std::to_string(rows.size()) + "\n255\n";
    for (const auto& r : rows)
        for (char c : r) {
            unsigned char v = c == '#' || c == '1' ? 0 : c == '$' ? 128 : 255;
            out.append(3, static_cast<char>(v));
        }
    return out;
}

// ---- JSON reports

inline nlohmann::json to_json(const Semidirect& G, const Violation& v) {
    return {{"rule", v.rule}, {"location", G.format(v.location)}, {"detail", v.detail}};
}

inline nlohmann::json to_json(const Semidirect& G, const PeriodWitness& w) {
    nlohmann::json j{{"g", G.format(w.g)}, {"radius", w.radius}};
    if (w.position) {
        j["verdict"] = "witness";
        j["position"] = G.format(*w.position);
        j["route"] = w.route;
    } else {
        j["verdict"] = "PeriodNotExcluded";
    }
    return j;
}

}  // namespace sofic
