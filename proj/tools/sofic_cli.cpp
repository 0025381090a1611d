// sofic: build, render, verify and report on Final(X,f) over Z^2 x| H.
//
// Exit status: 0 pass, 1 violations, 2 usage, 3 budget.

#include <CLI11.hpp>

#include <iostream>

#include "sofic/sofic.hpp"

using namespace sofic;

namespace {

enum Exit { Pass = 0, Violations = 1, Usage = 2, Budget = 3 };

struct UsageError : Error {
    using Error::Error;
};

struct RunConfig {
    std::string group = "heisenberg";
    std::string flow = "squarefree:3";
    Int p = 3;
    int depth = 2;
    int radius = 3;
    int gmax = 2;
    int hmax = 2;
    Int search_radius = 81;
    std::size_t budget = 12;
    unsigned threads = 0;
    std::string in, out, json, ascii, ppm;
    // substitute
    std::string v = "1,1";
    int n = 1;
    std::string seed = "black";
    // toeplitz
    Int q = 1;
    std::string x;
    Int from = 0, to = 30;
    bool symbolic = false;
    // render
    std::string coset, layer = "sub:1,1", origin = "0,0", size = "27,27";
    std::string config;
};

Vec2 parse_pair(const std::string& s, const char* what) {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw UsageError(std::string(what) + " must be 'a,b'");
    try {
        return {std::stoll(s.substr(0, comma)), std::stoll(s.substr(comma + 1))};
    } catch (const std::exception&) {
        throw UsageError(std::string(what) + " must be 'a,b'");
    }
}

/// "key = value" lines; '#' starts a comment. Values replace flags.
void apply_config(RunConfig& c) {
    if (c.config.empty()) return;
    std::istringstream is(read_file(c.config));
    std::string line;
    while (std::getline(is, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) throw UsageError("config line without '=': " + line);
            continue;
        }
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        auto num = [&](auto& field) {
            try {
                field = static_cast<std::remove_reference_t<decltype(field)>>(std::stoll(v));
            } catch (const std::exception&) {
                throw UsageError("config value for '" + k + "' must be an integer");
            }
        };
        if (k == "group") c.group = v;
        else if (k == "flow") c.flow = v;
        else if (k == "p") num(c.p);
        else if (k == "depth") num(c.depth);
        else if (k == "radius") num(c.radius);
        else if (k == "gmax") num(c.gmax);
        else if (k == "hmax") num(c.hmax);
        else if (k == "search-radius") num(c.search_radius);
        else if (k == "budget") num(c.budget);
        else if (k == "threads") num(c.threads);
        else if (k == "in") c.in = v;
        else if (k == "out") c.out = v;
        else if (k == "json") c.json = v;
        else if (k == "ascii") c.ascii = v;
        else if (k == "ppm") c.ppm = v;
        else if (k == "layer") c.layer = v;
        else if (k == "coset") c.coset = v;
        else if (k == "origin") c.origin = v;
        else if (k == "size") c.size = v;
        else throw UsageError("unknown config key '" + k + "'");
    }
}

void validate(const RunConfig& c) {
    if (c.p < 3) throw UsageError("p must be at least 3");
    if (c.radius < 0 || c.gmax < 0 || c.hmax < 0 || c.search_radius < 0) throw UsageError("radii must be >= 0");
    if (c.depth < 1 || c.budget < 1) throw UsageError("depth and budgets must be >= 1");
}

void emit(const std::string& path, const std::string& bytes) {
    if (path.empty() || path == "-")
        std::cout << bytes;
    else
        write_atomic(path, bytes);
}

void emit_json(const RunConfig& c, const nlohmann::json& j) {
    if (!c.json.empty()) emit(c.json, j.dump(2) + "\n");
}

int cmd_substitute(const RunConfig& c) {
    Vec2 v = parse_pair(c.v, "--v");
    if (v.mod(c.p) == Vec2{0, 0}) throw UsageError("v must be nonzero mod p");
    if (c.n < 0) throw UsageError("n must be >= 0");
    if (c.seed != "black" && c.seed != "white") throw UsageError("seed is 'black' or 'white'");
    SubRule rule(c.p, v);
    Patch patch = iterate(rule, c.seed == "black", c.n);
    emit(c.out, write_patch(rule, patch));
    if (!c.ascii.empty() || !c.ppm.empty()) {
        std::vector<std::string> rows;
        for (Int dy = patch.height() - 1; dy >= 0; --dy) {
            std::string r;
            for (Int dx = 0; dx < patch.width(); ++dx) r += patch.local(dx, dy) ? '#' : '.';
            rows.push_back(r);
        }
        if (!c.ascii.empty()) emit(c.ascii, render_ascii(rows));
        if (!c.ppm.empty()) emit(c.ppm, render_ppm(rows));
    }
    return Pass;
}

int cmd_encode(const RunConfig& c) {
    if (c.q < 1 || c.q >= c.p) throw UsageError("q must satisfy 1 <= q < p");
    if (c.from > c.to) throw UsageError("--from must not exceed --to");
    if (c.symbolic) {
        std::string s;
        for (Int j = c.from; j <= c.to; ++j) {
            auto n = psi_level(c.p, c.q, j);
            s += n ? "x" + std::to_string(*n) : "$";
        }
        emit(c.out, s + "\n");
        return Pass;
    }
    Bits x;
    for (char ch : c.x) {
        if (ch != '0' && ch != '1') throw UsageError("--x is a bit string");
        x.push_back(static_cast<std::uint8_t>(ch - '0'));
    }
    emit(c.out, write_tword(c.p, c.q, psi_encode(c.p, c.q, x, c.from, c.to)));
    return Pass;
}

int cmd_decode(const RunConfig& c) {
    if (c.in.empty()) throw UsageError("decode needs --in");
    TWordFile f = read_tword(read_file(c.in));
    DecodeResult r = decode(f.p, f.q, f.word, c.depth);
    std::ostringstream os;
    os << "prefix ";
    for (auto b : r.prefix) os << int(b);
    os << "\nk-chain";
    for (Int k : r.k_chain) os << ' ' << k;
    os << "\nresidual " << (r.residual ? std::to_string(*r.residual) : "none") << '\n';
    emit(c.out, os.str());
    emit_json(c, {{"prefix", r.prefix}, {"k_chain", r.k_chain}, {"residual", r.residual ? nlohmann::json(*r.residual) : nlohmann::json()}});
    return Pass;
}

struct Instance {
    std::shared_ptr<const HGroup> h;
    std::shared_ptr<RecodedFlow> flow;
    std::shared_ptr<const PointOracle> y;
    DumpHeader header;
    std::vector<GElem> ball;
};

Instance rebuild(const RunConfig& c) {
    Instance in;
    in.h = make_group(c.group);
    in.flow = make_flow(c.flow, in.h);
    in.y = std::make_shared<YStarOracle>(in.flow, in.h, c.p);
    in.header = {c.p, c.group, c.flow, c.radius, c.depth};
    in.ball = Semidirect(in.h).ball(c.radius);
    return in;
}

Instance load(const RunConfig& c) {
    if (c.in.empty()) return rebuild(c);
    Dump d = read_dump(read_file(c.in));
    Instance in;
    in.h = d.h;
    in.flow = make_flow(d.header.flow, d.h);
    in.y = d.table;
    in.header = d.header;
    in.ball = d.ball;
    if (in.ball != d.table->group().ball(d.header.radius))
        throw ParseError("B records do not list ball(" + std::to_string(d.header.radius) + ") in ball order");
    return in;
}

int cmd_build(const RunConfig& c) {
    Instance in = rebuild(c);
    emit(c.out, write_dump(in.header, *in.y));
    std::cerr << "built " << in.ball.size() << " ball records (radius " << c.radius << ")\n";
    return Pass;
}

int cmd_verify(const RunConfig& c) {
    Instance in = load(c);
    RuleSet rules;
    rules.flow = in.flow;
    rules.budget = c.budget;
    rules.threads = c.threads;
    const auto& G = in.y->group();
    auto violations = scan_rules(*in.y, in.header.radius, rules, in.header.depth);
    nlohmann::json report{{"radius", in.header.radius}, {"depth", in.header.depth}, {"violations", nlohmann::json::array()}};
    for (const auto& v : violations) {
        std::cout << "violation " << v.rule << " at " << G.format(v.location) << ": " << v.detail << '\n';
        report["violations"].push_back(to_json(G, v));
    }
    try {
        Bits x = upsilon_decode(*in.y, in.header.depth);
        std::string s;
        for (auto b : x) s += char('0' + b);
        std::cout << "decoded x* prefix " << s << '\n';
        report["decoded"] = s;
    } catch (const Inconsistent& e) {
        std::cout << "violation decode at " << G.format(G.identity()) << ": " << e.what() << '\n';
        report["violations"].push_back({{"rule", "decode"}, {"location", G.format(G.identity())}, {"detail", e.what()}});
    }
    bool ok = report["violations"].empty();
    report["pass"] = ok;
    std::cout << (ok ? "PASS" : "FAIL") << ": " << report["violations"].size() << " violation(s) on " << in.ball.size()
              << " ball cells\n";
    emit_json(c, report);
    return ok ? Pass : Violations;
}

int cmd_aperiodicity(const RunConfig& c) {
    Instance in = rebuild(c);
    const auto& G = in.y->group();
    nlohmann::json report = nlohmann::json::array();
    bool all = true;
    for (const auto& g : G.ball(c.gmax)) {
        if (g == G.identity()) continue;
        PeriodWitness w = check_aperiodicity(*in.y, g, c.search_radius);
        all &= w.excluded();
        std::cout << G.format(g) << ' ';
        if (w.position)
            std::cout << "witness " << G.format(*w.position) << " (" << w.route << ")\n";
        else
            std::cout << "PeriodNotExcluded within radius " << w.radius << '\n';
        report.push_back(to_json(G, w));
    }
    emit_json(c, report);
    std::cout << (all ? "PASS" : "FAIL") << '\n';
    return all ? Pass : Violations;
}

int cmd_equivariance(const RunConfig& c) {
    Instance in = rebuild(c);
    nlohmann::json report = nlohmann::json::array();
    bool all = true;
    for (const auto& h : in.h->ball(c.hmax)) {
        auto r = check_equivariance(*in.flow, in.y, h, c.depth);
        all &= r.pass;
        std::string d, e;
        for (auto b : r.decoded) d += char('0' + b);
        for (auto b : r.expected) e += char('0' + b);
        std::cout << format_elem(h) << " decoded " << d << " expected " << e << (r.pass ? "" : " MISMATCH " + r.detail)
                  << '\n';
        report.push_back({{"h", format_elem(h)}, {"decoded", d}, {"expected", e}, {"pass", r.pass}});
    }
    emit_json(c, report);
    std::cout << (all ? "PASS" : "FAIL") << '\n';
    return all ? Pass : Violations;
}

int cmd_render(const RunConfig& c) {
    Instance in = load(c);
    HElem h = c.coset.empty() ? in.h->identity() : parse_elem(c.coset);
    Vec2 o = parse_pair(c.origin, "--origin"), sz = parse_pair(c.size, "--size");
    if (sz.x <= 0 || sz.y <= 0) throw UsageError("--size must be positive");
    auto rows = render_window(*in.y, h, o, sz.x, sz.y, parse_layer(c.layer));
    if (!c.ppm.empty()) emit(c.ppm, render_ppm(rows));
    if (!c.ascii.empty() || c.ppm.empty()) emit(c.ascii, render_ascii(rows));
    return Pass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Construction and verification kit for sofic subshifts over Z^2 x| H"};
    app.require_subcommand(1);
    RunConfig c;

    auto common = [&](CLI::App* s) {
        s->add_option("--config", c.config, "key = value file; its values replace flags");
        s->add_option("--json", c.json, "write a JSON report");
    };
    auto instance = [&](CLI::App* s) {
        s->add_option("--group", c.group, "heisenberg | trivial | free2 | cyclic4 | z:a,b,c,d");
        s->add_option("--flow", c.flow, "squarefree:c[:L[:R]] | fullshift:c | factor:<flow>");
        s->add_option("--p", c.p, "substitution base");
        s->add_option("--depth", c.depth, "decoding depth");
        s->add_option("--threads", c.threads, "worker threads (0: all cores)");
    };

    auto* sub = app.add_subcommand("substitute", "iterate s_v from one cell");
    common(sub);
    sub->add_option("--p", c.p);
    sub->add_option("--v", c.v, "a,b");
    sub->add_option("--n", c.n, "number of iterations");
    sub->add_option("--seed", c.seed, "black | white");
    sub->add_option("--out", c.out, "patch file (default stdout)");
    sub->add_option("--ascii", c.ascii);
    sub->add_option("--ppm", c.ppm);

    auto* tz = app.add_subcommand("toeplitz", "encode or decode Psi_q windows");
    tz->require_subcommand(1);
    auto* enc = tz->add_subcommand("encode");
    common(enc);
    enc->add_option("--p", c.p);
    enc->add_option("--q", c.q);
    enc->add_option("--x", c.x, "bits x0 x1 ...");
    enc->add_option("--from", c.from);
    enc->add_option("--to", c.to);
    enc->add_flag("--symbolic", c.symbolic, "print x<n> in place of bits");
    enc->add_option("--out", c.out);
    auto* dec = tz->add_subcommand("decode");
    common(dec);
    dec->add_option("--in", c.in)->required();
    dec->add_option("--depth", c.depth);
    dec->add_option("--out", c.out);

    auto* build = app.add_subcommand("build", "dump y* on a ball of G");
    common(build);
    instance(build);
    build->add_option("--radius", c.radius);
    build->add_option("--out", c.out, "dump file (default stdout)");

    auto* verify = app.add_subcommand("verify", "scan cell, glue and window rules of a dump or a rebuilt y*");
    common(verify);
    instance(verify);
    verify->add_option("--in", c.in, "dump file");
    verify->add_option("--radius", c.radius);
    verify->add_option("--budget", c.budget, "flow truncation budget");

    auto* aper = app.add_subcommand("aperiodicity", "period witnesses for every g != 1 in a ball of G");
    common(aper);
    instance(aper);
    aper->add_option("--gmax", c.gmax, "radius of the candidate ball");
    aper->add_option("--radius", c.search_radius, "search radius");

    auto* eq = app.add_subcommand("equivariance", "decoder against f_h(x*) on a ball of H");
    common(eq);
    instance(eq);
    eq->add_option("--hmax", c.hmax);

    auto* render = app.add_subcommand("render", "ASCII or PPM picture of one layer on a coset window");
    common(render);
    instance(render);
    render->add_option("--in", c.in, "dump file (default: rebuild)");
    render->add_option("--coset", c.coset, "h as [a,...]");
    render->add_option("--layer", c.layer, "sub:a,b | h:q,s | v:q,s");
    render->add_option("--origin", c.origin, "x,y");
    render->add_option("--size", c.size, "w,h");
    render->add_option("--ascii", c.ascii);
    render->add_option("--ppm", c.ppm);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? Pass : Usage;
    }

    try {
        apply_config(c);
        validate(c);
        if (*sub) return cmd_substitute(c);
        if (*enc) return cmd_encode(c);
        if (*dec) return cmd_decode(c);
        if (*build) return cmd_build(c);
        if (*verify) return cmd_verify(c);
        if (*aper) return cmd_aperiodicity(c);
        if (*eq) return cmd_equivariance(c);
        if (*render) return cmd_render(c);
    } catch (const UsageError& e) {
        std::cerr << "usage: " << e.what() << '\n';
        return Usage;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return Usage;
    } catch (const BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << '\n';
        return Budget;
    } catch (const NoColoringFound& e) {
        std::cerr << "no colouring found: " << e.what() << '\n';
        return Budget;
    } catch (const NotToeplitz& e) {
        std::cerr << "not Toeplitz: " << e.what() << '\n';
        return Violations;
    } catch (const InsufficientPrefix& e) {
        std::cerr << "insufficient prefix: " << e.what() << '\n';
        return Violations;
    } catch (const WindowTooSmall& e) {
        std::cerr << "window too small: " << e.what() << '\n';
        return Violations;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Usage;
    }
    return Usage;
}
