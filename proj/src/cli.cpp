#include "dwre/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dwre/dwre.hpp"

namespace dwre::cli {

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

using json = nlohmann::json;

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string r = "\"";
    for (char c : s) {
        if (c == '"') r += '"';
        r += c;
    }
    return r + "\"";
}

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : cols_(header.size()) { row(std::move(header)); }
    void row(std::vector<std::string> fields) {
        if (fields.size() != cols_) throw std::logic_error("csv row width");
        for (std::size_t i = 0; i < fields.size(); ++i) text_ += (i ? "," : "") + csv_field(fields[i]);
        text_ += '\n';
    }
    const std::string& text() const { return text_; }

private:
    std::size_t cols_;
    std::string text_;
};

struct Global {
    std::string config;
    std::string model;
    std::string out;
    std::uint64_t seed = 20261016;
    unsigned threads = 1;
    std::size_t depth_cap = 0;
    std::size_t piece_cap = 0;
};

struct Result {
    std::string body;
    bool is_json = false;
    json summary = json::object();
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

std::string trim(std::string s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (trim(s.substr(pos)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError("not a number: '" + s + "'");
}

// "a,b,c" or "lo:hi:step" (inclusive).
std::vector<double> parse_values(const std::string& s) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    if (s.find(':') != std::string::npos) {
        auto p = split(s, ':');
        if (p.size() != 3) throw ValidationError("range must be lo:hi:step");
        double lo = parse_double(p[0]), hi = parse_double(p[1]), st = parse_double(p[2]);
        if (!(st > 0.0) || hi < lo) throw ValidationError("range needs step > 0 and hi >= lo");
        auto n = static_cast<std::size_t>(std::floor((hi - lo) / st + 1e-9)) + 1;
        if (n > limits().word_cap) throw CapExceeded("range has too many points");
        for (std::size_t i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * st);
        return out;
    }
    for (const auto& t : split(s, ',')) out.push_back(parse_double(trim(t)));
    return out;
}

Model builtin_model(const std::string& desc) {
    auto p = split(desc, ':');
    if (p.empty()) throw ValidationError("empty model name");
    if (p[0] == "example1" && p.size() == 1) return models::example1();
    if (p[0] == "example2" && p.size() == 1) return models::example2();
    if (p[0] == "beta" && p.size() == 3) return models::beta_model(parse_double(p[1]), parse_double(p[2]));
    if (p[0] == "markov" && p.size() == 4)
        return models::markov_gates(parse_double(p[1]), parse_double(p[2]), parse_double(p[3]));
    throw ValidationError("unknown built-in model '" + desc +
                          "' (example1, example2, beta:<beta>:<varpi>, markov:<b1>:<b2>:<y>)");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

Model load_model(const Global& g) {
    if (!g.config.empty() && !g.model.empty()) throw ValidationError("give either --config or --model, not both");
    if (!g.config.empty()) {
        json j = read_json_file(g.config);
        return model_from_json(j.contains("model") ? j.at("model") : j);
    }
    if (!g.model.empty()) return builtin_model(g.model);
    throw ValidationError("this subcommand needs --config <model.json> or --model <name>");
}

std::string word_string(const std::vector<Site>& w, int dim) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) s += (i ? " " : "") + to_string(w[i], dim);
    return s;
}

std::vector<std::vector<Site>> parse_words(const std::string& s, int dim) {
    std::vector<std::vector<Site>> out;
    for (const auto& w : split(s, ';')) {
        std::string t = trim(w);
        if (t.empty()) continue;
        std::vector<Site> word;
        std::istringstream in(t);
        std::string tok;
        while (in >> tok) word.push_back(parse_site(json(tok), dim));
        out.push_back(word);
    }
    return out;
}

// ---- subcommands ----

struct SimulateArgs {
    std::size_t paths = 10;
    std::size_t steps = 1000;
};

Result cmd_simulate(const Model& m, const Global& g, const SimulateArgs& a) {
    std::vector<PathRecord> recs(a.paths);
    parallel_for(a.paths, g.threads, [&](std::size_t p) { recs[p] = simulate(m, g.seed, p, a.steps); });
    Csv csv({"path", "steps", "z_x", "z_y", "returns"});
    double mean = 0.0;
    for (std::size_t p = 0; p < a.paths; ++p) {
        Site z = recs[p].positions.back();
        std::string ret = m.dim == 1 ? std::to_string(count_returns(recs[p])) : "";
        csv.row({std::to_string(p), std::to_string(a.steps), std::to_string(z.x), std::to_string(z.y), ret});
        mean += static_cast<double>(z.x) / static_cast<double>(std::max<std::size_t>(a.paths, 1));
    }
    return {csv.text(), false, {{"paths", a.paths}, {"steps", a.steps}, {"mean_z_x", mean}}};
}

struct ProbsArgs {
    std::size_t depth = 1;
    std::optional<std::string> words;
};

Result cmd_probs(const Model& m, const Global& g, const ProbsArgs& a) {
    Csv csv({"window", "word", "p"});
    json summary{{"depth", a.depth}};
    if (a.words) {
        Environment env = path_environment(m, g.seed, 0);
        auto words = parse_words(*a.words, m.dim);
        for (const auto& w : words) csv.row({"env", word_string(w, m.dim), num(path_probability(m, env, w))});
        summary["words"] = words.size();
        summary["mode"] = "listed";
        return {csv.text(), false, summary};
    }
    if (a.depth == 0) {
        summary["mode"] = "empty";
        return {csv.text(), false, summary};
    }
    if (m.dim == 1 && m.env.is_iid()) {
        // every environment window that the words can read, exhaustively
        GibbsKernel k = kernels::dynamical(m);
        const std::int64_t R = k.reach(a.depth);
        const std::size_t sites = static_cast<std::size_t>(2 * R + 1);
        const std::size_t configs = detail::checked_pow(k.alphabet.size(), sites);
        const std::size_t words = detail::checked_pow(k.jumps.size(), a.depth);
        if (static_cast<double>(configs) * static_cast<double>(words) > static_cast<double>(limits().table_cap))
            throw CapExceeded("probability table exceeds cap");
        std::vector<std::vector<double>> ps(configs, std::vector<double>(words));
        parallel_for(configs, g.threads, [&](std::size_t c) {
            std::vector<int> labels(sites);
            detail::decode_config(k, c, labels);
            std::vector<Jump> w;
            for (std::size_t i = 0; i < words; ++i) {
                detail::decode_word(k, i, a.depth, w);
                ps[c][i] = k.p(centered(labels), w);
            }
        });
        std::vector<int> labels(sites);
        std::vector<Jump> w;
        for (std::size_t c = 0; c < configs; ++c) {
            detail::decode_config(k, c, labels);
            std::string win;
            for (std::size_t s = 0; s < sites; ++s) win += (s ? " " : "") + m.labels[static_cast<std::size_t>(labels[s])];
            for (std::size_t i = 0; i < words; ++i) {
                detail::decode_word(k, i, a.depth, w);
                std::vector<Site> ws;
                for (Jump x : w) ws.push_back(Site{x});
                csv.row({win, word_string(ws, 1), num(ps[c][i])});
            }
        }
        summary["mode"] = "windows";
        summary["window_radius"] = R;
        return {csv.text(), false, summary};
    }
    Environment env = path_environment(m, g.seed, 0);
    for (const auto& wp : word_probabilities(m, env, a.depth, m.h0))
        csv.row({"env", word_string(wp.word, m.dim), num(wp.p)});
    summary["mode"] = "environment";
    return {csv.text(), false, summary};
}

struct MemlossArgs {
    std::size_t depth = 6;
    std::size_t max_gap = 0;
};

Result cmd_memloss(const Model& m, const Global&, const MemlossArgs& a) {
    if (a.depth < 2) throw ValidationError("memloss needs depth >= 2");
    std::size_t mg = a.max_gap ? a.max_gap : a.depth - 1;
    Density alt = Density::from_pieces({0.5}, {1.5, 1.0}).scaled(1.0 / 1.25);
    GapProfile gp = gap_profile(m, a.depth, mg, m.h0, &alt);
    Csv csv({"kind", "index", "value"});
    std::vector<double> ks;
    for (std::size_t i = 0; i < gp.gap.size(); ++i) {
        csv.row({"gap", std::to_string(i + 1), num(gp.gap[i])});
        ks.push_back(static_cast<double>(i + 1));
    }
    for (std::size_t i = 0; i < gp.init_diff.size(); ++i) csv.row({"init_diff", std::to_string(i + 1), num(gp.init_diff[i])});
    GeometricFit fit = fit_geometric(ks, gp.gap);
    json summary{{"depth", a.depth},   {"max_gap", mg},     {"nu_hat", fit.nu},       {"C", fit.c},
                 {"r2", fit.r2},       {"exact", fit.exact}, {"points_fitted", fit.used}, {"nodes", gp.nodes}};
    std::vector<double> ratios;
    for (std::size_t i = 1; i < gp.init_diff.size(); ++i)
        if (gp.init_diff[i - 1] > 1e-14 && gp.init_diff[i] > 1e-14) ratios.push_back(gp.init_diff[i] / gp.init_diff[i - 1]);
    summary["init_diff_ratios"] = ratios;
    return {csv.text(), false, summary};
}

struct ConditionsArgs {
    std::size_t extra_depth = 3;
    bool exact = false;
    std::size_t n2 = 0;
};

json constants_json(const ConditionConstants& k) {
    json j;
    j["C1"] = {{"pass", k.c1.pass}, {"delta_star", k.c1.delta_star}};
    j["C2"] = {{"pass", k.c2.pass},       {"family_mode", k.c2.family_mode}, {"C1_count", k.c2.c1},
               {"xi", k.c2.xi},           {"K", k.c2.K},                     {"Theta", k.c2.Theta},
               {"M_slope", k.c2.M_slope}, {"N_full", k.c2.n_full},           {"theta", k.c2.theta},
               {"rho_lower", k.c2.rho_lower}, {"exact_C1_count", k.c2.exact_c1}, {"exact_N_full", k.c2.exact_n_full}};
    j["M"] = k.M;
    j["C"] = k.C;
    j["C_star"] = k.C_star;
    j["n0"] = k.n0;
    j["n0_ratio"] = k.n0_ratio;
    j["eps_star"] = k.eps_star;
    j["eps_star_depth"] = k.eps_star_m;
    j["C_n"] = k.C_n;
    j["a0"] = k.a0;
    j["a"] = k.a;
    j["B"] = k.B;
    j["n2"] = k.n2;
    j["n3"] = k.n3 ? json(*k.n3) : json(nullptr);
    j["eps_star_n2"] = k.eps_star_n2;
    j["varrho_hat"] = k.varrho_hat;
    j["varrho"] = k.varrho;
    j["Delta_n3"] = std::isfinite(k.Delta_n3) ? json(k.Delta_n3) : json(nullptr);
    j["C3"] = to_string(k.c3);
    j["theorem"] = to_string(k.theorem);
    j["notes"] = k.notes;
    return j;
}

Result cmd_conditions(const Model& m, const Global&, const ConditionsArgs& a) {
    ConditionConstants k = a.n2 ? constants_with_n2(m, a.n2, a.extra_depth, !a.exact)
                                : compute_n2(m, a.extra_depth, !a.exact);
    json j = constants_json(k);
    return {j.dump(2) + "\n", true, {{"theorem", to_string(k.theorem)}, {"C_star", k.C_star}}};
}

struct ScanArgs {
    std::string betas;
    double varpi = 1.5;
    std::size_t depth = 3;
    std::string ys;
    double beta1 = 10.0, beta2 = 12.0;
    std::size_t dichotomy_depth = 0;
};

Result cmd_scan(const Global& g, const ScanArgs& a) {
    Csv csv({"parameter", "admissible", "min_distance", "dichotomy"});
    std::vector<ScanPoint> pts;
    json summary{{"depth", a.depth}};
    if (!a.ys.empty()) {
        std::optional<std::size_t> dd;
        if (a.dichotomy_depth) dd = a.dichotomy_depth;
        pts = y_scan(a.beta1, a.beta2, parse_values(a.ys), a.depth, dd, g.threads);
        summary["mode"] = "y";
        summary["beta1"] = a.beta1;
        summary["beta2"] = a.beta2;
    } else {
        if (a.betas.empty()) throw ValidationError("beta-scan needs --betas or --ys");
        pts = beta_scan(parse_values(a.betas), a.varpi, a.depth, g.threads);
        summary["mode"] = "beta";
        summary["varpi"] = a.varpi;
    }
    std::size_t excluded = 0;
    for (const auto& p : pts) {
        csv.row({num(p.parameter), p.admissible ? "1" : "0", num(p.min_distance),
                 p.dichotomy ? (*p.dichotomy ? "1" : "0") : ""});
        if (!p.admissible) ++excluded;
    }
    summary["points"] = pts.size();
    summary["excluded_fraction"] = pts.empty() ? 0.0 : static_cast<double>(excluded) / static_cast<double>(pts.size());
    return {csv.text(), false, summary};
}

struct ConesArgs {
    double a = 0.0;
    std::size_t block = 0;
    std::size_t blocks = 3;
    std::size_t lambda_depth = 4;
    std::size_t pairs = 20;
    std::size_t grid = 16;
};

Result cmd_cones(const Model& m, const Global& g, const ConesArgs& a) {
    double cone_a = a.a;
    std::size_t block = a.block;
    std::optional<double> B;
    if (cone_a <= 0.0 || block == 0) {
        ConditionConstants k = compute_n2(m, 1);
        if (k.n0 == 0 || k.a <= 0.0)
            throw ValidationError("cannot derive a and n0 for this model; pass --a and --block");
        if (cone_a <= 0.0) {
            cone_a = k.a;
            B = k.B;
        }
        if (block == 0) block = k.n0;
    }
    PathRecord path = simulate(m, g.seed, 0, a.blocks * block + a.lambda_depth);
    auto word = symbols_for(m, path_environment(m, g.seed, 0), path.jumps);
    ContractionReport r = contraction_report(m, word, cone_a, a.pairs, block, a.lambda_depth, g.seed, B, a.grid);
    Csv csv({"pair", "block", "distance"});
    for (std::size_t p = 0; p < r.distances.size(); ++p)
        for (std::size_t k = 0; k < r.distances[p].size(); ++k)
            csv.row({std::to_string(p), std::to_string(k), num(r.distances[p][k])});
    json summary{{"a", r.a},
                 {"block", r.block},
                 {"blocks", r.blocks},
                 {"lambda_depth", r.lambda_depth},
                 {"pairs", r.pairs},
                 {"min_half_margin", r.min_half_margin},
                 {"max_ratio", r.max_ratio},
                 {"fitted_ratio", r.fitted_ratio},
                 {"delta_hat", r.delta_hat},
                 {"birkhoff", r.birkhoff},
                 {"projective_err", r.projective_err},
                 {"triangle_excess", r.triangle_excess},
                 {"squeeze_ok", r.squeeze_ok}};
    if (r.B) summary["B"] = *r.B;
    return {csv.text(), false, summary};
}

struct GibbsArgs {
    std::string kernel = "sinai";
    std::size_t depth = 4;
    std::size_t env_samples = 1u << 16;
    std::size_t cesaro = 0;
    std::size_t j_depth = 2;
    bool table = false;
};

GibbsKernel parse_kernel(const std::string& desc) {
    auto colon = desc.find(':');
    std::string head = desc.substr(0, colon), rest = colon == std::string::npos ? "" : desc.substr(colon + 1);
    if (head == "sinai") return rest.empty() ? kernels::sinai() : kernels::sinai(parse_double(rest));
    if (head == "memoryless") {
        if (rest.empty()) return kernels::memoryless({-1, 1}, {0.5, 0.5});
        auto q = parse_values(rest);
        if (q.size() == 1) return kernels::memoryless({-1, 1}, {1.0 - q[0], q[0]});
        if (q.size() == 2) return kernels::memoryless({-1, 1}, q);
        if (q.size() == 3) return kernels::memoryless({-1, 0, 1}, q);
        throw ValidationError("memoryless rates: q(+1), or rates for -1,+1 or -1,0,+1");
    }
    if (head == "reversible") {
        auto a = rest.empty() ? std::vector<double>{0.3, 0.8} : parse_values(rest);
        return kernels::reversible(a, std::vector<double>(a.size(), 1.0 / static_cast<double>(a.size())));
    }
    if (head == "dynamical") {
        if (rest.empty()) throw ValidationError("dynamical kernel needs a model file or built-in name");
        if (std::filesystem::exists(rest)) {
            json j = read_json_file(rest);
            return kernels::dynamical(model_from_json(j.contains("model") ? j.at("model") : j));
        }
        return kernels::dynamical(builtin_model(rest));
    }
    if (head == "table") {
        if (rest.empty()) throw ValidationError("table kernel needs a file");
        return kernels::table_from_json(read_json_file(rest));
    }
    throw ValidationError("unknown kernel '" + desc + "' (sinai, memoryless, reversible, dynamical:<model>, table:<file>)");
}

Result cmd_gibbs(const Global& g, const GibbsArgs& a) {
    GibbsKernel k = parse_kernel(a.kernel);
    GibbsReport rep = check_assumptions(k, a.depth, a.env_samples, g.seed);
    json j = to_json(rep);
    if (a.cesaro > 0) {
        CesaroResult h = cesaro_h_star(k, a.cesaro, a.j_depth, g.threads);
        double integral = integrate_star(k, h.average, g.threads);
        json hj = to_json(h.average, k, a.table);
        hj["terms"] = a.cesaro;
        hj["j_depth"] = a.j_depth;
        hj["integral"] = integral;
        hj["residual"] = h.residual;
        hj["l1_residual"] = h.l1_residual;
        hj["C"] = rep.C0;
        hj["within_C"] = h.average.inf() >= 1.0 / rep.C0 && h.average.sup() <= rep.C0;
        j["h_star"] = hj;
        j["V"] = drift(k, h.average, g.threads);
    }
    return {j.dump(2) + "\n", true,
            {{"Pos", to_string(rep.pos)}, {"Ell", to_string(rep.ell)}, {"Abs", to_string(rep.abs)}, {"Exp", to_string(rep.exp)}}};
}

struct DriftArgs {
    std::size_t paths = 1000;
    std::size_t steps = 1000;
    std::string checkpoints;
};

Result cmd_drift(const Model& m, const Global& g, const DriftArgs& a) {
    DriftEstimate d = estimate_drift(m, a.steps, a.paths, g.seed, g.threads);
    Csv csv({"quantity", "value"});
    for (std::size_t c = 0; c < d.v.size(); ++c) csv.row({"v_" + std::to_string(c), num(d.v[c])});
    csv.row({"std_err", num(d.std_err)});
    csv.row({"paths", std::to_string(d.n_paths)});
    csv.row({"steps", std::to_string(d.n_steps)});
    json summary{{"v", d.v}, {"std_err", d.std_err}};
    if (!a.checkpoints.empty()) {
        std::vector<std::size_t> cps;
        for (double v : parse_values(a.checkpoints)) {
            if (!(v >= 1.0)) throw ValidationError("checkpoints must be positive");
            cps.push_back(static_cast<std::size_t>(v));
        }
        if (!std::is_sorted(cps.begin(), cps.end())) throw ValidationError("checkpoints must be ascending");
        std::vector<std::vector<std::size_t>> ret(a.paths);
        parallel_for(a.paths, g.threads, [&](std::size_t p) { ret[p] = returns_at(m, g.seed, p, cps); });
        json med = json::array();
        for (std::size_t i = 0; i < cps.size(); ++i) {
            std::vector<std::size_t> col;
            for (const auto& r : ret) col.push_back(r[i]);
            std::sort(col.begin(), col.end());
            double median = col.size() % 2 ? static_cast<double>(col[col.size() / 2])
                                           : 0.5 * static_cast<double>(col[col.size() / 2 - 1] + col[col.size() / 2]);
            csv.row({"median_returns_" + std::to_string(cps[i]), num(median)});
            med.push_back(median);
        }
        summary["median_returns"] = med;
    }
    return {csv.text(), false, summary};
}

const char* kColumns = R"(CSV columns by subcommand:
  simulate    path,steps,z_x,z_y,returns   (one row per path; returns to the origin, 1-D only)
  probs       window,word,p                (window: labels on [-R,R] or "env"; word: space-separated jumps)
  memloss     kind,index,value             (kind gap: index = gap length; kind init_diff: index = history length + 1)
  beta-scan   parameter,admissible,min_distance,dichotomy
  cones       pair,block,distance          (Hilbert distance after `block` blocks; inf when not comparable)
  drift       quantity,value               (v_<axis>, std_err, paths, steps, median_returns_<n>)
conditions and gibbs print JSON. CSV output starts with a '# dwre <version> config <hash>' line.
With --out DIR the output goes to DIR/<subcommand>.{csv,json} next to DIR/run.json.
Exit codes: 0 ok, 1 invalid input, 2 resource cap exceeded.)";

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Deterministic walks in random environment: simulation, transfer operators and diagnostics", "dwre"};
    app.footer(kColumns);
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("dwre ") + kVersion);

    Global g;
    std::string seed_text;
    auto global = [&](CLI::App* sub) {
        sub->add_option("--config", g.config, "Model JSON file (a model object, or an object with a \"model\" key)");
        sub->add_option("--model", g.model, "Built-in model: example1, example2, beta:<beta>:<varpi>, markov:<b1>:<b2>:<y>");
        sub->add_option("--seed", g.seed, "Seed for environments, initial points and sampling");
        sub->add_option("--out", g.out, "Output directory");
        sub->add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--depth-cap", g.depth_cap, "Maximal word depth")->check(CLI::PositiveNumber);
        sub->add_option("--piece-cap", g.piece_cap, "Maximal pieces per density")->check(CLI::PositiveNumber);
    };

    SimulateArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "Simulate walker paths");
    global(s_sim);
    s_sim->add_option("--paths", sim.paths, "Number of paths");
    s_sim->add_option("--steps", sim.steps, "Steps per path");

    ProbsArgs pr;
    std::string words;
    auto* s_pr = app.add_subcommand("probs", "Path probabilities from the composed cocycle");
    global(s_pr);
    s_pr->add_option("--depth", pr.depth, "Word length");
    auto* words_opt = s_pr->add_option("--words", words, "Words to evaluate, ';'-separated, jumps space-separated");

    MemlossArgs ml;
    auto* s_ml = app.add_subcommand("memloss", "Memory gaps and initial-density differences by exhaustive enumeration");
    global(s_ml);
    s_ml->add_option("--depth", ml.depth, "Enumeration depth");
    s_ml->add_option("--max-gap", ml.max_gap, "Largest gap length (default depth - 1)");

    ConditionsArgs co;
    auto* s_co = app.add_subcommand("conditions", "Check C1, C2 and compute the constant ledger");
    global(s_co);
    s_co->add_option("--extra-depth,--depth", co.extra_depth, "Extra depth for the epsilon search");
    s_co->add_flag("--exact", co.exact, "Use values computed from the model instead of the family closed forms");
    s_co->add_option("--n2", co.n2, "Override n2");

    ScanArgs sc;
    auto* s_sc = app.add_subcommand("beta-scan", "Orbit admissibility scan over beta or over the gate parameter y");
    global(s_sc);
    s_sc->add_option("--betas", sc.betas, "Betas: list a,b,c or range lo:hi:step");
    s_sc->add_option("--varpi", sc.varpi, "Ratio of the two map slopes");
    s_sc->add_option("--depth", sc.depth, "Orbit depth");
    s_sc->add_option("--ys,--y-grid", sc.ys, "Gate parameters y (switches to y mode)");
    s_sc->add_option("--beta1,--b1", sc.beta1, "y mode: first integer map");
    s_sc->add_option("--beta2,--b2", sc.beta2, "y mode: second integer map");
    s_sc->add_option("--dichotomy-depth", sc.dichotomy_depth, "y mode: also check the covering dichotomy to this depth");

    ConesArgs cn;
    auto* s_cn = app.add_subcommand("cones", "Cone invariance and Hilbert-metric contraction along a simulated word");
    global(s_cn);
    s_cn->add_option("--a", cn.a, "Cone aperture (default: computed a)");
    s_cn->add_option("--block", cn.block, "Block length (default: computed n0)");
    s_cn->add_option("--blocks", cn.blocks, "Number of blocks");
    s_cn->add_option("--lambda-depth", cn.lambda_depth, "Depth of the future word read by the cone functional");
    s_cn->add_option("--pairs", cn.pairs, "Random pairs of cone members");
    s_cn->add_option("--grid", cn.grid, "Grid for random members");

    GibbsArgs gb;
    auto* s_gb = app.add_subcommand("gibbs", "Gibbs-kernel assumption checks, invariant density and drift");
    global(s_gb);
    s_gb->add_option("--kernel", gb.kernel,
                     "sinai | memoryless[:q] | reversible[:a,b] | dynamical:<model.json|builtin> | table:<file>");
    s_gb->add_option("--depth", gb.depth, "Exhaustive check depth");
    s_gb->add_option("--env-samples", gb.env_samples, "Environment windows sampled when enumeration is larger");
    s_gb->add_option("--cesaro", gb.cesaro, "Cesaro terms for h* (0 skips)");
    s_gb->add_option("--j-depth", gb.j_depth, "Depth of the J ratio used by the transfer operator");
    s_gb->add_flag("--table", gb.table, "Include the full h* table");

    DriftArgs dr;
    auto* s_dr = app.add_subcommand("drift", "Monte Carlo drift and return counts");
    global(s_dr);
    s_dr->add_option("--paths", dr.paths, "Number of paths");
    s_dr->add_option("--steps", dr.steps, "Steps per path");
    s_dr->add_option("--checkpoints", dr.checkpoints, "Times at which to report median return counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    const Limits saved = limits();
    try {
        if (g.depth_cap) limits().depth_cap = g.depth_cap;
        if (g.piece_cap) limits().piece_cap = g.piece_cap;
        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        json params = json::object();
        for (const CLI::Option* o : sub->get_options()) {
            if (o->get_name() == "--help" || o->count() == 0) continue;
            auto r = o->results();
            params[o->get_name()] = r.size() == 1 ? json(r.front()) : json(r);
        }
        params.erase("--out");
        params.erase("--threads");

        Result res;
        std::optional<Model> model;
        auto need_model = [&]() -> const Model& {
            model = load_model(g);
            return *model;
        };
        if (name == "simulate") res = cmd_simulate(need_model(), g, sim);
        else if (name == "probs") {
            if (words_opt->count()) pr.words = words;
            res = cmd_probs(need_model(), g, pr);
        } else if (name == "memloss") res = cmd_memloss(need_model(), g, ml);
        else if (name == "conditions") res = cmd_conditions(need_model(), g, co);
        else if (name == "beta-scan") res = cmd_scan(g, sc);
        else if (name == "cones") res = cmd_cones(need_model(), g, cn);
        else if (name == "gibbs") res = cmd_gibbs(g, gb);
        else res = cmd_drift(need_model(), g, dr);

        json identity{{"subcommand", name}, {"params", params}, {"seed", g.seed}};
        if (model) identity["model"] = to_json(*model);
        const std::string hash = hex64(fnv1a(identity.dump()));

        std::string body = res.body;
        if (res.is_json) {
            json j = json::parse(body);
            j["version"] = kVersion;
            j["config_hash"] = hash;
            body = j.dump(2) + "\n";
        } else {
            body = std::string("# dwre ") + kVersion + " config " + hash + "\n" + body;
        }

        if (g.out.empty()) {
            out << body;
        } else {
            std::filesystem::create_directories(g.out);
            const std::string file = name + (res.is_json ? ".json" : ".csv");
            std::ofstream(std::filesystem::path(g.out) / file) << body;
            json run{{"version", kVersion}, {"config_hash", hash}, {"subcommand", name}, {"seed", g.seed},
                     {"params", params},    {"output", file},      {"summary", res.summary}};
            if (model) {
                run["model"] = model->name;
                run["warnings"] = model->warnings;
            }
            std::ofstream(std::filesystem::path(g.out) / "run.json") << run.dump(2) << "\n";
        }
        if (model)
            for (const auto& w : model->warnings) err << "warning: " << w << "\n";
        limits() = saved;
        return 0;
    } catch (const CapExceeded& e) {
        limits() = saved;
        err << "cap exceeded: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        limits() = saved;
        err << "invalid input: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        limits() = saved;
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dwre::cli
