#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dwre/core.hpp"
#include "dwre/density.hpp"
#include "dwre/environment.hpp"
#include "dwre/maps.hpp"

namespace dwre {

// β-map family parameters: maps T_beta and T_{varpi beta}, half-interval gates.
struct BetaFamily {
    double beta = 0.0;
    double varpi = 0.0;
};

struct Model {
    std::string name;
    int dim = 1;
    std::vector<Site> jumps;
    std::vector<std::string> labels;
    std::vector<ExpandingMap> label_maps;
    std::vector<GatePartition> label_gates;
    Density h0 = Density::constant(1.0);
    Environment env;
    std::optional<BetaFamily> family;
    std::vector<std::string> warnings;

    // derived by finalize()
    std::vector<ExpandingMap> maps;
    std::vector<int> map_of_label;
    std::vector<SubInterval> holes;
    std::vector<Symbol> sigma;

    void finalize() {
        if (labels.empty()) throw ValidationError("model has no labels");
        if (label_maps.size() != labels.size() || label_gates.size() != labels.size())
            throw ValidationError("every label needs a map and a gate partition");
        if (jumps.size() < 2) throw ValidationError("jump set needs at least two elements");
        if (dim != 1 && dim != 2) throw ValidationError("dimension must be 1 or 2");
        for (std::size_t i = 0; i < jumps.size(); ++i) {
            if (dim == 1 && jumps[i].y != 0) throw ValidationError("one-dimensional model with 2D jump");
            for (std::size_t j = i + 1; j < jumps.size(); ++j)
                if (jumps[i] == jumps[j]) throw ValidationError("duplicate jump");
        }
        for (const auto& gp : label_gates)
            for (const auto& g : gp.gates())
                if (std::find(jumps.begin(), jumps.end(), g.jump) == jumps.end())
                    throw ValidationError("gate jump not in the jump set");
        if (std::abs(h0.integrate() - 1.0) > 1e-12) {
            double m = h0.integrate();
            if (!(m > 0.0)) throw ValidationError("initial density has no mass");
            h0 = h0.scaled(1.0 / m);
            warnings.push_back("initial density normalized (mass was " + std::to_string(m) + ")");
        }
        if (h0.inf() < 0.0) throw ValidationError("initial density must be non-negative");
        if (env.alphabet() != labels) throw ValidationError("environment alphabet must match model labels");

        maps.clear();
        map_of_label.clear();
        for (const auto& m : label_maps) {
            int idx = -1;
            for (std::size_t k = 0; k < maps.size(); ++k)
                if (maps[k].same_dynamics(m)) idx = static_cast<int>(k);
            if (idx < 0) {
                idx = static_cast<int>(maps.size());
                maps.push_back(m);
            }
            map_of_label.push_back(idx);
        }
        holes.clear();
        for (const auto& gp : label_gates)
            for (const auto& g : gp.gates())
                if (std::find(holes.begin(), holes.end(), g.interval) == holes.end()) holes.push_back(g.interval);
        std::sort(holes.begin(), holes.end());
        sigma.clear();
        for (std::size_t m = 0; m < maps.size(); ++m)
            for (const auto& h : holes) sigma.push_back({static_cast<int>(m), h});
    }

    int label_index(const std::string& s) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == s) return static_cast<int>(i);
        throw ValidationError("unknown label '" + s + "'");
    }

    // Symbol of the step leaving a site labelled gate_label by jump w into a site labelled map_label.
    Symbol symbol(int gate_label, Site w, int map_label) const {
        return {map_of_label[static_cast<std::size_t>(map_label)],
                label_gates[static_cast<std::size_t>(gate_label)].gate_of(w)};
    }

    const ExpandingMap& map(const Symbol& s) const { return maps[static_cast<std::size_t>(s.map)]; }

    Density step(const Symbol& s, const Density& f) const { return map(s).transfer(f, s.gate); }

    Density compose(const std::vector<Symbol>& word, const Density& f) const {
        if (word.size() > limits().depth_cap)
            throw CapExceeded("word length " + std::to_string(word.size()) + " exceeds depth cap");
        Density g = f;
        for (const auto& s : word) {
            g = step(s, g);
            if (g.is_zero()) break;
        }
        return g;
    }

    double min_expansion() const {
        double m = maps.front().min_expansion();
        for (const auto& T : maps) m = std::min(m, T.min_expansion());
        return m;
    }
    double max_expansion() const {
        double m = 0.0;
        for (const auto& T : maps) m = std::max(m, T.max_expansion());
        return m;
    }

    // Gates independent of the label.
    bool deterministic_gates() const {
        for (const auto& gp : label_gates)
            for (const auto& w : jumps)
                if (gp.gate_of(w) != label_gates.front().gate_of(w)) return false;
        return true;
    }

    bool symmetric_jumps() const {
        for (const auto& w : jumps)
            if (std::find(jumps.begin(), jumps.end(), -w) == jumps.end()) return false;
        return true;
    }

    std::size_t jump_index(Site w) const {
        for (std::size_t i = 0; i < jumps.size(); ++i)
            if (jumps[i] == w) return i;
        throw ValidationError("jump not in the jump set");
    }
};

inline nlohmann::json map_json(const ExpandingMap& T) {
    if (T.is_beta()) return {{"beta", T.beta_value()}};
    nlohmann::json br = nlohmann::json::array();
    for (const auto& b : T.branches())
        br.push_back({{"lo", b.domain.lo}, {"hi", b.domain.hi}, {"slope", b.slope}, {"intercept", b.intercept}});
    return {{"branches", br}};
}

inline ExpandingMap map_from_json(const nlohmann::json& j, const std::string& label) {
    if (j.contains("beta")) return ExpandingMap::beta(j.at("beta").get<double>(), label);
    if (!j.contains("branches")) throw ValidationError("map '" + label + "' needs \"beta\" or \"branches\"");
    std::vector<Branch> br;
    for (const auto& b : j.at("branches")) {
        Branch x;
        x.domain = {b.at("lo").get<double>(), b.at("hi").get<double>()};
        x.slope = b.at("slope").get<double>();
        x.intercept = b.value("intercept", 0.0);
        br.push_back(x);
    }
    return ExpandingMap(std::move(br), label);
}

inline nlohmann::json to_json(const Model& m) {
    nlohmann::json j;
    j["name"] = m.name;
    j["dim"] = m.dim;
    nlohmann::json js = nlohmann::json::array();
    for (auto w : m.jumps) js.push_back(site_json(w, m.dim));
    j["jumps"] = js;
    j["labels"] = m.labels;
    nlohmann::json maps = nlohmann::json::object(), gates = nlohmann::json::object();
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        maps[m.labels[i]] = map_json(m.label_maps[i]);
        nlohmann::json g = nlohmann::json::array();
        for (const auto& gate : m.label_gates[i].gates())
            g.push_back({{"jump", site_json(gate.jump, m.dim)}, {"lo", gate.interval.lo}, {"hi", gate.interval.hi}});
        gates[m.labels[i]] = g;
    }
    j["maps"] = maps;
    j["gates"] = gates;
    j["h0"] = to_json(m.h0);
    j["environment"] = to_json(m.env, m.dim);
    if (m.family) j["family"] = {{"beta", m.family->beta}, {"varpi", m.family->varpi}};
    return j;
}

inline Model model_from_json(const nlohmann::json& j) {
    try {
        Model m;
        m.name = j.value("name", std::string("model"));
        m.dim = j.value("dim", 1);
        const auto& jumps = j.at("jumps");
        if (jumps.is_number_integer()) {
            // shorthand: nearest-neighbour jumps in one dimension
            auto r = jumps.get<std::int64_t>();
            for (std::int64_t k = -r; k <= r; ++k)
                if (k != 0) m.jumps.push_back(Site{k});
        } else {
            for (const auto& w : jumps) m.jumps.push_back(parse_site(w, m.dim));
        }
        for (const auto& l : j.at("labels")) m.labels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
        const auto& maps = j.at("maps");
        const auto& gates = j.at("gates");
        for (const auto& l : m.labels) {
            const auto& mj = maps.contains(l) ? maps.at(l) : maps.at("*");
            m.label_maps.push_back(map_from_json(mj, l));
            const auto& gj = gates.contains(l) ? gates.at(l) : gates.at("*");
            std::vector<Gate> gs;
            for (const auto& g : gj)
                gs.push_back({parse_site(g.at("jump"), m.dim), make_interval(g.at("lo").get<double>(),
                                                                             g.at("hi").get<double>())});
            m.label_gates.emplace_back(std::move(gs));
        }
        if (j.contains("h0")) m.h0 = density_from_json(j.at("h0"));
        nlohmann::json ej = j.value("environment", nlohmann::json::object());
        if (!ej.contains("alphabet")) ej["alphabet"] = m.labels;
        m.env = environment_from_json(ej, m.dim);
        if (j.contains("family"))
            m.family = BetaFamily{j.at("family").at("beta").get<double>(), j.at("family").at("varpi").get<double>()};
        m.finalize();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model JSON: ") + e.what());
    }
}

namespace models {

inline Environment uniform_env(const std::vector<std::string>& labels, std::uint64_t seed = 1) {
    return Environment::iid(labels, std::vector<double>(labels.size(), 1.0 / static_cast<double>(labels.size())), seed);
}

// Sinai-type walk: 4x mod 1 everywhere, gates biased by the site label.
inline Model example1() {
    Model m;
    m.name = "example1";
    m.jumps = {Site{-1}, Site{1}};
    m.labels = {"-1", "+1"};
    m.label_maps = {ExpandingMap::beta(4.0, "-1"), ExpandingMap::beta(4.0, "+1")};
    m.label_gates.emplace_back(std::vector<Gate>{{Site{-1}, {0.0, 0.25}}, {Site{1}, {0.25, 1.0}}});
    m.label_gates.emplace_back(std::vector<Gate>{{Site{-1}, {0.0, 0.75}}, {Site{1}, {0.75, 1.0}}});
    m.env = uniform_env(m.labels);
    m.finalize();
    return m;
}

// Persistent walk: label-dependent maps, fixed half-interval gates.
inline Model example2() {
    Model m;
    m.name = "example2";
    m.jumps = {Site{-1}, Site{1}};
    m.labels = {"-1", "+1"};
    std::vector<Branch> fm = {{{0.0, 0.25}, 2.0, 0.0},
                              {{0.25, 0.5}, 4.0, -1.0},
                              {{0.5, 0.75}, 4.0, -2.0},
                              {{0.75, 1.0}, 4.0, -3.0}};
    std::vector<Branch> fp = {{{0.0, 0.25}, 4.0, 0.0},
                              {{0.25, 0.5}, 4.0, -1.0},
                              {{0.5, 0.75}, 4.0, -2.0},
                              {{0.75, 1.0}, 2.0, -1.0}};
    m.label_maps = {ExpandingMap(fm, "-1"), ExpandingMap(fp, "+1")};
    GatePartition g(std::vector<Gate>{{Site{-1}, {0.0, 0.5}}, {Site{1}, {0.5, 1.0}}});
    m.label_gates = {g, g};
    m.env = uniform_env(m.labels);
    m.finalize();
    return m;
}

// Maps T_beta and T_{varpi beta}; the label also fixes which half of [0,1) sends the walker left.
inline Model beta_model(double beta, double varpi) {
    Model m;
    m.name = "beta";
    m.jumps = {Site{-1}, Site{1}};
    m.labels = {"b.lo", "b.hi", "vb.lo", "vb.hi"};
    GatePartition lo(std::vector<Gate>{{Site{-1}, {0.0, 0.5}}, {Site{1}, {0.5, 1.0}}});
    GatePartition hi(std::vector<Gate>{{Site{1}, {0.0, 0.5}}, {Site{-1}, {0.5, 1.0}}});
    ExpandingMap T1 = ExpandingMap::beta(beta), T2 = ExpandingMap::beta(varpi * beta);
    m.label_maps = {T1, T1, T2, T2};
    m.label_gates = {lo, hi, lo, hi};
    m.env = uniform_env(m.labels);
    m.family = BetaFamily{beta, varpi};
    m.finalize();
    return m;
}

// Two integer β-maps with deterministic gates [0,y), [y,1-y), [1-y,1) for jumps -1, 0, +1.
inline Model markov_gates(double beta1, double beta2, double y) {
    if (!(y > 0.0 && y < 0.5)) throw ValidationError("gate parameter y must lie in (0,1/2)");
    Model m;
    m.name = "markov_gates";
    m.jumps = {Site{-1}, Site{0}, Site{1}};
    m.labels = {"1", "2"};
    m.label_maps = {ExpandingMap::beta(beta1, "1"), ExpandingMap::beta(beta2, "2")};
    GatePartition g(std::vector<Gate>{{Site{-1}, {0.0, y}}, {Site{0}, {y, 1.0 - y}}, {Site{1}, {1.0 - y, 1.0}}});
    m.label_gates = {g, g};
    m.env = uniform_env(m.labels);
    m.finalize();
    return m;
}

}  // namespace models
}  // namespace dwre
