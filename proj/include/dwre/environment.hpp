#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dwre/core.hpp"

namespace dwre {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

inline double unit_from_bits(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

struct EnvironmentLaw {
    enum class Kind { iid, window };
    Kind kind = Kind::iid;
    std::vector<std::string> alphabet;
    std::vector<double> probs;
    // window law: explicit sites, a fill label elsewhere, optional period along the first axis
    std::map<Site, int> window;
    int fill = 0;
    std::int64_t period = 0;

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < alphabet.size(); ++i)
            if (alphabet[i] == name) return static_cast<int>(i);
        throw ValidationError("unknown environment label '" + name + "'");
    }
};

class Environment {
public:
    Environment() = default;
    Environment(std::shared_ptr<const EnvironmentLaw> law, std::uint64_t seed) : law_(std::move(law)), seed_(seed) {
        prepare();
    }

    static Environment iid(std::vector<std::string> alphabet, std::vector<double> probs, std::uint64_t seed) {
        auto law = std::make_shared<EnvironmentLaw>();
        law->kind = EnvironmentLaw::Kind::iid;
        law->alphabet = std::move(alphabet);
        law->probs = std::move(probs);
        validate(*law);
        return Environment(law, seed);
    }

    static Environment window(std::vector<std::string> alphabet, std::map<Site, int> sites, int fill,
                              std::int64_t period = 0) {
        auto law = std::make_shared<EnvironmentLaw>();
        law->kind = EnvironmentLaw::Kind::window;
        law->alphabet = std::move(alphabet);
        law->window = std::move(sites);
        law->fill = fill;
        law->period = period;
        validate(*law);
        return Environment(law, 0);
    }

    // Constant environment, every site carries the same label.
    static Environment frozen(std::vector<std::string> alphabet, int label) {
        return window(std::move(alphabet), {}, label);
    }

    static void validate(const EnvironmentLaw& law) {
        if (law.alphabet.empty()) throw ValidationError("environment alphabet is empty");
        if (law.kind == EnvironmentLaw::Kind::iid) {
            if (law.probs.size() != law.alphabet.size())
                throw ValidationError("environment needs one probability per label");
            double s = 0.0;
            for (double p : law.probs) {
                if (!(p >= 0.0)) throw ValidationError("environment probabilities must be non-negative");
                s += p;
            }
            if (std::abs(s - 1.0) > 1e-9) throw ValidationError("environment probabilities must sum to 1");
        } else {
            auto ok = [&](int v) { return v >= 0 && v < static_cast<int>(law.alphabet.size()); };
            if (!ok(law.fill)) throw ValidationError("fill label out of range");
            for (const auto& [s, v] : law.window)
                if (!ok(v)) throw ValidationError("window label out of range");
            if (law.period < 0) throw ValidationError("period must be non-negative");
        }
    }

    int at(Site z) const {
        Site s = z + offset_;
        if (law_->kind == EnvironmentLaw::Kind::iid) {
            std::uint64_t h = hash_combine(hash_combine(seed_, static_cast<std::uint64_t>(s.x)),
                                           static_cast<std::uint64_t>(s.y) ^ 0x5bd1e995ULL);
            double u = unit_from_bits(h);
            double c = 0.0;
            for (std::size_t i = 0; i + 1 < cum_.size(); ++i) {
                c = cum_[i];
                if (u < c) return static_cast<int>(i);
            }
            return static_cast<int>(cum_.size()) - 1;
        }
        if (law_->period > 0 && s.y == 0) {
            s.x %= law_->period;
            if (s.x < 0) s.x += law_->period;
        }
        if (!dense_.empty()) {
            if (s.y == 0 && s.x >= dense_lo_ && s.x < dense_lo_ + static_cast<std::int64_t>(dense_.size()))
                return dense_[static_cast<std::size_t>(s.x - dense_lo_)];
            return law_->fill;
        }
        auto it = law_->window.find(s);
        return it == law_->window.end() ? law_->fill : it->second;
    }

    int operator()(Site z) const { return at(z); }

    Environment translate(Site w) const {
        Environment e = *this;
        e.offset_ += w;
        return e;
    }

    Environment with_seed(std::uint64_t seed) const {
        Environment e = *this;
        e.seed_ = seed;
        e.offset_ = {};
        return e;
    }

    const EnvironmentLaw& law() const { return *law_; }
    std::shared_ptr<const EnvironmentLaw> law_ptr() const { return law_; }
    std::uint64_t seed() const { return seed_; }
    Site offset() const { return offset_; }
    const std::vector<std::string>& alphabet() const { return law_->alphabet; }
    std::size_t alphabet_size() const { return law_->alphabet.size(); }
    bool is_iid() const { return law_->kind == EnvironmentLaw::Kind::iid; }

    // Per-label marginal weights: the law's probabilities, or uniform for window laws.
    std::vector<double> weights() const {
        if (is_iid()) return law_->probs;
        return std::vector<double>(alphabet_size(), 1.0 / static_cast<double>(alphabet_size()));
    }

    friend bool operator==(const Environment& a, const Environment& b) {
        return a.law_ == b.law_ && a.seed_ == b.seed_ && a.offset_ == b.offset_;
    }

private:
    std::shared_ptr<const EnvironmentLaw> law_;
    std::uint64_t seed_ = 0;
    Site offset_{};
    std::vector<double> cum_;
    std::vector<int> dense_;
    std::int64_t dense_lo_ = 0;

    void prepare() {
        if (!law_) throw ValidationError("environment without law");
        if (law_->kind == EnvironmentLaw::Kind::iid) {
            cum_.resize(law_->probs.size());
            std::partial_sum(law_->probs.begin(), law_->probs.end(), cum_.begin());
            return;
        }
        if (law_->window.empty()) return;
        std::int64_t lo = law_->window.begin()->first.x, hi = lo;
        bool flat = true;
        for (const auto& [s, v] : law_->window) {
            if (s.y != 0) flat = false;
            lo = std::min(lo, s.x);
            hi = std::max(hi, s.x);
        }
        if (!flat || hi - lo > 1'000'000) return;
        dense_lo_ = lo;
        dense_.assign(static_cast<std::size_t>(hi - lo + 1), law_->fill);
        for (const auto& [s, v] : law_->window) dense_[static_cast<std::size_t>(s.x - lo)] = v;
    }
};

inline Environment translate(const Environment& env, Site w) { return env.translate(w); }

inline Site parse_site(const nlohmann::json& j, int dim) {
    if (j.is_number_integer()) return Site{j.get<std::int64_t>()};
    if (j.is_array()) {
        if (j.size() == 1) return Site{j[0].get<std::int64_t>()};
        if (j.size() == 2 && dim == 2) return Site{j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
    }
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        auto comma = s.find(',');
        try {
            if (comma == std::string::npos) return Site{std::stoll(s)};
            std::string a = s.substr(0, comma), b = s.substr(comma + 1);
            if (!a.empty() && a.front() == '(') a.erase(0, 1);
            if (!b.empty() && b.back() == ')') b.pop_back();
            return Site{std::stoll(a), std::stoll(b)};
        } catch (const std::exception&) {
        }
    }
    throw ValidationError("cannot parse site/jump from " + j.dump());
}

inline nlohmann::json site_json(Site s, int dim) {
    if (dim == 1) return s.x;
    return nlohmann::json::array({s.x, s.y});
}

inline Environment environment_from_json(const nlohmann::json& j, int dim, std::uint64_t default_seed = 0) {
    if (!j.is_object() || !j.contains("alphabet")) throw ValidationError("environment JSON needs \"alphabet\"");
    std::vector<std::string> alphabet;
    for (const auto& a : j.at("alphabet")) alphabet.push_back(a.is_string() ? a.get<std::string>() : a.dump());
    if (j.contains("window")) {
        EnvironmentLaw law;
        law.alphabet = alphabet;
        std::map<Site, int> sites;
        for (const auto& [k, v] : j.at("window").items()) {
            Site s = parse_site(nlohmann::json(k), dim);
            sites[s] = law.index_of(v.is_string() ? v.get<std::string>() : v.dump());
        }
        const auto& f = j.value("fill", nlohmann::json(alphabet.front()));
        int fill = law.index_of(f.is_string() ? f.get<std::string>() : f.dump());
        return Environment::window(alphabet, std::move(sites), fill, j.value("period", std::int64_t{0}));
    }
    std::vector<double> probs;
    if (j.contains("probs")) {
        probs = j.at("probs").get<std::vector<double>>();
    } else {
        probs.assign(alphabet.size(), 1.0 / static_cast<double>(alphabet.size()));
    }
    return Environment::iid(alphabet, probs, j.value("seed", default_seed));
}

inline nlohmann::json to_json(const Environment& env, int dim) {
    const auto& law = env.law();
    nlohmann::json j;
    j["alphabet"] = law.alphabet;
    if (law.kind == EnvironmentLaw::Kind::iid) {
        j["probs"] = law.probs;
        j["seed"] = env.seed();
    } else {
        nlohmann::json w = nlohmann::json::object();
        for (const auto& [s, v] : law.window) w[to_string(s, dim)] = law.alphabet[static_cast<std::size_t>(v)];
        j["window"] = w;
        j["fill"] = law.alphabet[static_cast<std::size_t>(law.fill)];
        if (law.period > 0) j["period"] = law.period;
    }
    return j;
}

}  // namespace dwre
