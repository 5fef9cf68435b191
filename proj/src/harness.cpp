// SPDX-License-Identifier: Apache-2.0
#include "falcon/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>
#include <tuple>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "falcon/channel.hpp"

#ifndef FALCON_GIT_REVISION
#define FALCON_GIT_REVISION "unknown"
#endif

namespace falcon {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) { return boost::algorithm::trim_copy(s); }

std::string lower(const std::string& s) { return boost::algorithm::to_lower_copy(s); }

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a number, got '" + text + "'");
}

long long parse_int(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        if (!text.empty() && text[0] != '-') {
            const unsigned long long v = std::stoull(text, &used, 0);
            if (used == text.size()) return v;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected an unsigned 64-bit integer, got '" + text + "'");
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = lower(text);
    if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
    if (t == "false" || t == "no" || t == "off" || t == "0") return false;
    throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

// "0.35", "pi", "pi/9", "2pi/9", "2*pi/9"
double parse_angle(const std::string& key, const std::string& text) {
    const std::string t = lower(text);
    const auto at = t.find("pi");
    if (at == std::string::npos) return parse_double(key, t);
    std::string coef = trim(t.substr(0, at));
    if (!coef.empty() && coef.back() == '*') coef.pop_back();
    double value = std::numbers::pi * (coef.empty() ? 1.0 : parse_double(key, trim(coef)));
    std::string rest = trim(t.substr(at + 2));
    if (!rest.empty()) {
        if (rest[0] != '/') throw ConfigError(key + ": cannot parse angle '" + text + "'");
        value /= parse_double(key, trim(rest.substr(1)));
    }
    return value;
}

SplitMode parse_mode(const std::string& text) {
    const std::string t = lower(trim(text));
    if (t == "rs") return SplitMode::RS;
    if (t == "ldm") return SplitMode::LDM;
    throw ConfigError("mode: expected RS or LDM, got '" + text + "'");
}

std::string fraction_label(double f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", f);
    if (std::stod(buf) != f) std::snprintf(buf, sizeof buf, "%.17g", f);
    return buf;
}

template <class T, class F>
std::vector<T> parse_list(const std::string& key, const std::string& text, F parse_one) {
    std::vector<T> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_one(key, item));
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return kNaN;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

bool uses_k_list(ExperimentKind kind) {
    return kind == ExperimentKind::HybridCompare || kind == ExperimentKind::Timing;
}

struct Task {
    int k_users = 0;
    int trial = 0;
    double theta = kNaN;
    double ratio = kNaN;
    int variant = 0;
    SplitMode mode = SplitMode::RS;
};

std::vector<Task> build_tasks(const ExperimentConfig& cfg, const std::vector<Variant>& variants) {
    std::vector<Task> tasks;
    const bool region = cfg.experiment == ExperimentKind::RateRegion;
    const std::vector<double> thetas = region ? cfg.thetas : std::vector<double>{kNaN};
    const std::vector<double> ratios = region ? cfg.weight_ratios() : std::vector<double>{kNaN};
    const int trials = region ? 1 : cfg.trials;
    for (int k : cfg.k_values())
        for (double theta : thetas)
            for (double ratio : ratios)
                for (int trial = 0; trial < trials; ++trial)
                    for (int v = 0; v < static_cast<int>(variants.size()); ++v)
                        for (SplitMode mode : cfg.modes) tasks.push_back({k, trial, theta, ratio, v, mode});
    return tasks;
}

TrialRow run_task(const ExperimentConfig& cfg, const Variant& variant, const Task& task) {
    TrialRow row;
    row.precoder = variant.precoder.label();
    row.method = variant.method.label();
    row.mode = to_string(task.mode);
    row.k_users = task.k_users;
    row.theta = task.theta;
    row.weight_ratio = task.ratio;
    row.trial = task.trial;
    row.seed = cfg.seed_base + static_cast<std::uint64_t>(task.trial);

    const bool region = cfg.experiment == ExperimentKind::RateRegion;
    const ChannelSet channels = region ? gen_two_user_phase_ramp(task.theta)
                                       : gen_saleh_valenzuela(row.seed, cfg.n_tx, task.k_users,
                                                              cfg.n_paths);
    if (region) {
        row.weights = {2.0 * task.ratio / (1.0 + task.ratio), 2.0 / (1.0 + task.ratio)};
    } else if (!cfg.weights.empty()) {
        row.weights = cfg.weights;
    } else {
        row.weights.assign(task.k_users, 1.0);
    }

    const AnalogPrecoder analog = make_analog(variant.precoder, channels, cfg.codebook_seed);
    // The region sweep keeps coarse alphabets whose columns coincide (PB2 at small theta).
    if (!region && analog.mode() != AnalogMode::FullyDigital &&
        !(analog.gram_condition() <= cfg.max_gram_condition)) {
        row.status = "Discarded";
        row.discarded = true;
        return row;
    }

    FalconConfig solver;
    solver.max_iters = cfg.max_iters;
    solver.eps = cfg.eps;
    solver.mode = task.mode;

    const auto start = std::chrono::steady_clock::now();
    RsSolution sol;
    try {
        sol = run_method(variant.method, channels, analog, row.weights, cfg.c0_min, cfg.p_tx(),
                         cfg.sigma2(), solver);
    } catch (const InitializationError&) {
        row.status = "InitFailure";
        row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return row;
    }
    row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.status = to_string(sol.status);
    row.feasible = counts_feasible(sol);
    row.wsr = sol.wsr;
    row.iterations = sol.iterations_used;
    for (double r : sol.rank_residuals) row.rank_residual_max = std::max(row.rank_residual_max, r);
    row.relaxation_gap = sol.relaxation_gap;
    row.unicast_rate = sol.unicast_rate;
    if (cfg.record_traces) row.trace = sol.trace;
    return row;
}

void write_list(std::ostream& os, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i];
}

void write_opt(std::ostream& os, double v) {
    if (std::isnan(v))
        os << "";
    else
        os << v;
}

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------
// labels and parsing

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Feasibility: return "feasibility";
        case ExperimentKind::Convergence: return "convergence";
        case ExperimentKind::RateRegion: return "rate_region";
        case ExperimentKind::HybridCompare: return "hybrid_compare";
        case ExperimentKind::Timing: return "timing";
    }
    return "unknown";
}

ExperimentKind parse_experiment(const std::string& name) {
    std::string t = lower(trim(name));
    std::replace(t.begin(), t.end(), '-', '_');
    if (t == "feasibility") return ExperimentKind::Feasibility;
    if (t == "convergence" || t == "converge") return ExperimentKind::Convergence;
    if (t == "rate_region") return ExperimentKind::RateRegion;
    if (t == "hybrid_compare") return ExperimentKind::HybridCompare;
    if (t == "timing") return ExperimentKind::Timing;
    throw ConfigError("unknown experiment '" + name + "'");
}

std::string MethodSpec::label() const {
    if (falcon) return "falcon";
    std::string out = "wmmse:" + to_string(init);
    if (p_m0_fraction) out += ":" + fraction_label(*p_m0_fraction);
    return out;
}

MethodSpec parse_method(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.empty()) throw ConfigError("empty method");
    MethodSpec m;
    const std::string head = lower(parts[0]);
    if (head == "falcon") {
        if (parts.size() != 1) throw ConfigError("falcon takes no options: '" + text + "'");
        return m;
    }
    if (head != "wmmse" || parts.size() < 2 || parts.size() > 3)
        throw ConfigError("method must be falcon or wmmse:<init>[:<fraction>], got '" + text + "'");
    m.falcon = false;
    try {
        m.init = parse_init_method(parts[1]);
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
    if (parts.size() == 3) m.p_m0_fraction = parse_double("method " + text, parts[2]);
    return m;
}

std::string PrecoderSpec::label() const {
    switch (mode) {
        case AnalogMode::FullyDigital: return "FD";
        case AnalogMode::PB: return "PB" + std::to_string(l_tx);
        case AnalogMode::CB: return "CB" + std::to_string(codebook_size) + "x" + std::to_string(l_tx);
    }
    return "?";
}

PrecoderSpec parse_precoder(const std::string& text) {
    const auto parts = split(lower(text), ':');
    if (parts.empty()) throw ConfigError("empty precoder");
    PrecoderSpec p;
    const std::string key = "precoder " + text;
    if (parts[0] == "fd" && parts.size() == 1) return p;
    if (parts[0] == "pb" && parts.size() <= 2) {
        p.mode = AnalogMode::PB;
        if (parts.size() == 2) p.l_tx = static_cast<int>(parse_int(key, parts[1]));
        return p;
    }
    if (parts[0] == "cb" && parts.size() <= 3) {
        p.mode = AnalogMode::CB;
        if (parts.size() >= 2) p.codebook_size = static_cast<int>(parse_int(key, parts[1]));
        if (parts.size() == 3) p.l_tx = static_cast<int>(parse_int(key, parts[2]));
        return p;
    }
    throw ConfigError("precoder must be fd, pb:<l_tx> or cb:<size>:<l_tx>, got '" + text + "'");
}

std::string Variant::label() const { return precoder.label() + "|" + method.label(); }

// ---------------------------------------------------------------------------
// ExperimentConfig

std::vector<int> ExperimentConfig::k_values() const {
    return uses_k_list(experiment) ? k_list : std::vector<int>{k_users};
}

std::vector<Variant> ExperimentConfig::expanded_variants() const {
    std::vector<Variant> base = variants;
    if (base.empty())
        for (const auto& p : precoders)
            for (const auto& m : methods) base.push_back({p, m});
    std::vector<Variant> out;
    for (const auto& v : base) {
        if (v.method.falcon || v.method.p_m0_fraction) {
            out.push_back(v);
            continue;
        }
        for (double f : p_m0_list) {
            Variant e = v;
            e.method.p_m0_fraction = f;
            out.push_back(e);
        }
    }
    return out;
}

std::vector<double> ExperimentConfig::weight_ratios() const {
    if (weight_points == 1) return {std::sqrt(ratio_min * ratio_max)};
    std::vector<double> out;
    const double span = std::log(ratio_max / ratio_min);
    for (int i = 0; i < weight_points; ++i)
        out.push_back(ratio_min * std::exp(span * i / (weight_points - 1)));
    return out;
}

void ExperimentConfig::validate() const {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    need(trials >= 1, "trials must be >= 1");
    need(threads >= 1, "threads must be >= 1");
    need(n_tx >= 1 && n_tx <= 64, "n_tx must be in [1, 64]");
    need(k_users >= 1 && k_users <= 16, "k_users must be in [1, 16]");
    need(std::isfinite(c0_min) && c0_min >= 0.0, "c0_min must be >= 0");
    need(std::isfinite(p_tx_dbm) && std::isfinite(sigma2_dbm), "p_tx_dbm and sigma2_dbm must be finite");
    need(n_paths >= 1, "n_paths must be >= 1");
    need(max_iters >= 1, "max_iters must be >= 1");
    need(eps > 0.0, "eps must be > 0");
    need(max_gram_condition > 1.0, "max_gram_condition must be > 1");
    need(!modes.empty(), "at least one split mode is required");
    need(!variants.empty() || (!precoders.empty() && !methods.empty()),
         "at least one precoder and one method are required");
    for (double f : p_m0_list) need(f > 0.0 && f < 1.0, "p_m0 fractions must lie in (0, 1)");

    const auto vs = expanded_variants();
    need(!vs.empty(), "no variants to run (empty p_m0 list?)");
    const bool region = experiment == ExperimentKind::RateRegion;
    if (uses_k_list(experiment)) {
        need(!k_list.empty(), to_string(experiment) + " needs a k_list");
        for (int k : k_list) need(k >= 1 && k <= 16, "k_list entries must be in [1, 16]");
        need(weights.empty(), "weights cannot be combined with a K sweep (equal weights are used)");
    }
    if (region) {
        need(n_tx == 4 && k_users == 2, "rate_region uses the two-user phase-ramp channels (n_tx = 4, K = 2)");
        need(!thetas.empty(), "rate_region needs thetas");
        need(weight_points >= 1, "weight_points must be >= 1");
        need(ratio_min > 0.0 && ratio_min <= ratio_max, "need 0 < ratio_min <= ratio_max");
        need(weights.empty(), "rate_region sweeps the weights itself");
    }
    if (!weights.empty()) {
        need(static_cast<int>(weights.size()) == k_users, "weights must have one entry per user");
        for (double w : weights) need(w > 0.0, "weights must be > 0");
    }
    for (const auto& v : vs) {
        if (v.method.p_m0_fraction)
            need(*v.method.p_m0_fraction > 0.0 && *v.method.p_m0_fraction < 1.0,
                 "p_m0 fraction of " + v.method.label() + " must lie in (0, 1)");
        if (v.precoder.mode == AnalogMode::FullyDigital) continue;
        need(v.precoder.l_tx >= 2, "l_tx must be >= 2");
        for (int k : k_values()) need(k <= n_tx, "hybrid precoders need K <= n_tx");
        if (v.precoder.mode == AnalogMode::CB) {
            need(v.precoder.codebook_size >= n_tx, "codebook_size must be >= n_tx");
            for (int k : k_values()) need(v.precoder.codebook_size >= k, "codebook_size must be >= K");
            need(std::pow(static_cast<double>(v.precoder.l_tx), n_tx) >= v.precoder.codebook_size,
                 "codebook_size exceeds the number of distinct codewords");
        }
    }
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.experiment = kind;
    switch (kind) {
        case ExperimentKind::Feasibility:
            c.methods = {parse_method("falcon"), parse_method("wmmse:MRT"), parse_method("wmmse:ZF"),
                         parse_method("wmmse:SLNR")};
            break;
        case ExperimentKind::Convergence:
            c.n_tx = 8;
            c.k_users = 4;
            c.c0_min = 1.5;
            c.trials = 1;
            c.record_traces = true;
            c.methods = {parse_method("falcon"), parse_method("wmmse:MRT")};
            break;
        case ExperimentKind::RateRegion:
            c.c0_min = 0.5;
            c.trials = 1;
            c.precoders = {parse_precoder("fd"), parse_precoder("pb:2"), parse_precoder("pb:4"),
                           parse_precoder("pb:8"), parse_precoder("pb:16")};
            c.modes = {SplitMode::RS, SplitMode::LDM};
            c.thetas = {std::numbers::pi / 9.0, std::numbers::pi / 4.0, std::numbers::pi / 2.0};
            break;
        case ExperimentKind::HybridCompare:
            c.n_tx = 8;
            c.c0_min = 1.5;
            c.trials = 50;
            c.k_list = {2, 3, 4, 5, 6};
            for (const char* v : {"cb:128:16", "pb:16", "fd"})
                c.variants.push_back({parse_precoder(v), parse_method("falcon")});
            c.variants.push_back({parse_precoder("fd"), parse_method("wmmse:MRT:0.80")});
            break;
        case ExperimentKind::Timing:
            c.n_tx = 8;
            c.c0_min = 1.5;
            c.trials = 20;
            c.k_list = {2, 3, 4, 5, 6};
            c.methods = {parse_method("falcon"), parse_method("wmmse:MRT:0.80")};
            break;
    }
    return c;
}

ExperimentConfig parse_config(const std::string& ini_text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(ini_text);
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    ExperimentKind kind = ExperimentKind::Feasibility;
    if (auto k = tree.get_optional<std::string>("experiment.kind")) kind = parse_experiment(*k);
    ExperimentConfig c = default_config(kind);

    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("config: key '" + section + "' outside a section");
        for (const auto& [name, node] : body) {
            const std::string key = section + "." + name;
            const std::string v = trim(node.data());
            if (key == "experiment.kind" || key == "methods.variants") continue;
            else if (key == "experiment.trials") c.trials = static_cast<int>(parse_int(key, v));
            else if (key == "experiment.seed_base") c.seed_base = parse_u64(key, v);
            else if (key == "experiment.threads") c.threads = static_cast<int>(parse_int(key, v));
            else if (key == "experiment.record_traces") c.record_traces = parse_bool(key, v);
            else if (key == "scenario.n_tx") c.n_tx = static_cast<int>(parse_int(key, v));
            else if (key == "scenario.k_users") c.k_users = static_cast<int>(parse_int(key, v));
            else if (key == "scenario.c0_min") c.c0_min = parse_double(key, v);
            else if (key == "scenario.p_tx_dbm") c.p_tx_dbm = parse_double(key, v);
            else if (key == "scenario.sigma2_dbm") c.sigma2_dbm = parse_double(key, v);
            else if (key == "scenario.weights") c.weights = parse_list<double>(key, v, parse_double);
            else if (key == "scenario.n_paths") c.n_paths = static_cast<int>(parse_int(key, v));
            else if (key == "precoder.list") {
                c.precoders.clear();
                for (const auto& p : split(v, ',')) c.precoders.push_back(parse_precoder(p));
                c.variants.clear();
            } else if (key == "precoder.codebook_seed") c.codebook_seed = parse_u64(key, v);
            else if (key == "precoder.max_gram_condition") c.max_gram_condition = parse_double(key, v);
            else if (key == "methods.list") {
                c.methods.clear();
                for (const auto& m : split(v, ',')) c.methods.push_back(parse_method(m));
                c.variants.clear();
            } else if (key == "methods.modes") {
                c.modes.clear();
                for (const auto& m : split(v, ',')) c.modes.push_back(parse_mode(m));
            } else if (key == "methods.max_iters") c.max_iters = static_cast<int>(parse_int(key, v));
            else if (key == "methods.eps") c.eps = parse_double(key, v);
            else if (key == "sweep.thetas") c.thetas = parse_list<double>(key, v, parse_angle);
            else if (key == "sweep.weight_points") c.weight_points = static_cast<int>(parse_int(key, v));
            else if (key == "sweep.ratio_min") c.ratio_min = parse_double(key, v);
            else if (key == "sweep.ratio_max") c.ratio_max = parse_double(key, v);
            else if (key == "sweep.k_list")
                c.k_list = parse_list<int>(key, v, [](const std::string& k, const std::string& s) {
                    return static_cast<int>(parse_int(k, s));
                });
            else if (key == "sweep.p_m0") c.p_m0_list = parse_list<double>(key, v, parse_double);
            else throw ConfigError("config: unknown key '" + key + "'");
        }
    }
    // explicit variants win over the precoder x method product, whatever the key order
    if (auto vs = tree.get_optional<std::string>("methods.variants")) {
        c.variants.clear();
        for (const auto& item : split(*vs, ',')) {
            const auto bar = item.find('|');
            if (bar == std::string::npos) throw ConfigError("variant must be <precoder>|<method>: '" + item + "'");
            c.variants.push_back({parse_precoder(trim(item.substr(0, bar))), parse_method(trim(item.substr(bar + 1)))});
        }
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Json to_json(const ExperimentConfig& c) {
    Json j;
    j["experiment"] = to_string(c.experiment);
    j["scenario"] = {{"n_tx", c.n_tx},           {"k_users", c.k_users},
                     {"c0_min", c.c0_min},       {"p_tx_dbm", c.p_tx_dbm},
                     {"sigma2_dbm", c.sigma2_dbm}, {"weights", c.weights},
                     {"n_paths", c.n_paths}};
    Json variants = Json::array();
    for (const auto& v : c.expanded_variants()) variants.push_back(v.label());
    j["variants"] = variants;
    Json modes = Json::array();
    for (auto m : c.modes) modes.push_back(to_string(m));
    j["modes"] = modes;
    j["codebook_seed"] = c.codebook_seed;
    j["trials"] = c.trials;
    j["seed_base"] = c.seed_base;
    j["threads"] = c.threads;
    j["max_iters"] = c.max_iters;
    j["eps"] = c.eps;
    j["max_gram_condition"] = c.max_gram_condition;
    j["record_traces"] = c.record_traces;
    j["sweep"] = {{"thetas", c.thetas},           {"weight_points", c.weight_points},
                  {"ratio_min", c.ratio_min},     {"ratio_max", c.ratio_max},
                  {"k_list", c.k_list},           {"p_m0", c.p_m0_list}};
    return j;
}

// ---------------------------------------------------------------------------
// running

AnalogPrecoder make_analog(const PrecoderSpec& spec, const ChannelSet& channels,
                           std::uint64_t codebook_seed) {
    switch (spec.mode) {
        case AnalogMode::FullyDigital: return identity_analog(channels.n_tx());
        case AnalogMode::PB: return design_pb(channels, PhaseShiftSet(spec.l_tx, channels.k_users()));
        case AnalogMode::CB: {
            const PhaseShiftSet alphabet(spec.l_tx, channels.k_users());
            return design_cb(channels,
                             build_codebook(channels.n_tx(), spec.codebook_size, alphabet, codebook_seed),
                             alphabet);
        }
    }
    throw ParameterError("make_analog: unknown analog mode");
}

RsSolution run_method(const MethodSpec& method, const ChannelSet& channels,
                      const AnalogPrecoder& analog, const std::vector<double>& weights,
                      double c0_min, double p_tx, double sigma2, const FalconConfig& solver) {
    if (method.falcon) return run_falcon(channels, analog, weights, c0_min, p_tx, sigma2, solver);
    if (!method.p_m0_fraction) throw ParameterError("run_method: WMMSE needs a multicast power fraction");
    const WmmseInit init = init_point(channels, analog, method.init, *method.p_m0_fraction, p_tx, sigma2);
    return run_wmmse(channels, analog, init, weights, c0_min, p_tx, sigma2, solver);
}

bool counts_feasible(const RsSolution& sol) {
    if (!sol.ok()) return false;
    for (const auto& s : sol.slacks)
        if (!(s.value >= -1e-6)) return false;
    return true;
}

RunRecord run_experiment(const ExperimentConfig& config, std::ostream* progress) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    const auto variants = config.expanded_variants();
    const auto tasks = build_tasks(config, variants);

    RunRecord record;
    record.config = config;
    record.trials.resize(tasks.size());

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex mu;
    std::exception_ptr error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next++;
            if (i >= tasks.size()) return;
            try {
                record.trials[i] = run_task(config, variants[tasks[i].variant], tasks[i]);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                next = tasks.size();
                return;
            }
            const std::size_t n = ++done;
            if (progress) {
                std::lock_guard lock(mu);
                const auto& r = record.trials[i];
                *progress << '[' << n << '/' << tasks.size() << "] " << r.precoder << '|' << r.method
                          << ' ' << r.mode << " K=" << r.k_users << " trial=" << r.trial << ' ' << r.status
                          << '\n';
            }
        }
    };
    const int n_threads = std::min<int>(config.threads, static_cast<int>(std::max<std::size_t>(1, tasks.size())));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    record.summary = summarize(record.trials);
    record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return record;
}

namespace {
RunRecord run_as(const ExperimentConfig& config, ExperimentKind kind, std::ostream* progress) {
    if (config.experiment != kind)
        throw ConfigError("config is for experiment " + to_string(config.experiment) + ", not " +
                          to_string(kind));
    return run_experiment(config, progress);
}
}  // namespace

RunRecord exp_feasibility(const ExperimentConfig& c, std::ostream* p) {
    return run_as(c, ExperimentKind::Feasibility, p);
}
RunRecord exp_convergence(const ExperimentConfig& c, std::ostream* p) {
    return run_as(c, ExperimentKind::Convergence, p);
}
RunRecord exp_rate_region(const ExperimentConfig& c, std::ostream* p) {
    return run_as(c, ExperimentKind::RateRegion, p);
}
RunRecord exp_hybrid_compare(const ExperimentConfig& c, std::ostream* p) {
    return run_as(c, ExperimentKind::HybridCompare, p);
}
RunRecord exp_timing(const ExperimentConfig& c, std::ostream* p) {
    return run_as(c, ExperimentKind::Timing, p);
}

// ---------------------------------------------------------------------------
// aggregation

std::vector<SummaryRow> summarize(const std::vector<TrialRow>& rows) {
    // NaN thetas and ratios compare unequal, so group on their bit patterns via a printed key
    auto num_key = [](double v) {
        std::ostringstream os;
        os << std::setprecision(17) << v;
        return os.str();
    };
    using Instance = std::tuple<int, std::string, std::string, int>;  // K, theta, ratio, trial
    std::map<Instance, bool> all_feasible;
    for (const auto& r : rows) {
        const Instance key{r.k_users, num_key(r.theta), num_key(r.weight_ratio), r.trial};
        auto [it, inserted] = all_feasible.emplace(key, true);
        it->second = it->second && r.feasible && !r.discarded;
    }

    std::vector<SummaryRow> out;
    std::map<std::tuple<std::string, std::string, std::string, int, std::string>, std::size_t> index;
    struct Acc {
        std::vector<double> wsr, wsr_common, iterations, time;
    };
    std::vector<Acc> acc;
    for (const auto& r : rows) {
        const auto key = std::make_tuple(r.precoder, r.method, r.mode, r.k_users, num_key(r.theta));
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, out.size()).first;
            SummaryRow s;
            s.precoder = r.precoder;
            s.method = r.method;
            s.mode = r.mode;
            s.k_users = r.k_users;
            s.theta = r.theta;
            out.push_back(s);
            acc.emplace_back();
        }
        SummaryRow& s = out[it->second];
        Acc& a = acc[it->second];
        ++s.runs;
        if (r.discarded) {
            ++s.discarded;
            continue;
        }
        if (!r.feasible) continue;
        ++s.feasible;
        a.wsr.push_back(r.wsr);
        a.iterations.push_back(r.iterations);
        a.time.push_back(r.time_s);
        if (all_feasible.at({r.k_users, num_key(r.theta), num_key(r.weight_ratio), r.trial}))
            a.wsr_common.push_back(r.wsr);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        SummaryRow& s = out[i];
        const int counted = s.runs - s.discarded;
        s.feasibility_pct = counted > 0 ? 100.0 * s.feasible / counted : kNaN;
        s.mean_wsr = mean(acc[i].wsr);
        s.median_wsr = median(acc[i].wsr);
        s.common_runs = static_cast<int>(acc[i].wsr_common.size());
        s.mean_wsr_common = mean(acc[i].wsr_common);
        s.mean_iterations = mean(acc[i].iterations);
        s.mean_time_s = mean(acc[i].time);
    }
    return out;
}

// ---------------------------------------------------------------------------
// output

void write_trials_csv(std::ostream& os, const std::vector<TrialRow>& rows) {
    os << "precoder,method,mode,k_users,theta,weight_ratio,trial,seed,status,feasible,discarded,wsr,"
          "iterations,time_s,rank_residual_max,relaxation_gap,weights,unicast_rate\n";
    os << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.precoder << ',' << r.method << ',' << r.mode << ',' << r.k_users << ',';
        write_opt(os, r.theta);
        os << ',';
        write_opt(os, r.weight_ratio);
        os << ',' << r.trial << ',' << r.seed << ',' << r.status << ',' << (r.feasible ? 1 : 0) << ','
           << (r.discarded ? 1 : 0) << ',' << r.wsr << ',' << r.iterations << ',' << r.time_s << ','
           << r.rank_residual_max << ',' << r.relaxation_gap << ',';
        write_list(os, r.weights);
        os << ',';
        write_list(os, r.unicast_rate);
        os << '\n';
    }
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << "precoder,method,mode,k_users,theta,runs,discarded,feasible,feasibility_pct,mean_wsr,"
          "median_wsr,common_runs,mean_wsr_common,mean_iterations,mean_time_s\n";
    os << std::setprecision(17);
    for (const auto& s : rows) {
        os << s.precoder << ',' << s.method << ',' << s.mode << ',' << s.k_users << ',';
        write_opt(os, s.theta);
        os << ',' << s.runs << ',' << s.discarded << ',' << s.feasible << ',';
        for (double v : {s.feasibility_pct, s.mean_wsr, s.median_wsr}) {
            write_opt(os, v);
            os << ',';
        }
        os << s.common_runs << ',';
        write_opt(os, s.mean_wsr_common);
        os << ',';
        write_opt(os, s.mean_iterations);
        os << ',';
        write_opt(os, s.mean_time_s);
        os << '\n';
    }
}

void write_traces_csv(std::ostream& os, const std::vector<TrialRow>& rows) {
    os << "precoder,method,mode,k_users,trial,seed,iteration,wsr\n" << std::setprecision(17);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.trace.size(); ++i)
            os << r.precoder << ',' << r.method << ',' << r.mode << ',' << r.k_users << ',' << r.trial
               << ',' << r.seed << ',' << (i + 1) << ',' << r.trace[i] << '\n';
}

void write_region_csv(std::ostream& os, const std::vector<TrialRow>& rows) {
    os << "theta,precoder,method,mode,mu1,mu2,r1,r2,wsr,status\n" << std::setprecision(17);
    for (const auto& r : rows) {
        if (r.weights.size() != 2) continue;
        os << r.theta << ',' << r.precoder << ',' << r.method << ',' << r.mode << ',' << r.weights[0]
           << ',' << r.weights[1] << ',';
        if (r.unicast_rate.size() == 2)
            os << r.unicast_rate[0] << ',' << r.unicast_rate[1];
        else
            os << ',';
        os << ',' << r.wsr << ',' << r.status << '\n';
    }
}

Json to_json(const TrialRow& r) {
    return Json{{"precoder", r.precoder},
                {"method", r.method},
                {"mode", r.mode},
                {"k_users", r.k_users},
                {"theta", num(r.theta)},
                {"weight_ratio", num(r.weight_ratio)},
                {"trial", r.trial},
                {"seed", r.seed},
                {"status", r.status},
                {"feasible", r.feasible},
                {"discarded", r.discarded},
                {"wsr", r.wsr},
                {"iterations", r.iterations},
                {"time_s", r.time_s},
                {"rank_residual_max", r.rank_residual_max},
                {"relaxation_gap", r.relaxation_gap},
                {"weights", r.weights},
                {"unicast_rate", r.unicast_rate},
                {"trace", r.trace}};
}

Json to_json(const SummaryRow& s) {
    return Json{{"precoder", s.precoder},
                {"method", s.method},
                {"mode", s.mode},
                {"k_users", s.k_users},
                {"theta", num(s.theta)},
                {"runs", s.runs},
                {"discarded", s.discarded},
                {"feasible", s.feasible},
                {"feasibility_pct", num(s.feasibility_pct)},
                {"mean_wsr", num(s.mean_wsr)},
                {"median_wsr", num(s.median_wsr)},
                {"common_runs", s.common_runs},
                {"mean_wsr_common", num(s.mean_wsr_common)},
                {"mean_iterations", num(s.mean_iterations)},
                {"mean_time_s", num(s.mean_time_s)}};
}

Json meta_json(const RunRecord& record) {
    Json seeds = Json::array();
    const int trials = record.config.experiment == ExperimentKind::RateRegion ? 1 : record.config.trials;
    for (int i = 0; i < trials; ++i) seeds.push_back(record.config.seed_base + static_cast<std::uint64_t>(i));
    return Json{{"experiment", to_string(record.config.experiment)},
                {"config", to_json(record.config)},
                {"revision", build_revision()},
                {"seeds", seeds},
                {"rows", record.trials.size()},
                {"wall_time_s", record.wall_time_s}};
}

std::vector<std::filesystem::path> write_outputs(const RunRecord& record,
                                                 const std::filesystem::path& out_dir,
                                                 const std::string& format) {
    if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
    std::filesystem::create_directories(out_dir);
    const std::string stem = to_string(record.config.experiment);
    std::vector<std::filesystem::path> written;
    auto open = [&](const std::string& name) {
        written.push_back(out_dir / name);
        std::ofstream os(written.back());
        if (!os) throw std::runtime_error("cannot write " + written.back().string());
        return os;
    };

    if (format == "json") {
        Json j = meta_json(record);
        j["trials"] = Json::array();
        for (const auto& r : record.trials) j["trials"].push_back(to_json(r));
        j["summary"] = Json::array();
        for (const auto& s : record.summary) j["summary"].push_back(to_json(s));
        auto os = open(stem + ".json");
        os << j.dump(2) << '\n';
        return written;
    }
    {
        auto os = open(stem + "_trials.csv");
        write_trials_csv(os, record.trials);
    }
    {
        auto os = open(stem + "_summary.csv");
        write_summary_csv(os, record.summary);
    }
    if (record.config.record_traces) {
        auto os = open(stem + "_traces.csv");
        write_traces_csv(os, record.trials);
    }
    if (record.config.experiment == ExperimentKind::RateRegion) {
        auto os = open(stem + "_region.csv");
        write_region_csv(os, record.trials);
    }
    {
        auto os = open(stem + "_meta.json");
        os << meta_json(record).dump(2) << '\n';
    }
    return written;
}

std::string build_revision() { return FALCON_GIT_REVISION; }

}  // namespace falcon
