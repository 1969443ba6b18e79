// SPDX-License-Identifier: Apache-2.0
#include "lrvae/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "lrvae/io.hpp"
#include "lrvae/rng.hpp"

namespace lrvae::cli {

namespace {

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    }
}

long long to_ll(const std::string& key, const std::string& v) {
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

struct Field {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }

const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> f = [] {
        std::vector<std::pair<std::string, Field>> v;
        auto add_str = [&](const std::string& k, std::string RunConfig::*m) {
            v.push_back({k, {[m](RunConfig& c, const std::string&, const std::string& s) { c.*m = s; },
                             [m](const RunConfig& c) { return c.*m; }}});
        };
        auto add_double = [&](const std::string& k, double RunConfig::*m) {
            v.push_back({k, {[m](RunConfig& c, const std::string& key, const std::string& s) {
                                 c.*m = to_double(key, s);
                             },
                             [m](const RunConfig& c) { return io::fmt_double(c.*m); }}});
        };
        auto add_size = [&](const std::string& k, std::size_t RunConfig::*m) {
            v.push_back({k, {[m](RunConfig& c, const std::string& key, const std::string& s) {
                                 const long long x = to_ll(key, s);
                                 if (x < 0) throw ConfigError("config: " + key + " must be >= 0");
                                 c.*m = static_cast<std::size_t>(x);
                             },
                             [m](const RunConfig& c) { return fmt_u64(c.*m); }}});
        };
        auto add_int = [&](const std::string& k, int RunConfig::*m) {
            v.push_back({k, {[m](RunConfig& c, const std::string& key, const std::string& s) {
                                 c.*m = static_cast<int>(to_ll(key, s));
                             },
                             [m](const RunConfig& c) { return std::to_string(c.*m); }}});
        };
        auto add_u64 = [&](const std::string& k, std::uint64_t RunConfig::*m) {
            v.push_back({k, {[m](RunConfig& c, const std::string& key, const std::string& s) {
                                 c.*m = static_cast<std::uint64_t>(to_ll(key, s));
                             },
                             [m](const RunConfig& c) { return fmt_u64(c.*m); }}});
        };
        auto add_bool = [&](const std::string& k, bool RunConfig::*m) {
            v.push_back({k, {[m](RunConfig& c, const std::string& key, const std::string& s) {
                                 c.*m = to_bool(key, s);
                             },
                             [m](const RunConfig& c) { return c.*m ? "1" : "0"; }}});
        };

        add_str("data", &RunConfig::data);
        add_str("idx_images", &RunConfig::idx_images);
        add_str("idx_labels", &RunConfig::idx_labels);
        add_str("synthetic", &RunConfig::synthetic);
        add_size("synth_n", &RunConfig::synth_n);
        add_size("synth_dim", &RunConfig::synth_dim);
        add_size("synth_k", &RunConfig::synth_k);
        add_size("synth_arms", &RunConfig::synth_arms);
        add_double("synth_scale", &RunConfig::synth_scale);
        add_double("synth_spread", &RunConfig::synth_spread);
        add_size("n_limit", &RunConfig::n_limit);
        add_size("latent_dim", &RunConfig::latent_dim);
        add_str("enc_hidden", &RunConfig::enc_hidden);
        add_str("dec_hidden", &RunConfig::dec_hidden);
        add_str("activation", &RunConfig::activation);
        add_double("leaky_slope", &RunConfig::leaky_slope);
        add_str("likelihood", &RunConfig::likelihood);
        add_double("sigma2", &RunConfig::sigma2);
        add_bool("binarize", &RunConfig::binarize);
        add_double("beta", &RunConfig::beta);
        add_double("alpha_T", &RunConfig::alpha_T);
        add_int("warmup_epochs", &RunConfig::warmup_epochs);
        add_str("schedule", &RunConfig::schedule);
        add_str("lr_z_source", &RunConfig::lr_z_source);
        add_int("epochs", &RunConfig::epochs);
        add_size("batch_size", &RunConfig::batch_size);
        add_double("learning_rate", &RunConfig::learning_rate);
        add_u64("seed", &RunConfig::seed);
        add_int("eval_cadence", &RunConfig::eval_cadence);
        add_double("eps_au", &RunConfig::eps_au);
        add_size("mi_mc", &RunConfig::mi_mc);
        add_double("zeta", &RunConfig::zeta);
        add_double("varrho", &RunConfig::varrho);
        add_double("ball_radius", &RunConfig::ball_radius);
        add_size("n_probe_points", &RunConfig::n_probe_points);
        add_size("n_pairs_per_ball", &RunConfig::n_pairs_per_ball);
        add_double("power_iter_tol", &RunConfig::power_iter_tol);
        add_double("tau_r", &RunConfig::tau_r);
        add_double("tau_l", &RunConfig::tau_l);
        add_str("probe_scales", &RunConfig::probe_scales);
        add_double("eps_max", &RunConfig::eps_max);
        add_double("gamma", &RunConfig::gamma);
        add_bool("with_true", &RunConfig::with_true);
        add_size("collapse_bases", &RunConfig::collapse_bases);
        add_str("noise_stddevs", &RunConfig::noise_stddevs);
        add_size("noise_samples", &RunConfig::noise_samples);
        add_str("noise_inputs", &RunConfig::noise_inputs);
        add_str("out_dir", &RunConfig::out_dir);
        return v;
    }();
    return f;
}

const Field* find_field(const std::string& key) {
    for (const auto& [k, f] : fields())
        if (k == key) return &f;
    return nullptr;
}

template <typename T, typename Conv>
std::vector<T> parse_list(const std::string& s, Conv conv) {
    std::vector<T> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        if (cur.empty()) continue;
        out.push_back(conv(cur));
    }
    return out;
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& s) {
    return parse_list<std::size_t>(s, [&](const std::string& c) {
        const long long x = to_ll("list", c);
        if (x < 0) throw ConfigError("config: negative entry in list: " + s);
        return static_cast<std::size_t>(x);
    });
}

std::vector<double> parse_double_list(const std::string& s) {
    return parse_list<double>(s, [&](const std::string& c) { return to_double("list", c); });
}

nn::ModelArch RunConfig::arch(std::size_t data_dim) const {
    nn::ModelArch a;
    a.data_dim = data_dim;
    a.latent_dim = latent_dim;
    a.enc_hidden = parse_size_list(enc_hidden);
    a.dec_hidden = parse_size_list(dec_hidden);
    a.act = act_from_name(activation);
    a.leaky_slope = leaky_slope;
    a.likelihood = {nn::likelihood_from_name(likelihood), sigma2};
    return a;
}

objectives::LossWeights RunConfig::loss_weights() const {
    objectives::LossWeights w;
    w.beta = beta;
    w.alpha_T = alpha_T;
    w.warmup_epochs = warmup_epochs;
    if (schedule != "linear") throw ConfigError("config: unknown schedule: " + schedule);
    w.schedule = objectives::Schedule::linear;
    if (lr_z_source == "posterior")
        w.lr_z_source = objectives::LrZSource::posterior;
    else if (lr_z_source == "prior")
        w.lr_z_source = objectives::LrZSource::prior;
    else
        throw ConfigError("config: unknown lr_z_source: " + lr_z_source);
    return w;
}

analysis::ProbeConfig RunConfig::probe_config() const {
    analysis::ProbeConfig p;
    p.zeta = zeta;
    p.varrho = varrho;
    p.ball_radius = ball_radius;
    p.n_probe_points = n_probe_points;
    p.n_pairs_per_ball = n_pairs_per_ball;
    p.power_iter_tol = power_iter_tol;
    p.seed = seed;
    p.tau_r = tau_r;
    p.tau_l = tau_l;
    return p;
}

data::SyntheticSpec RunConfig::synthetic_spec() const {
    data::SyntheticSpec s;
    if (synthetic == "gaussian_mixture") {
        s.kind = data::SyntheticSpec::Kind::gaussian_mixture;
        s.mixture.k = synth_k;
        s.mixture.dim = synth_dim;
        Rng rng(seed, 0x3ea5ULL);
        for (std::size_t c = 0; c < synth_k; ++c) {
            std::vector<double> mean(synth_dim);
            for (auto& m : mean) m = synth_spread * rng.normal();
            s.mixture.means.push_back(std::move(mean));
            s.mixture.scales.push_back(synth_scale);
        }
    } else if (synthetic == "pinwheel") {
        s.kind = data::SyntheticSpec::Kind::pinwheel;
        s.pinwheel.arms = synth_arms;
    } else {
        throw ConfigError("config: unknown synthetic kind: " + synthetic);
    }
    return s;
}

std::vector<double> RunConfig::probe_scale_list() const {
    return parse_double_list(probe_scales);
}

std::vector<double> RunConfig::noise_stddev_list() const {
    return parse_double_list(noise_stddevs);
}

std::vector<std::size_t> RunConfig::noise_input_list() const {
    return parse_size_list(noise_inputs);
}

std::vector<std::string> RunConfig::to_lines() const {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) out.push_back(k + "=" + f.get(*this));
    return out;
}

void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    const Field* f = find_field(key);
    if (!f) throw ConfigError("config: unknown key: " + key);
    f->set(cfg, key, value);
}

RunConfig parse_config_file(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip comment and whitespace
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto ltrim = line.find_first_not_of(" \t\r");
        if (ltrim == std::string::npos) continue;
        auto rtrim = line.find_last_not_of(" \t\r");
        line = line.substr(ltrim, rtrim - ltrim + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
        };
        trim(key);
        trim(value);
        apply_kv(base, key, value);
    }
    return base;
}

std::vector<std::string> apply_flags(RunConfig& cfg, const std::vector<std::string>& args) {
    std::vector<std::string> positional;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0) {
            positional.push_back(a);
            continue;
        }
        std::string key = a.substr(2);
        std::string value;
        const auto eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= args.size()) throw ConfigError("flag --" + key + " needs a value");
            value = args[++i];
        }
        apply_kv(cfg, key, value);
    }
    return positional;
}

}  // namespace lrvae::cli
