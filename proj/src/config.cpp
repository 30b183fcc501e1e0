#include "csiloc/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csiloc/errors.hpp"

namespace csiloc {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw config_error("config: [" + section + "] " + key + " is not a number: " + v);
    }
}

int to_int(const std::string& section, const std::string& key, const std::string& v) {
    const double d = to_double(section, key, v);
    if (d != std::floor(d)) throw config_error("config: [" + section + "] " + key +
                                               " must be an integer: " + v);
    return static_cast<int>(d);
}

uint64_t to_u64(const std::string& section, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const uint64_t u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw config_error("config: [" + section + "] " + key + " is not an unsigned integer: " +
                           v);
    }
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw config_error("config: [" + section + "] " + key + " is not a boolean: " + v);
}

}  // namespace

bool KvFile::has(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
}

std::string KvFile::get(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    if (s == sections.end() || s->second.count(key) == 0)
        throw config_error("config: missing [" + section + "] " + key);
    return s->second.at(key);
}

std::string KvFile::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

KvFile parse_kv(const std::string& text) {
    KvFile kv;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("config: malformed section header at line " +
                                   std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            kv.sections[section];
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config: expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw config_error("config: empty key at line " + std::to_string(lineno));
        kv.sections[section][key] = value;
    }
    return kv;
}

KvFile parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_kv(ss.str());
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(to_double("", "list", item));
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char cand[32];
        std::snprintf(cand, sizeof cand, "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(cand, "%lf", &back);
        if (back == v) return cand;
    }
    return buf;
}

void ExperimentConfig::validate() const {
    channel.validate();
    network.validate();
    pnp.validate();
    if (area.width() <= 0.0 || area.height() <= 0.0)
        throw config_error("config: area must have positive size");
    if (data.train < 1 || data.test < 1) throw config_error("config: data counts must be >= 1");
    if (data.val_fraction <= 0.0 || data.val_fraction >= 1.0)
        throw config_error("config: val_fraction must lie in (0, 1)");
    if (traj_counts.train < 1 || traj_counts.tune < 1 || traj_counts.test < 1)
        throw config_error("config: trajectory counts must be >= 1");
    if (denoiser_levels.empty()) throw config_error("config: denoiser level grid is empty");
    for (double l : denoiser_levels)
        if (l < 0.0) throw config_error("config: denoiser levels must be >= 0");
    if (position_noise_std < 0.0) throw config_error("config: position_noise_std must be >= 0");
    if (trajectory.length < 2) throw config_error("config: trajectory length must be >= 2");
    if (sweep.snr_db.empty() || sweep.mu_grid.empty() || sweep.rho_grid.empty())
        throw config_error("config: sweep grids must be nonempty");
    if (ablation.seeds.empty()) throw config_error("config: ablation needs at least one seed");
    if (network.input_h != channel.num_antennas || network.input_w != channel.num_subcarriers)
        throw config_error("config: network input dims must match channel A x S");
}

ExperimentConfig default_experiment_config() {
    ExperimentConfig cfg;
    cfg.channel.num_antennas = 16;
    cfg.channel.num_subcarriers = 16;
    cfg.channel.center_wavelength = 0.125;
    cfg.channel.antenna_spacing = 0.0625;
    cfg.channel.num_paths = 5;
    cfg.channel.noise_std = 0.005;
    cfg.channel.subcarrier_freqs = default_subcarriers(16, 0.125, 2.0e7);
    cfg.network.input_h = 16;
    cfg.network.input_w = 16;
    cfg.network.channels = 8;
    cfg.network.deep_blocks = 3;
    cfg.train.epochs = 60;
    cfg.trajectory.bounds = cfg.area;
    // the millimeter level grid, stored in meters
    cfg.denoiser_levels = {0.001, 0.003, 0.005, 0.010, 0.015, 0.020,
                           0.025, 0.030, 0.035, 0.040, 0.045, 0.050};
    return cfg;
}

ExperimentConfig experiment_config_from_kv(const KvFile& kv) {
    ExperimentConfig cfg = default_experiment_config();
    auto num = [&](const char* sec, const char* key, double cur) {
        return kv.has(sec, key) ? to_double(sec, key, kv.get(sec, key)) : cur;
    };
    auto integer = [&](const char* sec, const char* key, int cur) {
        return kv.has(sec, key) ? to_int(sec, key, kv.get(sec, key)) : cur;
    };
    auto boolean = [&](const char* sec, const char* key, bool cur) {
        return kv.has(sec, key) ? to_bool(sec, key, kv.get(sec, key)) : cur;
    };
    auto list = [&](const char* sec, const char* key, std::vector<double> cur) {
        return kv.has(sec, key) ? parse_double_list(kv.get(sec, key)) : cur;
    };

    cfg.label = kv.get_or("run", "label", cfg.label);
    if (kv.has("run", "seed")) cfg.seed = to_u64("run", "seed", kv.get("run", "seed"));

    cfg.channel.num_antennas = integer("channel", "antennas", cfg.channel.num_antennas);
    cfg.channel.num_subcarriers = integer("channel", "subcarriers", cfg.channel.num_subcarriers);
    cfg.channel.center_wavelength =
        num("channel", "wavelength_m", cfg.channel.center_wavelength);
    cfg.channel.antenna_spacing = num("channel", "spacing_m", cfg.channel.antenna_spacing);
    cfg.channel.num_paths = integer("channel", "paths", cfg.channel.num_paths);
    cfg.channel.noise_std = num("channel", "noise_std", cfg.channel.noise_std);
    const double bandwidth = num("channel", "bandwidth_hz", 2.0e7);
    cfg.channel.subcarrier_freqs = default_subcarriers(
        cfg.channel.num_subcarriers, cfg.channel.center_wavelength, bandwidth);

    cfg.area.xmin = num("area", "xmin", cfg.area.xmin);
    cfg.area.ymin = num("area", "ymin", cfg.area.ymin);
    cfg.area.xmax = num("area", "xmax", cfg.area.xmax);
    cfg.area.ymax = num("area", "ymax", cfg.area.ymax);

    cfg.data.train = integer("data", "train", cfg.data.train);
    cfg.data.val_fraction = num("data", "val_fraction", cfg.data.val_fraction);
    cfg.data.test = integer("data", "test", cfg.data.test);

    cfg.network.channels = integer("network", "channels", cfg.network.channels);
    cfg.network.kernel = integer("network", "kernel", cfg.network.kernel);
    cfg.network.stages = integer("network", "stages", cfg.network.stages);
    cfg.network.deep_blocks = integer("network", "deep_blocks", cfg.network.deep_blocks);
    cfg.network.aarb_period = integer("network", "aarb_period", cfg.network.aarb_period);
    cfg.network.attn_qk = integer("network", "attn_qk", cfg.network.attn_qk);
    cfg.network.attn_v = integer("network", "attn_v", cfg.network.attn_v);
    cfg.network.fcn1 = integer("network", "fcn1", cfg.network.fcn1);
    cfg.network.fcn2 = integer("network", "fcn2", cfg.network.fcn2);
    cfg.network.pool_h = integer("network", "pool_h", cfg.network.pool_h);
    cfg.network.pool_w = integer("network", "pool_w", cfg.network.pool_w);
    cfg.network.use_attention = boolean("network", "use_attention", cfg.network.use_attention);
    cfg.network.use_pooling_blocks =
        boolean("network", "use_pooling_blocks", cfg.network.use_pooling_blocks);
    cfg.network.input_h = cfg.channel.num_antennas;
    cfg.network.input_w = cfg.channel.num_subcarriers;

    cfg.train.epochs = integer("train", "epochs", cfg.train.epochs);
    cfg.train.batch_size = integer("train", "batch", cfg.train.batch_size);
    cfg.train.lr = num("train", "lr", cfg.train.lr);
    cfg.train.lr_halve_every = integer("train", "lr_halve_every", cfg.train.lr_halve_every);

    cfg.trajectory.length = integer("trajectory", "length", cfg.trajectory.length);
    cfg.trajectory.speed_min = num("trajectory", "speed_min", cfg.trajectory.speed_min);
    cfg.trajectory.speed_max = num("trajectory", "speed_max", cfg.trajectory.speed_max);
    cfg.trajectory.bounds = cfg.area;
    cfg.traj_counts.train = integer("trajectory", "count_train", cfg.traj_counts.train);
    cfg.traj_counts.tune = integer("trajectory", "count_tune", cfg.traj_counts.tune);
    cfg.traj_counts.test = integer("trajectory", "count_test", cfg.traj_counts.test);

    if (kv.has("denoiser", "levels_mm")) {
        cfg.denoiser_levels.clear();
        for (double mm : parse_double_list(kv.get("denoiser", "levels_mm")))
            cfg.denoiser_levels.push_back(mm / 1000.0);
    } else if (kv.has("denoiser", "levels_m")) {
        cfg.denoiser_levels = parse_double_list(kv.get("denoiser", "levels_m"));
    }
    cfg.denoiser.epochs = integer("denoiser", "epochs", cfg.denoiser.epochs);
    cfg.denoiser.batch_size = integer("denoiser", "batch", cfg.denoiser.batch_size);
    cfg.denoiser.lr = num("denoiser", "lr", cfg.denoiser.lr);
    cfg.denoiser.lr_halve_every =
        integer("denoiser", "lr_halve_every", cfg.denoiser.lr_halve_every);
    cfg.denoiser.val_fraction = num("denoiser", "val_fraction", cfg.denoiser.val_fraction);

    cfg.position_noise_std = num("tracking", "position_noise_std", cfg.position_noise_std);

    cfg.pnp.mu = num("pnp", "mu", cfg.pnp.mu);
    cfg.pnp.rho = num("pnp", "rho", cfg.pnp.rho);
    cfg.pnp.denoiser_level = num("pnp", "denoiser_level", cfg.pnp.denoiser_level);
    cfg.pnp.max_iters = integer("pnp", "max_iters", cfg.pnp.max_iters);
    cfg.pnp.tol = num("pnp", "tol", cfg.pnp.tol);

    cfg.sweep.snr_db = list("sweep", "snr_db", cfg.sweep.snr_db);
    cfg.sweep.mu_grid = list("sweep", "mu_grid", cfg.sweep.mu_grid);
    cfg.sweep.rho_grid = list("sweep", "rho_grid", cfg.sweep.rho_grid);
    cfg.sweep.use_model = boolean("sweep", "use_model", cfg.sweep.use_model);

    if (kv.has("ablation", "seeds")) {
        cfg.ablation.seeds.clear();
        for (double s : parse_double_list(kv.get("ablation", "seeds")))
            cfg.ablation.seeds.push_back(static_cast<uint64_t>(s));
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return experiment_config_from_kv(parse_kv_file(path));
}

std::string canonical_config_text(const ExperimentConfig& cfg) {
    std::map<std::string, std::map<std::string, std::string>> sec;
    auto put = [&](const std::string& s, const std::string& k, const std::string& v) {
        sec[s][k] = v;
    };
    auto putd = [&](const std::string& s, const std::string& k, double v) {
        put(s, k, format_double(v));
    };
    auto puti = [&](const std::string& s, const std::string& k, int64_t v) {
        put(s, k, std::to_string(v));
    };
    auto putlist = [&](const std::string& s, const std::string& k,
                       const std::vector<double>& v) {
        std::string out;
        for (size_t i = 0; i < v.size(); ++i) {
            if (i) out += ",";
            out += format_double(v[i]);
        }
        put(s, k, out);
    };

    put("run", "label", cfg.label);
    puti("run", "seed", static_cast<int64_t>(cfg.seed));
    puti("channel", "antennas", cfg.channel.num_antennas);
    puti("channel", "subcarriers", cfg.channel.num_subcarriers);
    putd("channel", "wavelength_m", cfg.channel.center_wavelength);
    putd("channel", "spacing_m", cfg.channel.antenna_spacing);
    puti("channel", "paths", cfg.channel.num_paths);
    putd("channel", "noise_std", cfg.channel.noise_std);
    putlist("channel", "subcarrier_freqs", cfg.channel.subcarrier_freqs);
    putd("area", "xmin", cfg.area.xmin);
    putd("area", "ymin", cfg.area.ymin);
    putd("area", "xmax", cfg.area.xmax);
    putd("area", "ymax", cfg.area.ymax);
    puti("data", "train", cfg.data.train);
    putd("data", "val_fraction", cfg.data.val_fraction);
    puti("data", "test", cfg.data.test);
    puti("network", "channels", cfg.network.channels);
    puti("network", "kernel", cfg.network.kernel);
    puti("network", "stages", cfg.network.stages);
    puti("network", "deep_blocks", cfg.network.deep_blocks);
    puti("network", "aarb_period", cfg.network.aarb_period);
    puti("network", "attn_qk", cfg.network.attn_qk);
    puti("network", "attn_v", cfg.network.attn_v);
    puti("network", "fcn1", cfg.network.fcn1);
    puti("network", "fcn2", cfg.network.fcn2);
    puti("network", "pool_h", cfg.network.pool_h);
    puti("network", "pool_w", cfg.network.pool_w);
    puti("network", "use_attention", cfg.network.use_attention ? 1 : 0);
    puti("network", "use_pooling_blocks", cfg.network.use_pooling_blocks ? 1 : 0);
    puti("train", "epochs", cfg.train.epochs);
    puti("train", "batch", cfg.train.batch_size);
    putd("train", "lr", cfg.train.lr);
    puti("train", "lr_halve_every", cfg.train.lr_halve_every);
    puti("trajectory", "length", cfg.trajectory.length);
    putd("trajectory", "speed_min", cfg.trajectory.speed_min);
    putd("trajectory", "speed_max", cfg.trajectory.speed_max);
    puti("trajectory", "count_train", cfg.traj_counts.train);
    puti("trajectory", "count_tune", cfg.traj_counts.tune);
    puti("trajectory", "count_test", cfg.traj_counts.test);
    putlist("denoiser", "levels_m", cfg.denoiser_levels);
    puti("denoiser", "epochs", cfg.denoiser.epochs);
    puti("denoiser", "batch", cfg.denoiser.batch_size);
    putd("denoiser", "lr", cfg.denoiser.lr);
    puti("denoiser", "lr_halve_every", cfg.denoiser.lr_halve_every);
    putd("denoiser", "val_fraction", cfg.denoiser.val_fraction);
    putd("tracking", "position_noise_std", cfg.position_noise_std);
    putd("pnp", "mu", cfg.pnp.mu);
    putd("pnp", "rho", cfg.pnp.rho);
    putd("pnp", "denoiser_level", cfg.pnp.denoiser_level);
    puti("pnp", "max_iters", cfg.pnp.max_iters);
    putd("pnp", "tol", cfg.pnp.tol);
    putlist("sweep", "snr_db", cfg.sweep.snr_db);
    putlist("sweep", "mu_grid", cfg.sweep.mu_grid);
    putlist("sweep", "rho_grid", cfg.sweep.rho_grid);
    puti("sweep", "use_model", cfg.sweep.use_model ? 1 : 0);
    {
        std::string s;
        for (size_t i = 0; i < cfg.ablation.seeds.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(cfg.ablation.seeds[i]);
        }
        put("ablation", "seeds", s);
    }

    std::ostringstream out;
    for (const auto& [name, keys] : sec) {
        out << "[" << name << "]\n";
        for (const auto& [k, v] : keys) out << k << " = " << v << "\n";
    }
    return out.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = canonical_config_text(cfg);
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace csiloc
