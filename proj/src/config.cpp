#include "splitinfer/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace splitinfer {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

} // namespace

void KvConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, "missing '=' at line " + std::to_string(lineno));
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void KvConfig::set(const std::string& key, const std::string& value) {
    if (key.empty())
        throw ConfigError(key, "empty key");
    entries_[key] = value;
}

void KvConfig::apply_override(const std::string& key_eq_value) {
    const auto eq = key_eq_value.find('=');
    if (eq == std::string::npos)
        throw ConfigError(key_eq_value, "override must look like key=value");
    set(trim(key_eq_value.substr(0, eq)), trim(key_eq_value.substr(eq + 1)));
}

bool KvConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end())
        return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "not a number: '" + it->second + "'");
    }
}

std::int64_t KvConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end())
        return fallback;
    try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(it->second, &used);
        if (used != it->second.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "not an integer: '" + it->second + "'");
    }
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end())
        return fallback;
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(it->second, &used);
        if (used != it->second.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "not an unsigned integer: '" + it->second + "'");
    }
}

std::vector<double> KvConfig::get_doubles(const std::string& key,
                                          const std::vector<double>& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end())
        return fallback;
    std::vector<double> out;
    for (const std::string& part : split_list(it->second, ',')) {
        if (part.empty())
            continue;
        try {
            out.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw ConfigError(key, "not a number list: '" + it->second + "'");
        }
    }
    return out;
}

namespace {

const std::set<std::string> kKnownKeys = {
    "arch.widths",      "arch.activations",
    "train.batch_size", "train.epochs",        "train.lr",
    "train.beta1",      "train.beta2",         "train.eps",
    "train.dropout",    "train.seed",
    "split.cut",        "split.policy",        "split.p",
    "split.sigma",      "split.seeding",
    "data.kind",        "data.dir",
    "data.synth_classes", "data.synth_per_class", "data.synth_dim",
    "data.synth_seed",  "data.synth_noise",    "data.synth_test_fraction",
    "out.dir",          "out.model",
    "serve.host",       "serve.port",
    "sweep.p_list",     "sweep.trials",
    "attack.samples",   "attack.seed",
};

std::vector<std::size_t> parse_widths(const KvConfig& kv) {
    const std::string text = kv.get_string("arch.widths", "784-128-128-128-10");
    std::vector<std::size_t> widths;
    for (const std::string& part : split_list(text, text.find('-') != std::string::npos ? '-' : ',')) {
        if (part.empty())
            continue;
        try {
            widths.push_back(std::size_t(std::stoull(part)));
        } catch (const std::exception&) {
            throw ConfigError("arch.widths", "bad width '" + part + "'");
        }
    }
    if (widths.size() < 2)
        throw ConfigError("arch.widths", "need at least input and output widths");
    return widths;
}

std::vector<Activation> parse_activations(const KvConfig& kv, std::size_t layer_count) {
    const std::string text = kv.get_string("arch.activations", "");
    std::vector<Activation> acts;
    if (text.empty()) {
        // default: rectifier hiddens, linear logits
        for (std::size_t k = 0; k + 1 < layer_count; ++k)
            acts.push_back(Activation::rectifier());
        acts.push_back(Activation::linear());
        return acts;
    }
    for (const std::string& part : split_list(text, ',')) {
        if (part.empty())
            continue;
        try {
            acts.push_back(parse_activation(part));
        } catch (const std::exception& e) {
            throw ConfigError("arch.activations", e.what());
        }
    }
    if (acts.size() == 1 && layer_count > 1) {
        // one kind given: use it for hiddens, linear logits
        Activation hidden = acts.front();
        acts.assign(layer_count - 1, hidden);
        acts.push_back(Activation::linear());
    }
    if (acts.size() != layer_count)
        throw ConfigError("arch.activations",
                          "expected " + std::to_string(layer_count) + " entries, got " +
                              std::to_string(acts.size()));
    return acts;
}

} // namespace

ExperimentConfig ExperimentConfig::from_kv(const KvConfig& kv) {
    for (const auto& [key, value] : kv.entries())
        if (!kKnownKeys.count(key))
            throw ConfigError(key, "unknown key");

    ExperimentConfig cfg;
    cfg.widths = parse_widths(kv);
    cfg.activations = parse_activations(kv, cfg.widths.size() - 1);

    cfg.train.batch_size = std::size_t(kv.get_int("train.batch_size", 32));
    cfg.train.epochs = std::size_t(kv.get_int("train.epochs", 10));
    cfg.train.learning_rate = kv.get_double("train.lr", 1e-4);
    cfg.train.adam_beta1 = kv.get_double("train.beta1", 0.9);
    cfg.train.adam_beta2 = kv.get_double("train.beta2", 0.999);
    cfg.train.adam_eps = kv.get_double("train.eps", 1e-8);
    cfg.train.dropout_probs = kv.get_doubles("train.dropout", {});
    cfg.train.rng_seed = kv.get_u64("train.seed", 1);
    if (cfg.train.batch_size < 1)
        throw ConfigError("train.batch_size", "must be >= 1");
    for (double p : cfg.train.dropout_probs)
        if (p < 0.0 || p >= 1.0)
            throw ConfigError("train.dropout", "probabilities must lie in [0, 1)");

    cfg.split.cut = std::size_t(kv.get_int("split.cut", 1));
    const std::string policy = kv.get_string("split.policy", "drop-activations");
    const double p = kv.get_double("split.p", 0.005);
    const double sigma = kv.get_double("split.sigma", 0.1);
    if (policy == "none")
        cfg.split.policy = DropPolicy::none();
    else if (policy == "drop-activations")
        cfg.split.policy = DropPolicy::drop_activations(p);
    else if (policy == "drop-connections")
        cfg.split.policy = DropPolicy::drop_connections(p);
    else if (policy == "add-noise")
        cfg.split.policy = DropPolicy::add_noise(p, sigma);
    else
        throw ConfigError("split.policy", "unknown policy '" + policy + "'");
    if (p < 0.0 || p >= 1.0)
        throw ConfigError("split.p", "must lie in [0, 1)");

    const std::string seeding = kv.get_string("split.seeding", "datamax");
    if (seeding == "datamax")
        cfg.split.seeding = MaskSeeding::DataMax;
    else if (seeding == "per-query")
        cfg.split.seeding = MaskSeeding::PerQueryRandom;
    else
        throw ConfigError("split.seeding", "unknown seeding '" + seeding + "'");

    const std::string kind = kv.get_string("data.kind", "synth");
    if (kind == "synth")
        cfg.data_kind = DataKind::Synth;
    else if (kind == "mnist")
        cfg.data_kind = DataKind::Mnist;
    else
        throw ConfigError("data.kind", "unknown kind '" + kind + "'");
    cfg.data_dir = kv.get_string("data.dir", "");
    if (cfg.data_dir.empty())
        if (const char* env = std::getenv("SPLITINFER_DATA_DIR"))
            cfg.data_dir = env;
    cfg.synth_classes = int(kv.get_int("data.synth_classes", 10));
    cfg.synth_per_class = int(kv.get_int("data.synth_per_class", 400));
    cfg.synth_dim = std::size_t(kv.get_int("data.synth_dim", 784));
    cfg.synth_seed = kv.get_u64("data.synth_seed", 7);
    cfg.synth_noise = kv.get_double("data.synth_noise", 0.08);
    cfg.synth_test_fraction = kv.get_double("data.synth_test_fraction", 0.2);
    if (cfg.synth_test_fraction <= 0.0 || cfg.synth_test_fraction >= 1.0)
        throw ConfigError("data.synth_test_fraction", "must lie in (0, 1)");

    cfg.out_dir = kv.get_string("out.dir", "out");
    cfg.model_path = kv.get_string("out.model", cfg.out_dir + "/model.sinf");

    cfg.serve_host = kv.get_string("serve.host", "127.0.0.1");
    cfg.serve_port = std::uint16_t(kv.get_int("serve.port", 9000));

    cfg.sweep_p_list = kv.get_doubles("sweep.p_list", {0.0, 0.005, 0.01, 0.02, 0.03, 0.05, 0.1});
    cfg.sweep_trials = std::size_t(kv.get_int("sweep.trials", 30));

    cfg.attack_samples = std::size_t(kv.get_int("attack.samples", 20));
    cfg.attack_seed = kv.get_u64("attack.seed", 99);
    return cfg;
}

LoadedData load_data(const ExperimentConfig& cfg) {
    LoadedData out;
    if (cfg.data_kind == DataKind::Mnist) {
        if (cfg.data_dir.empty())
            throw IoError("data.kind=mnist needs data.dir or $SPLITINFER_DATA_DIR");
        const Dataset train_full = load_mnist_idx(cfg.data_dir + "/train-images-idx3-ubyte",
                                                  cfg.data_dir + "/train-labels-idx1-ubyte");
        out.test = load_mnist_idx(cfg.data_dir + "/t10k-images-idx3-ubyte",
                                  cfg.data_dir + "/t10k-labels-idx1-ubyte");
        // 50k/10k train/validation partition; training uses the 50k part
        out.train = split_train_validation(train_full).train;
        return out;
    }
    const int test_per_class =
        std::max(1, int(double(cfg.synth_per_class) * cfg.synth_test_fraction));
    out.train = synth_blobs(cfg.synth_classes, cfg.synth_per_class, cfg.synth_dim,
                            cfg.synth_seed, cfg.synth_noise);
    out.test = synth_blobs(cfg.synth_classes, test_per_class, cfg.synth_dim,
                           mix64(cfg.synth_seed, 0x7E57), cfg.synth_noise);
    return out;
}

} // namespace splitinfer
