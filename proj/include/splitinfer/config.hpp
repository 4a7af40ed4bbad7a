#ifndef SPLITINFER_CONFIG_HPP
#define SPLITINFER_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "splitinfer/activations.hpp"
#include "splitinfer/network.hpp"
#include "splitinfer/splitexec.hpp"

namespace splitinfer {

// Flat key=value configuration with section-prefixed keys (train.lr,
// split.p). '#' starts a comment; later assignments win, so command
// line overrides are just appended assignments. Unknown keys are
// rejected by ExperimentConfig with the key named.
class KvConfig {
public:
    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    void apply_override(const std::string& key_eq_value); // "key=value"

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

enum class DataKind { Synth, Mnist };

// Everything a subcommand needs, validated up front.
struct ExperimentConfig {
    // architecture
    std::vector<std::size_t> widths;       // input..output
    std::vector<Activation> activations;   // one per layer

    TrainConfig train;

    SplitPlan split;

    DataKind data_kind = DataKind::Synth;
    std::string data_dir;      // falls back to $SPLITINFER_DATA_DIR
    int synth_classes = 10;
    int synth_per_class = 400;
    std::size_t synth_dim = 784;
    std::uint64_t synth_seed = 7;
    double synth_noise = 0.08;
    double synth_test_fraction = 0.2;

    std::string out_dir = "out";
    std::string model_path; // default: <out_dir>/model.sinf

    std::string serve_host = "127.0.0.1";
    std::uint16_t serve_port = 9000;

    std::vector<double> sweep_p_list;
    std::size_t sweep_trials = 30;

    std::size_t attack_samples = 20;
    std::uint64_t attack_seed = 99;

    static ExperimentConfig from_kv(const KvConfig& kv);
};

// Loads training + test splits per the config (MNIST files or the
// synthetic generator).
struct LoadedData {
    Dataset train;
    Dataset test;
};
LoadedData load_data(const ExperimentConfig& cfg);

} // namespace splitinfer

#endif
