// splitinfer: train, split, serve and attack a first-layer-local MLP.
//
// Subcommands: train, evaluate, sweep, attack, serve, query,
// protocol-dump. Every run is driven by a key=value config file plus
// --set overrides; see configs/ for the presets.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "splitinfer/attacks.hpp"
#include "splitinfer/config.hpp"
#include "splitinfer/metrics.hpp"
#include "splitinfer/wire.hpp"

using namespace splitinfer;

namespace {

constexpr int kExitBadConfig = 1;
constexpr int kExitDatasetMissing = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitRuntime = 4;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
};

ExperimentConfig resolve_config(const CommonArgs& args) {
    KvConfig kv;
    if (!args.config_path.empty())
        kv.load_file(args.config_path);
    for (const std::string& kvpair : args.overrides)
        kv.apply_override(kvpair);
    return ExperimentConfig::from_kv(kv);
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "key=value config file");
    cmd->add_option("-s,--set", args.overrides, "override, e.g. --set train.lr=0.01");
}

MlpModel build_model(const ExperimentConfig& cfg) {
    return make_mlp(cfg.widths, cfg.activations, cfg.train.rng_seed);
}

LoadedData load_or_die(const ExperimentConfig& cfg) {
    try {
        return load_data(cfg);
    } catch (const Error& e) {
        std::cerr << "dataset missing: " << e.what() << "\n";
        std::exit(kExitDatasetMissing);
    }
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write '" + path + "'");
    out << body;
}

// grayscale PGM, min-max normalized; square when the length allows
void write_pgm(const std::string& path, const Vector& image) {
    std::size_t side = std::size_t(std::lround(std::sqrt(double(image.size()))));
    std::size_t w = image.size(), h = 1;
    if (side * side == image.size())
        w = h = side;
    double lo = image[0], hi = image[0];
    for (double v : image) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = hi > lo ? hi - lo : 1.0;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "P5\n" << w << " " << h << "\n255\n";
    for (double v : image)
        out.put(char(std::lround(255.0 * (v - lo) / range)));
}

// ---- train ---------------------------------------------------------------

int cmd_train(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    const LoadedData data = load_or_die(cfg);
    std::filesystem::create_directories(cfg.out_dir);

    MlpModel model = build_model(cfg);
    TrainResult result;
    try {
        result = train(model, data.train, cfg.train);
    } catch (const DivergenceError& e) {
        std::cerr << e.what() << "\n";
        return kExitDivergence;
    }

    save_model(model, cfg.model_path);
    std::string csv = "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_curve.size(); ++e)
        csv += std::to_string(e) + "," + std::to_string(result.loss_curve[e]) + "\n";
    write_text(cfg.out_dir + "/loss_curve.csv", csv);

    const double acc = evaluate(model, data.test);
    std::cout << "model: " << cfg.model_path << "\n";
    std::cout << "test_accuracy: " << acc << "\n";
    return 0;
}

// ---- evaluate --------------------------------------------------------------

int cmd_evaluate(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    const LoadedData data = load_or_die(cfg);
    const MlpModel model = load_model(cfg.model_path);
    std::cout << "test_accuracy: " << evaluate(model, data.test) << "\n";
    return 0;
}

// ---- sweep -----------------------------------------------------------------

int cmd_sweep(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    const LoadedData data = load_or_die(cfg);
    const MlpModel model = load_model(cfg.model_path);
    std::filesystem::create_directories(cfg.out_dir);

    const auto rows = drop_sweep(model, data.test, cfg.sweep_p_list, cfg.sweep_trials,
                                 cfg.train.rng_seed, cfg.split.cut);
    const std::string csv = sweep_csv(rows);
    write_text(cfg.out_dir + "/sweep.csv", csv);
    std::cout << csv;
    return 0;
}

// ---- attack ----------------------------------------------------------------

std::string attack_csv(const std::vector<std::size_t>& samples,
                       const std::vector<AttackReport>& reports) {
    std::string csv = "strategy,sample,kl_divergence,l2_error,succeeded_exact\n";
    for (std::size_t i = 0; i < reports.size(); ++i)
        csv += reports[i].strategy + "," + std::to_string(samples[i]) + "," +
               std::to_string(reports[i].kl_divergence) + "," +
               std::to_string(reports[i].l2_error) + "," +
               (reports[i].succeeded_exact ? "true" : "false") + "\n";
    return csv;
}

int cmd_attack(const CommonArgs& args, const std::string& strategy) {
    const ExperimentConfig cfg = resolve_config(args);
    const LoadedData data = load_or_die(cfg);
    const MlpModel model = load_model(cfg.model_path);
    const MlpModel front = front_slice(model, cfg.split.cut);
    std::filesystem::create_directories(cfg.out_dir);

    const SplitPlan& plan = cfg.split;
    std::vector<std::size_t> samples_used;
    std::vector<AttackReport> reports;
    Rng pick(cfg.attack_seed);

    const std::size_t samples = std::min(cfg.attack_samples, data.test.size());
    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t idx = std::size_t(pick.next_below(data.test.size()));
        const Vector& x = data.test.images[idx];
        Vector x_hat;

        if (strategy == "exact") {
            SplitPlan undefended = plan;
            undefended.policy = DropPolicy::none();
            const ClientResult r = client_forward(front, x, undefended);
            x_hat = invert_exact_chain(r.activations, front.layers);
        } else if (strategy == "pseudoinverse" || strategy == "transpose") {
            const ClientResult r = client_forward(front, x, plan, pick.next_u64());
            const InvertMode mode = strategy == "transpose" ? InvertMode::Transpose
                                                            : InvertMode::PseudoInverse;
            x_hat = invert_chain(r.activations, front.layers, mode);
        } else if (strategy == "connections") {
            if (front.layers.size() != 1)
                throw Error("connections attack expects split.cut=1");
            SplitPlan conn = plan;
            conn.policy = DropPolicy::drop_connections(plan.policy.p);
            const ClientResult r = client_forward(front, x, conn, pick.next_u64());
            x_hat = dropping_connections_leak(x, front.layers.front(), r.mask).x_tilde;
        } else if (strategy == "bruteforce") {
            if (front.layers.size() != 1)
                throw Error("bruteforce attack expects split.cut=1");
            const ClientResult r = client_forward(front, x, plan, pick.next_u64());
            Vector grid;
            for (int k = 0; k <= 10; ++k)
                grid.push_back(double(k) / 10.0); // N=11 over [0,1]
            const BruteForceRecovery rec = brute_force_recover(
                r.activations, r.mask.dropped, front.layers.front(), grid);
            x_hat = rec.x_hat;
        } else if (strategy == "repeated-query") {
            const RepeatedQueryReport rep =
                repeated_query_attack(front, x, plan, 50, pick.next_u64());
            std::cout << "sample " << idx << ": coverage " << rep.recovered_coords << "/"
                      << rep.width << " after " << rep.queries << " queries\n";
            if (!rep.complete)
                continue;
            x_hat = rep.x_hat;
        } else {
            throw Error("unknown strategy '" + strategy + "'");
        }

        AttackReport report = make_report(strategy, std::move(x_hat), x);
        report.kl_divergence = kl_divergence_image(x, report.x_hat);
        samples_used.push_back(idx);

        if (s < 4) { // a handful of image dumps is enough to eyeball
            write_pgm(cfg.out_dir + "/original_" + std::to_string(idx) + ".pgm", x);
            write_pgm(cfg.out_dir + "/" + strategy + "_" + std::to_string(idx) + ".pgm",
                      report.x_hat);
        }
        reports.push_back(std::move(report));
    }

    const std::string csv = attack_csv(samples_used, reports);
    write_text(cfg.out_dir + "/attack_" + strategy + ".csv", csv);
    std::cout << csv;

    if (strategy == "bruteforce") {
        std::cout << "combinations(N=11,M=1): "
                  << brute_force_cost(11, 1).total_combinations.to_string() << "\n";
        std::cout << "combinations(N=101,M=4): "
                  << brute_force_cost(101, 4).total_combinations.to_string() << "\n";
    }
    return 0;
}

// ---- serve / query -----------------------------------------------------------

Server* g_server = nullptr;
void handle_shutdown(int) {
    if (g_server)
        g_server->stop();
    std::_Exit(0);
}

int cmd_serve(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    const MlpModel model = load_model(cfg.model_path);

    ServeConfig serve_cfg;
    serve_cfg.bind_addr = cfg.serve_host;
    serve_cfg.port = cfg.serve_port;
    serve_cfg.grad_train = cfg.train;
    Server server(rear_slice(model, cfg.split.cut), std::uint16_t(cfg.split.cut),
                  serve_cfg);
    server.start();
    g_server = &server;
    std::signal(SIGINT, handle_shutdown);
    std::signal(SIGTERM, handle_shutdown);

    std::cout << "serving rear half (cut " << cfg.split.cut << ") on " << cfg.serve_host
              << ":" << server.port() << "\n";
    std::cout << "fingerprint: " << hex(server.fingerprint()) << "\n";
    std::cout.flush();
    while (true)
        std::this_thread::sleep_for(std::chrono::seconds(3600));
}

int cmd_query(const CommonArgs& args, std::size_t index, bool bench) {
    const ExperimentConfig cfg = resolve_config(args);
    const LoadedData data = load_or_die(cfg);
    const MlpModel model = load_model(cfg.model_path);
    const MlpModel front = front_slice(model, cfg.split.cut);
    const Sha256Digest fp = model_fingerprint(rear_slice(model, cfg.split.cut));
    if (index >= data.test.size())
        throw Error("sample index " + std::to_string(index) + " out of range");
    const Vector& x = data.test.images[index];

    if (bench) {
        // cost of the on-device half of the pipeline
        const auto t0 = std::chrono::steady_clock::now();
        constexpr int reps = 100;
        for (int i = 0; i < reps; ++i)
            (void)client_forward(front, x, cfg.split, std::uint64_t(i));
        const auto t1 = std::chrono::steady_clock::now();
        const double ms =
            std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
        std::cout << "client_forward_latency_ms: " << ms << "\n";
    }

    const Vector probs = query(cfg.serve_host, cfg.serve_port, front, x, cfg.split, fp);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < probs.size(); ++j)
        if (probs[j] > probs[arg])
            arg = j;
    std::cout << "prediction: " << arg << "\n";
    std::cout << "true_label: " << data.test.labels[index] << "\n";
    return 0;
}

// ---- protocol-dump -------------------------------------------------------------

int cmd_protocol_dump(const std::string& capture_path) {
    std::cout << "frame layout (little-endian):\n"
              << "  magic   \"SPL1\"           4 bytes\n"
              << "  type    u8               1=HELLO 2=ACTIVATIONS 3=PREDICTION\n"
              << "                           4=GRAD_REQUEST 5=GRAD_RESPONSE 6=ERROR\n"
              << "  session u64\n"
              << "  len     u32              payload bytes, max 16 MiB\n"
              << "  payload len bytes\n"
              << "  crc32   u32              over all preceding bytes\n";
    if (capture_path.empty())
        return 0;

    std::ifstream in(capture_path, std::ios::binary);
    if (!in) {
        std::cerr << "cannot open '" << capture_path << "'\n";
        return kExitRuntime;
    }
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>()};
    std::size_t offset = 0, count = 0;
    while (offset + kFrameHeaderSize + 4 <= bytes.size()) {
        std::uint32_t len;
        std::memcpy(&len, bytes.data() + offset + 13, 4);
        const std::size_t total = kFrameHeaderSize + len + 4;
        if (offset + total > bytes.size())
            break;
        const std::vector<std::uint8_t> one(bytes.begin() + std::ptrdiff_t(offset),
                                            bytes.begin() + std::ptrdiff_t(offset + total));
        try {
            const Frame f = decode_frame(one);
            std::cout << "frame " << count << ": type " << int(f.type) << " session "
                      << f.session << " payload " << f.payload.size() << " bytes\n";
        } catch (const Error& e) {
            std::cout << "frame " << count << ": undecodable (" << e.what() << ")\n";
        }
        offset += total;
        ++count;
    }
    std::cout << count << " frames, " << bytes.size() << " bytes\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"split-inference toolkit: localized first layer with dropped "
                 "activation outputs"};
    app.require_subcommand(1);

    CommonArgs train_args, eval_args, sweep_args, attack_args, serve_args, query_args;
    std::string attack_strategy = "transpose";
    std::size_t query_index = 0;
    bool query_bench = false;
    std::string dump_path;

    CLI::App* c_train = app.add_subcommand("train", "train a model and save it");
    add_common(c_train, train_args);
    CLI::App* c_eval = app.add_subcommand("evaluate", "test-set accuracy of a saved model");
    add_common(c_eval, eval_args);
    CLI::App* c_sweep =
        app.add_subcommand("sweep", "accuracy vs dropping probability table");
    add_common(c_sweep, sweep_args);
    CLI::App* c_attack = app.add_subcommand("attack", "run a reconstruction strategy");
    add_common(c_attack, attack_args);
    c_attack
        ->add_option("--strategy", attack_strategy,
                     "exact | pseudoinverse | transpose | connections | bruteforce | "
                     "repeated-query")
        ->required();
    CLI::App* c_serve = app.add_subcommand("serve", "serve the rear half over TCP");
    add_common(c_serve, serve_args);
    CLI::App* c_query = app.add_subcommand("query", "client-side query of a running server");
    add_common(c_query, query_args);
    c_query->add_option("--index", query_index, "test-set sample to send");
    c_query->add_flag("--bench", query_bench, "print client-side first-layer latency");
    CLI::App* c_dump =
        app.add_subcommand("protocol-dump", "print the frame layout; decode a capture");
    c_dump->add_option("capture", dump_path, "file of concatenated frames");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_train->parsed())
            return cmd_train(train_args);
        if (c_eval->parsed())
            return cmd_evaluate(eval_args);
        if (c_sweep->parsed())
            return cmd_sweep(sweep_args);
        if (c_attack->parsed())
            return cmd_attack(attack_args, attack_strategy);
        if (c_serve->parsed())
            return cmd_serve(serve_args);
        if (c_query->parsed())
            return cmd_query(query_args, query_index, query_bench);
        if (c_dump->parsed())
            return cmd_protocol_dump(dump_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const DivergenceError& e) {
        std::cerr << e.what() << "\n";
        return kExitDivergence;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
