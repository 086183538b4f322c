// adsh: command-line driver for data generation, training, encoding,
// evaluation, scaling benchmarks and hyperparameter sweeps.
//
// Output directory layout (all under --out):
//   gen-data  db_features.bin db_labels.bin query_features.bin query_labels.bin
//             [val_features.bin val_labels.bin] config.txt
//   train     model.bin db_codes.bin history.csv train_metrics.csv config.txt
//   encode    codes.bin config.txt
//   eval      metrics.csv topk.csv pr.csv config.txt
//   bench     timing.csv config.txt
//   sweep     sweep.csv config.txt
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adsh/adsh.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct Paths {
    fs::path out;
    fs::path file(const std::string& name) const { return out / name; }
};

Paths prepare_output(const adsh::RunConfig& cfg) {
    Paths p{cfg.get("out")};
    std::error_code ec;
    fs::create_directories(p.out, ec);
    if (ec) throw adsh::ConfigError("cannot create output directory " + p.out.string() + ": " + ec.message());
    std::ofstream echo(p.file("config.txt"));
    cfg.write(echo);
    return p;
}

template <class F>
void write_text(const fs::path& path, F&& body) {
    std::ofstream out(path);
    if (!out) throw adsh::ValidationError("cannot write " + path.string());
    body(out);
}

int cmd_gen_data(const adsh::RunConfig& cfg) {
    const auto data = adsh::gen_synthetic_clusters(cfg.get_uint("clusters"), cfg.get_uint("per_cluster"),
                                                   cfg.get_uint("dim"), cfg.get_double("sigma"),
                                                   cfg.get_uint("seed"));
    const auto parts = adsh::split(data.labels.rows(), cfg.get_uint("queries"), cfg.get_uint("validation"),
                                   cfg.get_uint("seed") + 1);
    const Paths p = prepare_output(cfg);
    auto emit = [&](const std::string& prefix, const std::vector<std::size_t>& rows) {
        if (rows.empty()) return;
        const auto part = adsh::select(data, rows);
        adsh::write_features(p.file(prefix + "_features.bin"), part.features);
        adsh::write_labels(p.file(prefix + "_labels.bin"), part.labels);
    };
    emit("db", parts.database);
    emit("query", parts.query);
    emit("val", parts.validation);
    std::cout << "database " << parts.database.size() << ", queries " << parts.query.size() << ", validation "
              << parts.validation.size() << " -> " << p.out << '\n';
    return 0;
}

int cmd_train(const adsh::RunConfig& cfg) {
    const adsh::TrainConfig tc = cfg.train_config();
    const auto db_features = adsh::read_features(cfg.require_path("features"));
    const auto db_labels = adsh::read_labels(cfg.require_path("labels"));
    std::optional<adsh::FeatureMatrix> query_features;
    std::optional<adsh::LabelMatrix> query_labels;
    if (tc.mode == adsh::TrainMode::asymmetric_separate_queries) {
        query_features = adsh::read_features(cfg.require_path("query_features"));
        query_labels = adsh::read_labels(cfg.require_path("query_labels"));
    }
    const Paths p = prepare_output(cfg);
    adsh::TrainingData data{db_features, db_labels, query_features ? &*query_features : nullptr,
                            query_labels ? &*query_labels : nullptr};
    const adsh::TrainResult result = adsh::train_any(data, tc);

    adsh::write_model(p.file("model.bin"), result.model);
    adsh::write_codes(p.file("db_codes.bin"), result.codes);
    write_text(p.file("history.csv"), [&](std::ostream& os) { adsh::write_history_csv(os, result.history); });
    write_text(p.file("train_metrics.csv"), [&](std::ostream& os) {
        os.precision(17);
        os << "metric,param,value\n";
        os << "mode,," << adsh::to_string(tc.mode) << '\n';
        os << "seed,," << tc.seed << '\n';
        if (!result.history.empty()) {
            os << "final_objective,," << result.history.back().objective << '\n';
            os << "train_seconds,," << result.history.back().seconds << '\n';
        }
        os << "aborted,," << (result.aborted ? 1 : 0) << '\n';
    });
    if (result.aborted) {
        std::cerr << "training aborted: " << result.diagnostic << " (last good state written)\n";
        return kExitNumeric;
    }
    std::cout << "trained " << result.history.size() << " phases; final J = "
              << (result.history.empty() ? 0.0 : result.history.back().objective) << " -> " << p.out << '\n';
    return 0;
}

int cmd_encode(const adsh::RunConfig& cfg) {
    const auto model = adsh::read_model(cfg.require_path("model"));
    const auto features = adsh::read_features(cfg.require_path("features"));
    const Paths p = prepare_output(cfg);
    adsh::write_codes(p.file("codes.bin"), adsh::encode_queries(model, features));
    std::cout << "encoded " << features.rows() << " points -> " << p.file("codes.bin") << '\n';
    return 0;
}

adsh::EvalReport run_eval(const adsh::RunConfig& cfg, const adsh::CodeMatrix& queries, const adsh::CodeMatrix& db,
                          const adsh::LabelMatrix& query_labels, const adsh::LabelMatrix& db_labels) {
    adsh::EvalOptions opt;
    opt.map_cutoff = cfg.map_cutoff();
    opt.topk_max = cfg.get_uint("topk");
    return adsh::evaluate(queries, db, adsh::Relevance::from_labels(query_labels, db_labels), opt);
}

int cmd_eval(const adsh::RunConfig& cfg) {
    cfg.map_cutoff();  // validate before touching any file
    const auto queries = adsh::read_codes(cfg.require_path("query_codes"));
    const auto db = adsh::read_codes(cfg.require_path("db_codes"));
    const auto query_labels = adsh::read_labels(cfg.require_path("query_labels"));
    const auto db_labels = adsh::read_labels(cfg.require_path("labels"));
    if (queries.rows() != query_labels.rows() || db.rows() != db_labels.rows()) {
        throw adsh::ValidationError("eval: code and label row counts differ");
    }
    const Paths p = prepare_output(cfg);
    const auto report = run_eval(cfg, queries, db, query_labels, db_labels);
    write_text(p.file("metrics.csv"), [&](std::ostream& os) { adsh::write_metrics_csv(os, report); });
    write_text(p.file("topk.csv"), [&](std::ostream& os) { adsh::write_topk_csv(os, report.topk); });
    write_text(p.file("pr.csv"), [&](std::ostream& os) { adsh::write_pr_csv(os, report.radius); });
    std::cout << "MAP = " << report.map << " -> " << p.out << '\n';
    return 0;
}

int cmd_bench(const adsh::RunConfig& cfg) {
    adsh::ProbeConfig probe;
    probe.n_values.clear();
    for (auto n : cfg.get_uint_list("n_values")) probe.n_values.push_back(n);
    probe.query_count = cfg.get_uint("omega");
    probe.code_len = cfg.get_uint("bits");
    probe.repeats = cfg.get_uint("repeats");
    probe.seed = cfg.get_uint("seed");
    if (probe.n_values.size() < 3) throw adsh::ConfigError("bench needs at least 3 n_values");
    const Paths p = prepare_output(cfg);
    const auto result = adsh::complexity_probe(probe);
    write_text(p.file("timing.csv"), [&](std::ostream& os) { adsh::write_probe_csv(os, result); });
    adsh::write_probe_csv(std::cout, result);
    return 0;
}

int cmd_sweep(const adsh::RunConfig& cfg) {
    const auto base = cfg.train_config();
    const auto db_features = adsh::read_features(cfg.require_path("features"));
    const auto db_labels = adsh::read_labels(cfg.require_path("labels"));
    const auto query_features = adsh::read_features(cfg.require_path("query_features"));
    const auto query_labels = adsh::read_labels(cfg.require_path("query_labels"));
    const auto gammas = cfg.get_double_list("gammas");
    const auto omegas = cfg.get_uint_list("omegas");
    const Paths p = prepare_output(cfg);
    std::ofstream out(p.file("sweep.csv"));
    out.precision(17);
    out << "gamma,omega,map\n";
    for (double gamma : gammas) {
        for (auto omega : omegas) {
            adsh::TrainConfig tc = base;
            tc.mode = adsh::TrainMode::asymmetric_sampled;
            tc.gamma = gamma;
            tc.query_count = omega;
            tc.batch_size = std::min<std::size_t>(tc.batch_size, omega);
            try {
                tc.validate();
            } catch (const adsh::ValidationError& e) {
                throw adsh::ConfigError(e.what());
            }
            const auto result = adsh::train({db_features, db_labels}, tc);
            if (result.aborted) throw adsh::NumericError(result.diagnostic);
            const auto qc = adsh::encode_queries(result.model, query_features);
            const auto report = run_eval(cfg, qc, result.codes, query_labels, db_labels);
            out << gamma << ',' << omega << ',' << report.map << '\n';
            std::cout << "gamma=" << gamma << " omega=" << omega << " MAP=" << report.map << '\n';
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asymmetric supervised hashing: train, encode, evaluate and benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> overrides;
    std::vector<std::string> extra;
    app.add_option("--config", config_path, "key = value configuration file");
    // Flag name -> config key.
    const std::vector<std::pair<std::string, std::string>> flags = {
        {"--seed", "seed"},
        {"--gamma", "gamma"},
        {"--omega", "omega"},
        {"--bits", "bits"},
        {"--tout", "tout"},
        {"--tin", "tin"},
        {"--batch", "batch"},
        {"--lr", "lr"},
        {"--mode", "mode"},
        {"--map-cutoff", "map_cutoff"},
        {"--out", "out"},
        {"--features", "features"},
        {"--labels", "labels"},
        {"--query-features", "query_features"},
        {"--query-labels", "query_labels"},
        {"--db-codes", "db_codes"},
        {"--query-codes", "query_codes"},
        {"--model", "model"},
    };
    std::map<std::string, std::string> flag_values;
    for (const auto& [flag, key] : flags) app.add_option(flag, flag_values[key], "sets '" + key + "'");
    app.add_option("--set", extra, "additional key=value settings (repeatable)");

    std::string chosen;
    for (const auto* name : {"gen-data", "train", "encode", "eval", "bench", "sweep"}) {
        auto* sub = app.add_subcommand(name);
        sub->fallthrough();
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        adsh::RunConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw adsh::ConfigError("cannot open config file " + config_path);
            cfg.load(in);
        }
        for (const auto& kv : extra) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw adsh::ConfigError("--set expects key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        for (const auto& [flag, key] : flags) {
            if (app.count(flag) > 0) cfg.set(key, flag_values[key]);
        }

        if (chosen == "gen-data") return cmd_gen_data(cfg);
        if (chosen == "train") return cmd_train(cfg);
        if (chosen == "encode") return cmd_encode(cfg);
        if (chosen == "eval") return cmd_eval(cfg);
        if (chosen == "bench") return cmd_bench(cfg);
        if (chosen == "sweep") return cmd_sweep(cfg);
        throw adsh::ConfigError("no command given");
    } catch (const adsh::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const adsh::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const adsh::ParseError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const adsh::ValidationError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    }
}
