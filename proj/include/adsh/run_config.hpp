#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adsh/encoder.hpp"
#include "adsh/solver.hpp"

namespace adsh {

/// Bad key, bad value or missing required setting in a run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Flat key=value run configuration. Files use one `key = value` per line
 * with `#` comments; command-line flags are applied on top with set().
 * Unknown keys are rejected.
 */
class RunConfig {
public:
    RunConfig() : values_(defaults()) {}

    static const std::map<std::string, std::string>& defaults() {
        static const std::map<std::string, std::string> d = {
            // training
            {"seed", "0"}, {"gamma", "200"}, {"omega", "1000"}, {"bits", "12"}, {"tout", "50"},
            {"tin", "3"}, {"batch", "128"}, {"lr", "0.001"}, {"mode", "asymmetric"},
            {"optimizer", "sgd"}, {"weighting", "on"}, {"hidden", "512"}, {"normalize_gradient", "on"},
            {"all_pairs", "off"},
            // data paths
            {"features", ""}, {"labels", ""}, {"query_features", ""}, {"query_labels", ""},
            {"db_codes", ""}, {"query_codes", ""}, {"model", ""}, {"out", "."},
            // synthetic generation
            {"clusters", "10"}, {"per_cluster", "200"}, {"dim", "32"}, {"sigma", "0.1"},
            {"queries", "100"}, {"validation", "0"},
            // evaluation
            {"map_cutoff", "none"}, {"topk", "100"},
            // bench / sweep
            {"n_values", "2000,4000,8000,16000"}, {"repeats", "3"}, {"gammas", "1,10,100,200,1000"},
            {"omegas", "100,200,400"},
        };
        return d;
    }

    void set(const std::string& key, const std::string& value) {
        if (!defaults().contains(key)) throw ConfigError("unknown config key '" + key + "'");
        values_[key] = value;
    }

    void load(std::istream& in) {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (trim(line).empty()) continue;
            if (eq == std::string::npos) {
                throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
            }
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    const std::string& get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
        return it->second;
    }

    std::string require_path(const std::string& key) const {
        const std::string& v = get(key);
        if (v.empty()) throw ConfigError("missing required setting '" + key + "'");
        return v;
    }

    double get_double(const std::string& key) const {
        const std::string& v = get(key);
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
        }
    }

    std::uint64_t get_uint(const std::string& key) const {
        const std::string& v = get(key);
        try {
            std::size_t used = 0;
            if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
            const auto u = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return u;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': '" + v + "' is not a non-negative integer");
        }
    }

    bool get_flag(const std::string& key) const {
        const std::string& v = get(key);
        if (v == "on" || v == "true" || v == "1") return true;
        if (v == "off" || v == "false" || v == "0") return false;
        throw ConfigError("config key '" + key + "': expected on/off, got '" + v + "'");
    }

    std::vector<std::uint64_t> get_uint_list(const std::string& key) const {
        std::vector<std::uint64_t> out;
        for (const auto& item : split_list(get(key))) {
            RunConfig tmp;
            tmp.values_[key] = item;
            out.push_back(tmp.get_uint(key));
        }
        return out;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : split_list(get(key))) {
            RunConfig tmp;
            tmp.values_[key] = item;
            out.push_back(tmp.get_double(key));
        }
        return out;
    }

    std::optional<std::size_t> map_cutoff() const {
        const std::string& v = get("map_cutoff");
        if (v == "none" || v.empty()) return std::nullopt;
        const auto cutoff = get_uint("map_cutoff");
        if (cutoff < 1) throw ConfigError("map_cutoff must be >= 1");
        return cutoff;
    }

    TrainConfig train_config() const {
        TrainConfig cfg;
        cfg.seed = get_uint("seed");
        cfg.gamma = get_double("gamma");
        cfg.query_count = get_uint("omega");
        cfg.code_len = get_uint("bits");
        cfg.outer_iters = get_uint("tout");
        cfg.inner_iters = get_uint("tin");
        cfg.batch_size = get_uint("batch");
        cfg.learning_rate = get_double("lr");
        cfg.imbalance_weighting = get_flag("weighting");
        cfg.normalize_gradient = get_flag("normalize_gradient");
        cfg.symmetric_all_pairs = get_flag("all_pairs");
        cfg.hidden_dims.clear();
        if (get("hidden") != "none") {
            for (auto h : get_uint_list("hidden")) cfg.hidden_dims.push_back(h);
        }
        const std::string& mode = get("mode");
        if (mode == "asymmetric") {
            cfg.mode = TrainMode::asymmetric_sampled;
        } else if (mode == "asymmetric_separate") {
            cfg.mode = TrainMode::asymmetric_separate_queries;
        } else if (mode == "symmetric") {
            cfg.mode = TrainMode::symmetric_baseline;
        } else {
            throw ConfigError("mode must be asymmetric, asymmetric_separate or symmetric, got '" + mode + "'");
        }
        const std::string& opt = get("optimizer");
        if (opt == "sgd") {
            cfg.optimizer = OptimizerKind::gradient_descent;
        } else if (opt == "adam") {
            cfg.optimizer = OptimizerKind::adam;
        } else {
            throw ConfigError("optimizer must be sgd or adam, got '" + opt + "'");
        }
        try {
            cfg.validate();
        } catch (const ValidationError& e) {
            throw ConfigError(e.what());
        }
        return cfg;
    }

    /// Effective configuration, one `key = value` per line, sorted by key.
    void write(std::ostream& os) const {
        for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static std::vector<std::string> split_list(const std::string& v) {
        std::vector<std::string> out;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    std::map<std::string, std::string> values_;
};

}  // namespace adsh
