// SPDX-License-Identifier: Apache-2.0
#include "run_config.hpp"

#include "rtad/error.hpp"
#include "rtad/localize.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rtad::app {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "0" || v == "false" || v == "no" || v == "off") {
        return false;
    }
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
    std::vector<T> out;
    std::istringstream is(v);
    for (std::string tok; std::getline(is, tok, ',');) {
        out.push_back(parse_number<T>(key, trim(tok)));
    }
    if (out.empty()) {
        throw ConfigError("'" + key + "' expects a comma-separated list");
    }
    return out;
}

std::string show(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}
std::string show(std::size_t v) { return std::to_string(v); }
std::string show(std::uint64_t v, int) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }

template <class T>
std::string show_list(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) {
            out += ",";
        }
        if constexpr (std::is_floating_point_v<T>) {
            out += show(static_cast<double>(xs[i]));
        } else {
            out += std::to_string(xs[i]);
        }
    }
    return out;
}

struct Field {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define RTAD_SIZE(path) \
    Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.path = parse_number<std::size_t>(k, v); }, \
          [](const RunConfig& c) { return show(static_cast<std::size_t>(c.path)); }}
#define RTAD_REAL(path) \
    Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.path = parse_number<double>(k, v); }, \
          [](const RunConfig& c) { return show(static_cast<double>(c.path)); }}
#define RTAD_BOOL(path) \
    Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.path = parse_bool(k, v); }, \
          [](const RunConfig& c) { return show(static_cast<bool>(c.path)); }}
#define RTAD_PATH(path) \
    Field{[](RunConfig& c, const std::string&, const std::string& v) { c.path = v; }, \
          [](const RunConfig& c) { return c.path.string(); }}
#define RTAD_TEXT(path) \
    Field{[](RunConfig& c, const std::string&, const std::string& v) { c.path = v; }, \
          [](const RunConfig& c) { return c.path; }}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = {
        // model
        {"window", RTAD_SIZE(train.model.window)},
        {"attention_hidden", RTAD_SIZE(train.model.attention_hidden)},
        {"gcn_features", RTAD_SIZE(train.model.gcn_features)},
        {"gcn_layers", RTAD_SIZE(train.model.gcn_layers)},
        {"pool_ratio", RTAD_REAL(train.model.pool_ratio)},
        {"adjacency_threshold", RTAD_REAL(train.model.adjacency_threshold)},
        {"leaky_slope", RTAD_REAL(train.model.leaky_slope)},
        {"attention_init",
         Field{[](RunConfig& c, const std::string&, const std::string& v) {
                   c.train.model.attention_init = parse_attention_init(v);
               },
               [](const RunConfig& c) { return std::string(to_string(c.train.model.attention_init)); }}},
        {"attention_init_gain", RTAD_REAL(train.model.attention_init_gain)},
        {"straight_through", RTAD_BOOL(train.model.straight_through)},
        {"gru_hidden", RTAD_SIZE(train.model.gru_hidden)},
        {"conv_channels", RTAD_SIZE(train.model.conv_channels)},
        {"conv_kernel", RTAD_SIZE(train.model.conv_kernel)},
        {"conv_dilations",
         Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                   c.train.model.conv_dilations = parse_list<std::size_t>(k, v);
               },
               [](const RunConfig& c) { return show_list(c.train.model.conv_dilations); }}},
        {"embedding", RTAD_SIZE(train.model.embedding)},
        {"latent", RTAD_SIZE(train.model.latent)},
        {"vae_hidden", RTAD_SIZE(train.model.vae_hidden)},
        {"lambda", RTAD_REAL(train.model.lambda)},
        {"anomalous_clip", RTAD_REAL(train.model.anomalous_clip)},
        // training
        {"train_stride", RTAD_SIZE(train.train_stride)},
        {"beta", RTAD_REAL(train.pu.beta)},
        {"labeled_fraction", RTAD_REAL(train.pu.labeled_fraction)},
        {"epochs", RTAD_SIZE(train.pu.epochs)},
        {"batch_size", RTAD_SIZE(train.pu.batch_size)},
        {"lr", RTAD_REAL(train.pu.lr)},
        {"seed",
         Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                   c.train.pu.seed = parse_number<std::uint64_t>(k, v);
               },
               [](const RunConfig& c) { return show(c.train.pu.seed, 0); }}},
        {"disable_pseudo_labels", RTAD_BOOL(train.pu.disable_pseudo_labels)},
        // data
        {"data_format", RTAD_TEXT(data_format)},
        {"train_data", RTAD_PATH(train_data)},
        {"train_labels", RTAD_PATH(train_labels)},
        {"test_data", RTAD_PATH(test_data)},
        {"test_labels", RTAD_PATH(test_labels)},
        {"test_interpretation", RTAD_PATH(test_interpretation)},
        {"checkpoint", RTAD_PATH(checkpoint)},
        // synth
        {"synth.metrics", RTAD_SIZE(synth_metrics)},
        {"synth.length", RTAD_SIZE(synth_length)},
        {"synth.seed",
         Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                   c.synth_seed = parse_number<std::uint64_t>(k, v);
               },
               [](const RunConfig& c) { return show(c.synth_seed, 0); }}},
        {"synth.noise_std", RTAD_REAL(synth_noise_std)},
        {"synth.anomaly_ratio", RTAD_REAL(synth_faults.anomaly_ratio)},
        {"synth.min_length", RTAD_SIZE(synth_faults.min_length)},
        {"synth.max_length", RTAD_SIZE(synth_faults.max_length)},
        {"synth.spike_share", RTAD_REAL(synth_faults.spike_share)},
        {"synth.min_gap", RTAD_SIZE(synth_faults.min_gap)},
        {"synth.lead_in", RTAD_SIZE(synth_faults.lead_in)},
        {"synth.train_fraction", RTAD_REAL(synth_train_fraction)},
        // detect / localize / sweep
        {"threshold", RTAD_REAL(threshold)},
        {"localize.method", RTAD_TEXT(localize_method)},
        {"localize.k", RTAD_SIZE(localize_k)},
        {"localize.segments", RTAD_TEXT(localize_segments)},
        {"sweep.betas",
         Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                   c.sweep_betas = parse_list<double>(k, v);
               },
               [](const RunConfig& c) { return show_list(c.sweep_betas); }}},
    };
    return table;
}

#undef RTAD_SIZE
#undef RTAD_REAL
#undef RTAD_BOOL
#undef RTAD_PATH
#undef RTAD_TEXT

} // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& table = fields();
    auto it = table.find(key);
    if (it == table.end()) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    it->second.set(*this, key, value);
}

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::size_t lineno = 0;
    for (std::string line; std::getline(is, line);) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.find('=') == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        try {
            apply_override(line);
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void RunConfig::validate() const {
    // metrics come from the data, so validate against a placeholder count
    TrainConfig t = train;
    t.model.metrics = std::max<std::size_t>(t.model.metrics, 1);
    t.validate();
    parse_data_format(data_format);
    parse_localize_method(localize_method);
    if (localize_k == 0) {
        throw ConfigError("localize.k must be positive");
    }
    if (localize_segments != "truth" && localize_segments != "predicted") {
        throw ConfigError("localize.segments must be 'truth' or 'predicted'");
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ConfigError("threshold must lie in [0, 1]");
    }
    for (double b : sweep_betas) {
        if (!(b > 0.0 && b <= 1.0)) {
            throw ConfigError("sweep.betas entries must lie in (0, 1]");
        }
    }
    if (synth_metrics == 0 || synth_length == 0) {
        throw ConfigError("synth.metrics and synth.length must be positive");
    }
    if (!(synth_noise_std >= 0.0)) {
        throw ConfigError("synth.noise_std must be non-negative");
    }
    if (!(synth_faults.anomaly_ratio >= 0.0 && synth_faults.anomaly_ratio < 1.0)) {
        throw ConfigError("synth.anomaly_ratio must lie in [0, 1)");
    }
    if (synth_faults.min_length == 0 || synth_faults.min_length > synth_faults.max_length) {
        throw ConfigError("synth.min_length must be positive and not exceed synth.max_length");
    }
    if (!(synth_faults.spike_share >= 0.0 && synth_faults.spike_share <= 1.0)) {
        throw ConfigError("synth.spike_share must lie in [0, 1]");
    }
    if (!(synth_train_fraction > 0.0 && synth_train_fraction < 1.0)) {
        throw ConfigError("synth.train_fraction must lie in (0, 1)");
    }
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& [k, f] : fields()) {
        out += k + " = " + f.get(*this) + "\n";
    }
    return out;
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) {
        out.push_back(k);
    }
    return out;
}

} // namespace rtad::app
