// SPDX-License-Identifier: Apache-2.0
#include "rtad/checkpoint.hpp"

#include "rtad/error.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rtad {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes little-endian");

constexpr char kMagic[8] = {'R', 'T', 'A', 'D', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) {
        throw CheckpointError("checkpoint is truncated");
    }
    return v;
}

std::string get_bytes(std::istream& is, std::size_t n) {
    std::string s(n, '\0');
    if (n > 0 && !is.read(s.data(), static_cast<std::streamsize>(n))) {
        throw CheckpointError("checkpoint is truncated");
    }
    return s;
}

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

std::size_t to_size(const std::string& s, const std::string& key) {
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw CheckpointError("checkpoint field '" + key + "' is not an integer");
    }
    return v;
}

double to_double(const std::string& s, const std::string& key) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw CheckpointError("checkpoint field '" + key + "' is not a number");
    }
    return v;
}

} // namespace

const Mat& Archive::array(const std::string& key) const {
    for (const auto& [k, m] : arrays) {
        if (k == key) {
            return m;
        }
    }
    throw CheckpointError("checkpoint has no array '" + key + "'");
}

const std::string& Archive::value(const std::string& key) const {
    auto it = header.find(key);
    if (it == header.end()) {
        throw CheckpointError("checkpoint header has no field '" + key + "'");
    }
    return it->second;
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
    std::string header;
    for (const auto& [k, v] : archive.header) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw CheckpointError("header entry '" + k + "' cannot be stored");
        }
        header += k + "=" + v + "\n";
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw CheckpointError("cannot write checkpoint " + path.string());
    }
    os.write(kMagic, sizeof(kMagic));
    put_u32(os, Archive::kVersion);
    put_u32(os, static_cast<std::uint32_t>(header.size()));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    put_u32(os, static_cast<std::uint32_t>(archive.arrays.size()));
    for (const auto& [k, m] : archive.arrays) {
        put_u32(os, static_cast<std::uint32_t>(k.size()));
        os.write(k.data(), static_cast<std::streamsize>(k.size()));
        put_u32(os, static_cast<std::uint32_t>(m.rows()));
        put_u32(os, static_cast<std::uint32_t>(m.cols()));
        os.write(reinterpret_cast<const char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
    if (!os) {
        throw CheckpointError("failed writing checkpoint " + path.string());
    }
}

Archive read_archive(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw CheckpointError("cannot open checkpoint " + path.string());
    }
    std::string magic = get_bytes(is, sizeof(kMagic));
    if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
        throw CheckpointError(path.string() + " is not a checkpoint");
    }
    const std::uint32_t version = get_u32(is);
    if (version != Archive::kVersion) {
        throw CheckpointError("checkpoint version " + std::to_string(version) +
                              " is not supported (expected " + std::to_string(Archive::kVersion) + ")");
    }
    Archive out;
    std::istringstream header(get_bytes(is, get_u32(is)));
    for (std::string line; std::getline(header, line);) {
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw CheckpointError("malformed checkpoint header line '" + line + "'");
        }
        out.header[line.substr(0, eq)] = line.substr(eq + 1);
    }
    const std::uint32_t n = get_u32(is);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string key = get_bytes(is, get_u32(is));
        const std::uint32_t rows = get_u32(is);
        const std::uint32_t cols = get_u32(is);
        Mat m(rows, cols);
        if (m.size() > 0 &&
            !is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)))) {
            throw CheckpointError("checkpoint is truncated");
        }
        out.arrays.emplace_back(std::move(key), std::move(m));
    }
    return out;
}

Archive detector_to_archive(const Detector& detector) {
    Detector d = detector;  // parameter collection needs mutable access
    const ModelConfig& c = d.model.config();
    Archive a;
    auto& h = a.header;
    h["metrics"] = std::to_string(c.metrics);
    h["window"] = std::to_string(c.window);
    h["attention_hidden"] = std::to_string(c.attention_hidden);
    h["gcn_features"] = std::to_string(c.gcn_features);
    h["gcn_layers"] = std::to_string(c.gcn_layers);
    h["pool_ratio"] = fmt(c.pool_ratio);
    h["adjacency_threshold"] = fmt(c.adjacency_threshold);
    h["leaky_slope"] = fmt(c.leaky_slope);
    h["attention_init"] = to_string(c.attention_init);
    h["attention_init_gain"] = fmt(c.attention_init_gain);
    h["straight_through"] = c.straight_through ? "1" : "0";
    h["gru_hidden"] = std::to_string(c.gru_hidden);
    h["conv_channels"] = std::to_string(c.conv_channels);
    h["conv_kernel"] = std::to_string(c.conv_kernel);
    std::string dil;
    for (std::size_t i = 0; i < c.conv_dilations.size(); ++i) {
        dil += (i ? "," : "") + std::to_string(c.conv_dilations[i]);
    }
    h["conv_dilations"] = dil;
    h["embedding_dim"] = std::to_string(c.embedding);
    h["latent_dim"] = std::to_string(c.latent);
    h["vae_hidden"] = std::to_string(c.vae_hidden);
    h["lambda"] = fmt(c.lambda);
    h["anomalous_clip"] = fmt(c.anomalous_clip);
    for (std::size_t j = 0; j < d.metric_names.size(); ++j) {
        h["metric_name." + std::to_string(j)] = d.metric_names[j];
    }

    for (Param* p : d.model.parameters()) {
        a.arrays.emplace_back(p->name, p->value);
    }
    for (Param* p : d.model.buffers()) {
        a.arrays.emplace_back(p->name, p->value);
    }
    const auto M = static_cast<Eigen::Index>(c.metrics);
    Mat norm(2, 1);
    norm << d.normalizer.min(), d.normalizer.max();
    a.arrays.emplace_back("score.normalizer", norm);
    Mat minmax(M, 2);
    Mat moments(M, 2);
    for (Eigen::Index j = 0; j < M; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        minmax(j, 0) = d.minmax.min.at(jj);
        minmax(j, 1) = d.minmax.max.at(jj);
        moments(j, 0) = d.moments.mean.at(jj);
        moments(j, 1) = d.moments.std.at(jj);
    }
    a.arrays.emplace_back("ingest.minmax", minmax);
    a.arrays.emplace_back("detect.moments", moments);
    a.arrays.emplace_back("localize.attention_normal", d.attention_normal);
    return a;
}

Detector detector_from_archive(const Archive& a) {
    ModelConfig c;
    c.metrics = to_size(a.value("metrics"), "metrics");
    c.window = to_size(a.value("window"), "window");
    c.attention_hidden = to_size(a.value("attention_hidden"), "attention_hidden");
    c.gcn_features = to_size(a.value("gcn_features"), "gcn_features");
    c.gcn_layers = to_size(a.value("gcn_layers"), "gcn_layers");
    c.pool_ratio = to_double(a.value("pool_ratio"), "pool_ratio");
    c.adjacency_threshold = to_double(a.value("adjacency_threshold"), "adjacency_threshold");
    c.leaky_slope = to_double(a.value("leaky_slope"), "leaky_slope");
    try {
        c.attention_init = parse_attention_init(a.value("attention_init"));
    } catch (const ConfigError& e) {
        throw CheckpointError(e.what());
    }
    c.attention_init_gain = to_double(a.value("attention_init_gain"), "attention_init_gain");
    c.straight_through = to_size(a.value("straight_through"), "straight_through") != 0;
    c.gru_hidden = to_size(a.value("gru_hidden"), "gru_hidden");
    c.conv_channels = to_size(a.value("conv_channels"), "conv_channels");
    c.conv_kernel = to_size(a.value("conv_kernel"), "conv_kernel");
    c.conv_dilations.clear();
    std::istringstream dil(a.value("conv_dilations"));
    for (std::string tok; std::getline(dil, tok, ',');) {
        c.conv_dilations.push_back(to_size(tok, "conv_dilations"));
    }
    c.embedding = to_size(a.value("embedding_dim"), "embedding_dim");
    c.latent = to_size(a.value("latent_dim"), "latent_dim");
    c.vae_hidden = to_size(a.value("vae_hidden"), "vae_hidden");
    c.lambda = to_double(a.value("lambda"), "lambda");
    c.anomalous_clip = to_double(a.value("anomalous_clip"), "anomalous_clip");

    Detector d;
    try {
        d.model = RTModel(c, 0);
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("checkpoint hyperparameters are invalid: ") + e.what());
    }
    auto load = [&](Param* p) {
        const Mat& m = a.array(p->name);
        if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
            throw CheckpointError("array '" + p->name + "' has the wrong shape");
        }
        p->value = m;
    };
    for (Param* p : d.model.parameters()) {
        load(p);
    }
    for (Param* p : d.model.buffers()) {
        load(p);
    }
    const auto M = static_cast<Eigen::Index>(c.metrics);
    auto sized = [&](const std::string& key, Eigen::Index rows, Eigen::Index cols) -> const Mat& {
        const Mat& m = a.array(key);
        if (m.rows() != rows || m.cols() != cols) {
            throw CheckpointError("array '" + key + "' has the wrong shape");
        }
        return m;
    };
    const Mat& norm = sized("score.normalizer", 2, 1);
    d.normalizer = ScoreNormalizer(norm(0), norm(1));
    const Mat& minmax = sized("ingest.minmax", M, 2);
    const Mat& moments = sized("detect.moments", M, 2);
    for (Eigen::Index j = 0; j < M; ++j) {
        d.minmax.min.push_back(minmax(j, 0));
        d.minmax.max.push_back(minmax(j, 1));
        d.moments.mean.push_back(moments(j, 0));
        d.moments.std.push_back(moments(j, 1));
        d.metric_names.push_back(a.value("metric_name." + std::to_string(j)));
    }
    d.attention_normal = sized("localize.attention_normal", M, M);
    return d;
}

void save_checkpoint(const std::filesystem::path& path, const Detector& detector) {
    write_archive(path, detector_to_archive(detector));
}

Detector load_checkpoint(const std::filesystem::path& path) {
    return detector_from_archive(read_archive(path));
}

} // namespace rtad
