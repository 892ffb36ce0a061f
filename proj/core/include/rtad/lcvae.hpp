// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/linear.hpp"
#include "rtad/param.hpp"

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace rtad {

struct LcvaeConfig {
    std::size_t embedding = 128;
    std::size_t latent = 10;
    std::size_t hidden = 64;
    double lambda = 0.5;
    /// Upper bound on the objective an anomalous (y = 1) window may reach.
    double anomalous_clip = 5.0;
    /// Log-variances are clamped to this range.
    double logvar_min = -10.0;
    double logvar_max = 10.0;

    void validate() const;
};

/// Gaussian parameters, one column per window.
struct GaussianParams {
    Mat mu;
    Mat sigma;
};

struct LossBreakdown {
    double kl = 0.0;
    double log_lik = 0.0;
    double recon = 0.0;
    double signed_total = 0.0;  // sgn(0.5 - y) * (-kl + log_lik - lambda * recon)
    double lambda = 0.5;
    int y = 0;
    bool clipped = false;  // anomalous window already at the clip bound
};

struct BatchLoss {
    std::vector<LossBreakdown> windows;
    double objective = 0.0;  // mean of the minimised per-window terms
};

/// Label-conditional VAE over the fused embedding. Encoder and decoder are
/// two affine layers with a ReLU between; the one-hot label is appended to
/// their inputs.
class Lcvae {
public:
    struct DrawCache {
        Mat eps;
        Mat z;
        Mat dec_in;
        Mat hidden;
        Mat mu;
        Mat logvar_raw;
        Mat logvar;
    };
    struct Cache {
        Mat e;
        std::vector<int> y;
        Mat enc_in;
        Mat enc_hidden;
        Mat mu;
        Mat logvar_raw;
        Mat logvar;
        Mat sigma;
        std::vector<DrawCache> draws;
        DrawCache mean_path;  // decode(mu), used by the reconstruction term
        std::vector<double> grad_scale;  // d objective / d signed_total per window
    };

    Lcvae() = default;
    Lcvae(const LcvaeConfig& cfg, std::mt19937_64& rng);

    const LcvaeConfig& config() const { return cfg_; }

    GaussianParams encode(const Mat& e, std::span<const int> y) const;
    GaussianParams decode(const Mat& z, std::span<const int> y) const;

    /// `eps` holds one latent x B standard-normal draw per sample (at least one).
    BatchLoss loss(const Mat& e, std::span<const int> y, const std::vector<Mat>& eps,
                   Cache* cache = nullptr) const;
    /// Accumulates parameter gradients of the batch objective and returns d/de.
    Mat backward(const Cache& cache);

    /// ||e - mu_theta(mu_phi(e, 0), 0)|| per column.
    Vec reconstruction_error(const Mat& e) const;

    Linear& enc1() { return enc1_; }
    Linear& enc2() { return enc2_; }
    Linear& dec1() { return dec1_; }
    Linear& dec2() { return dec2_; }

    void collect(ParamRefs& out);

private:
    Mat with_label(const Mat& x, std::span<const int> y) const;
    Mat clamp_logvar(const Mat& raw) const;
    void run_decoder(DrawCache& d, std::span<const int> y) const;
    Mat decoder_backward(const DrawCache& d, const Mat& d_mu, const Mat& d_logvar);

    LcvaeConfig cfg_;
    Linear enc1_, enc2_, dec1_, dec2_;
};

/// z = mu + sigma * eps.
Vec reparameterize(const Vec& mu, const Vec& sigma, const Vec& eps);

/// Closed-form KL(N(mu, sigma^2) || N(0, I)).
double gaussian_kl(const Vec& mu, const Vec& sigma);

/// log N(x; mu, diag(sigma^2)).
double gaussian_log_density(const Vec& x, const Vec& mu, const Vec& sigma);

/// Single-window loss from precomputed encoder/decoder outputs. `decoded`
/// holds one decoder output per draw; `mean_decoded` is the eps = 0 output.
LossBreakdown lcvae_loss(const Vec& e, int y, const GaussianParams& encoded,
                         const std::vector<GaussianParams>& decoded,
                         const Vec& mean_decoded_mu, double lambda);

/// Min-max scaling of raw reconstruction errors fitted on the training set.
class ScoreNormalizer {
public:
    ScoreNormalizer() = default;
    ScoreNormalizer(double min, double max) : min_(min), max_(max), fitted_(true) {}

    static ScoreNormalizer fit(std::span<const double> raw);

    bool fitted() const { return fitted_; }
    double min() const { return min_; }
    double max() const { return max_; }

    /// clip((raw - min) / (max - min), 0, 1); throws StateError when unfitted.
    double apply(double raw) const;

private:
    double min_ = 0.0;
    double max_ = 1.0;
    bool fitted_ = false;
};

double anomaly_score(const Vec& e, const Lcvae& model, const ScoreNormalizer& normalizer);

} // namespace rtad
