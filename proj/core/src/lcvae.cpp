// SPDX-License-Identifier: Apache-2.0
#include "rtad/lcvae.hpp"

#include "rtad/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rtad {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

double sign_of(int y) { return y == 0 ? 1.0 : -1.0; }

} // namespace

void LcvaeConfig::validate() const {
    if (embedding == 0 || latent == 0 || hidden == 0) {
        throw ConfigError("LC-VAE sizes must be positive");
    }
    if (!(lambda >= 0.0)) {
        throw ConfigError("lambda must be non-negative");
    }
    if (!(anomalous_clip > 0.0)) {
        throw ConfigError("anomalous_clip must be positive");
    }
    if (!(logvar_min < logvar_max)) {
        throw ConfigError("logvar_min must be below logvar_max");
    }
}

Lcvae::Lcvae(const LcvaeConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
    cfg_.validate();
    const auto e = static_cast<Eigen::Index>(cfg_.embedding);
    const auto z = static_cast<Eigen::Index>(cfg_.latent);
    const auto h = static_cast<Eigen::Index>(cfg_.hidden);
    enc1_ = Linear("lcvae.enc1", e + 2, h, rng);
    enc2_ = Linear("lcvae.enc2", h, 2 * z, rng);
    dec1_ = Linear("lcvae.dec1", z + 2, h, rng);
    dec2_ = Linear("lcvae.dec2", h, 2 * e, rng);
}

Mat Lcvae::with_label(const Mat& x, std::span<const int> y) const {
    if (static_cast<std::size_t>(x.cols()) != y.size()) {
        throw ValidationError("label count does not match batch size");
    }
    Mat out = Mat::Zero(x.rows() + 2, x.cols());
    out.topRows(x.rows()) = x;
    for (std::size_t b = 0; b < y.size(); ++b) {
        if (y[b] != 0 && y[b] != 1) {
            throw ValidationError("labels must be 0 or 1");
        }
        out(x.rows() + y[b], static_cast<Eigen::Index>(b)) = 1.0;
    }
    return out;
}

Mat Lcvae::clamp_logvar(const Mat& raw) const {
    return raw.cwiseMax(cfg_.logvar_min).cwiseMin(cfg_.logvar_max);
}

GaussianParams Lcvae::encode(const Mat& e, std::span<const int> y) const {
    if (static_cast<std::size_t>(e.rows()) != cfg_.embedding) {
        throw ValidationError("embedding width does not match the LC-VAE");
    }
    const auto z = static_cast<Eigen::Index>(cfg_.latent);
    Mat o = enc2_.forward(enc1_.forward(with_label(e, y)).cwiseMax(0.0));
    return {o.topRows(z), (0.5 * clamp_logvar(o.bottomRows(z)).array()).exp().matrix()};
}

GaussianParams Lcvae::decode(const Mat& z, std::span<const int> y) const {
    if (static_cast<std::size_t>(z.rows()) != cfg_.latent) {
        throw ValidationError("latent width does not match the LC-VAE");
    }
    const auto e = static_cast<Eigen::Index>(cfg_.embedding);
    Mat o = dec2_.forward(dec1_.forward(with_label(z, y)).cwiseMax(0.0));
    return {o.topRows(e), (0.5 * clamp_logvar(o.bottomRows(e)).array()).exp().matrix()};
}

void Lcvae::run_decoder(DrawCache& d, std::span<const int> y) const {
    const auto e = static_cast<Eigen::Index>(cfg_.embedding);
    d.dec_in = with_label(d.z, y);
    d.hidden = dec1_.forward(d.dec_in).cwiseMax(0.0);
    Mat o = dec2_.forward(d.hidden);
    d.mu = o.topRows(e);
    d.logvar_raw = o.bottomRows(e);
    d.logvar = clamp_logvar(d.logvar_raw);
}

BatchLoss Lcvae::loss(const Mat& e, std::span<const int> y, const std::vector<Mat>& eps,
                      Cache* cache) const {
    if (eps.empty()) {
        throw ValidationError("LC-VAE loss needs at least one noise draw");
    }
    if (static_cast<std::size_t>(e.rows()) != cfg_.embedding) {
        throw ValidationError("embedding width does not match the LC-VAE");
    }
    const Eigen::Index batch = e.cols();
    const auto zdim = static_cast<Eigen::Index>(cfg_.latent);

    Cache local;
    Cache& c = cache ? *cache : local;
    c.e = e;
    c.y.assign(y.begin(), y.end());
    c.enc_in = with_label(e, y);
    c.enc_hidden = enc1_.forward(c.enc_in).cwiseMax(0.0);
    Mat o = enc2_.forward(c.enc_hidden);
    c.mu = o.topRows(zdim);
    c.logvar_raw = o.bottomRows(zdim);
    c.logvar = clamp_logvar(c.logvar_raw);
    c.sigma = (0.5 * c.logvar.array()).exp().matrix();

    Eigen::ArrayXd kl = 0.5 * (c.mu.array().square() + c.logvar.array().exp() - 1.0 -
                               c.logvar.array())
                                  .colwise()
                                  .sum()
                                  .transpose();

    Eigen::ArrayXd log_lik = Eigen::ArrayXd::Zero(batch);
    c.draws.assign(eps.size(), {});
    for (std::size_t s = 0; s < eps.size(); ++s) {
        if (eps[s].rows() != zdim || eps[s].cols() != batch) {
            throw ValidationError("noise draw has the wrong shape");
        }
        DrawCache& d = c.draws[s];
        d.eps = eps[s];
        d.z = c.mu + c.sigma.cwiseProduct(d.eps);
        run_decoder(d, y);
        Eigen::ArrayXXd resid = e.array() - d.mu.array();
        log_lik += (-0.5 * (kLog2Pi + d.logvar.array()) -
                    0.5 * resid.square() * (-d.logvar.array()).exp())
                       .colwise()
                       .sum()
                       .transpose();
    }
    log_lik /= static_cast<double>(eps.size());

    c.mean_path = {};
    c.mean_path.z = c.mu;
    run_decoder(c.mean_path, y);
    Eigen::ArrayXd recon = (e - c.mean_path.mu).colwise().norm().transpose().array();

    BatchLoss out;
    out.windows.resize(static_cast<std::size_t>(batch));
    c.grad_scale.assign(static_cast<std::size_t>(batch), 0.0);
    for (Eigen::Index b = 0; b < batch; ++b) {
        auto& lb = out.windows[static_cast<std::size_t>(b)];
        lb.kl = kl(b);
        lb.log_lik = log_lik(b);
        lb.recon = recon(b);
        lb.lambda = cfg_.lambda;
        lb.y = y[static_cast<std::size_t>(b)];
        lb.signed_total = sign_of(lb.y) * (-lb.kl + lb.log_lik - cfg_.lambda * lb.recon);
        double term = -lb.signed_total;
        double scale = -1.0 / static_cast<double>(batch);
        if (lb.y == 1 && lb.signed_total >= cfg_.anomalous_clip) {
            lb.clipped = true;
            term = -cfg_.anomalous_clip;
            scale = 0.0;
        }
        out.objective += term / static_cast<double>(batch);
        c.grad_scale[static_cast<std::size_t>(b)] = scale;
    }
    return out;
}

Mat Lcvae::decoder_backward(const DrawCache& d, const Mat& d_mu, const Mat& d_logvar) {
    Mat d_o(d_mu.rows() + d_logvar.rows(), d_mu.cols());
    d_o.topRows(d_mu.rows()) = d_mu;
    d_o.bottomRows(d_logvar.rows()) =
        ((d.logvar_raw.array() >= cfg_.logvar_min && d.logvar_raw.array() <= cfg_.logvar_max)
             .select(d_logvar, 0.0));
    Mat d_hidden = dec2_.backward(d.hidden, d_o);
    d_hidden = (d.hidden.array() > 0.0).select(d_hidden, 0.0);
    Mat d_in = dec1_.backward(d.dec_in, d_hidden);
    return d_in.topRows(static_cast<Eigen::Index>(cfg_.latent));
}

Mat Lcvae::backward(const Cache& c) {
    const Eigen::Index batch = c.e.cols();
    const auto zdim = static_cast<Eigen::Index>(cfg_.latent);
    // per-window weights of kl, log_lik and recon in the minimised objective
    Eigen::RowVectorXd g_kl(batch), g_ll(batch), g_rec(batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const double sgn = sign_of(c.y[static_cast<std::size_t>(b)]);
        const double g = c.grad_scale[static_cast<std::size_t>(b)];
        g_kl(b) = -sgn * g;
        g_ll(b) = sgn * g;
        g_rec(b) = -sgn * cfg_.lambda * g;
    }

    Mat d_e = Mat::Zero(c.e.rows(), batch);
    Mat d_mu = c.mu.array().rowwise() * g_kl.array();
    Mat d_logvar = (0.5 * (c.logvar.array().exp() - 1.0)).rowwise() * g_kl.array();

    const double inv_draws = 1.0 / static_cast<double>(c.draws.size());
    for (const DrawCache& d : c.draws) {
        Eigen::ArrayXXd precision = (-d.logvar.array()).exp();
        Eigen::ArrayXXd resid = c.e.array() - d.mu.array();
        Eigen::RowVectorXd w = g_ll * inv_draws;
        Mat d_mu_theta = (resid * precision).rowwise() * w.array();
        Mat d_lv_theta = (-0.5 + 0.5 * resid.square() * precision).rowwise() * w.array();
        d_e -= d_mu_theta;
        Mat d_z = decoder_backward(d, d_mu_theta, d_lv_theta);
        d_mu += d_z;
        d_logvar += (d_z.array() * d.eps.array() * 0.5 * c.sigma.array()).matrix();
    }

    {
        Mat resid = c.e - c.mean_path.mu;
        Eigen::RowVectorXd norm = resid.colwise().norm();
        Mat d_resid = Mat::Zero(resid.rows(), batch);
        for (Eigen::Index b = 0; b < batch; ++b) {
            if (norm(b) > 0.0) {
                d_resid.col(b) = resid.col(b) * (g_rec(b) / norm(b));
            }
        }
        d_e += d_resid;
        Mat d_z = decoder_backward(c.mean_path, -d_resid, Mat::Zero(resid.rows(), batch));
        d_mu += d_z;
    }

    Mat d_o(2 * zdim, batch);
    d_o.topRows(zdim) = d_mu;
    d_o.bottomRows(zdim) =
        (c.logvar_raw.array() >= cfg_.logvar_min && c.logvar_raw.array() <= cfg_.logvar_max)
            .select(d_logvar, 0.0);
    Mat d_hidden = enc2_.backward(c.enc_hidden, d_o);
    d_hidden = (c.enc_hidden.array() > 0.0).select(d_hidden, 0.0);
    Mat d_in = enc1_.backward(c.enc_in, d_hidden);
    d_e += d_in.topRows(c.e.rows());
    return d_e;
}

Vec Lcvae::reconstruction_error(const Mat& e) const {
    std::vector<int> normal(static_cast<std::size_t>(e.cols()), 0);
    GaussianParams enc = encode(e, normal);
    GaussianParams dec = decode(enc.mu, normal);
    return (e - dec.mu).colwise().norm().transpose();
}

void Lcvae::collect(ParamRefs& out) {
    enc1_.collect(out);
    enc2_.collect(out);
    dec1_.collect(out);
    dec2_.collect(out);
}

Vec reparameterize(const Vec& mu, const Vec& sigma, const Vec& eps) {
    if (mu.size() != sigma.size() || mu.size() != eps.size()) {
        throw ValidationError("reparameterisation inputs differ in length");
    }
    if ((sigma.array() <= 0.0).any()) {
        throw ValidationError("sigma must be positive");
    }
    return mu + sigma.cwiseProduct(eps);
}

double gaussian_kl(const Vec& mu, const Vec& sigma) {
    Eigen::ArrayXd var = sigma.array().square();
    return 0.5 * (mu.array().square() + var - 1.0 - var.log()).sum();
}

double gaussian_log_density(const Vec& x, const Vec& mu, const Vec& sigma) {
    Eigen::ArrayXd var = sigma.array().square();
    return (-0.5 * (kLog2Pi + var.log()) - 0.5 * (x - mu).array().square() / var).sum();
}

LossBreakdown lcvae_loss(const Vec& e, int y, const GaussianParams& encoded,
                         const std::vector<GaussianParams>& decoded, const Vec& mean_decoded_mu,
                         double lambda) {
    if (decoded.empty()) {
        throw ValidationError("LC-VAE loss needs at least one noise draw");
    }
    if (y != 0 && y != 1) {
        throw ValidationError("labels must be 0 or 1");
    }
    LossBreakdown out;
    out.y = y;
    out.lambda = lambda;
    out.kl = gaussian_kl(encoded.mu.col(0), encoded.sigma.col(0));
    for (const auto& d : decoded) {
        out.log_lik += gaussian_log_density(e, d.mu.col(0), d.sigma.col(0));
    }
    out.log_lik /= static_cast<double>(decoded.size());
    out.recon = (e - mean_decoded_mu).norm();
    out.signed_total = sign_of(y) * (-out.kl + out.log_lik - lambda * out.recon);
    return out;
}

ScoreNormalizer ScoreNormalizer::fit(std::span<const double> raw) {
    if (raw.empty()) {
        throw ValidationError("cannot fit a score normalizer on zero scores");
    }
    auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    return ScoreNormalizer(*lo, *hi);
}

double ScoreNormalizer::apply(double raw) const {
    if (!fitted_) {
        throw StateError("score normalizer has not been fitted");
    }
    double span = max_ - min_;
    if (span <= 0.0) {
        span = 1.0;
    }
    return std::clamp((raw - min_) / span, 0.0, 1.0);
}

double anomaly_score(const Vec& e, const Lcvae& model, const ScoreNormalizer& normalizer) {
    if (!normalizer.fitted()) {
        throw StateError("score normalizer has not been fitted");
    }
    Mat col = e;
    return normalizer.apply(model.reconstruction_error(col)(0));
}

} // namespace rtad
