#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "gcsfno/adam.hpp"
#include "gcsfno/trainer.hpp"

namespace gcsfno {

namespace {

struct EvalResult {
    double norm = 0.0;
    double phys = 0.0;
};

/// One deterministic pass over the samples: pooled RMSE of the normalized
/// residuals and of the physical-unit residuals (pressure in psia).
EvalResult eval_pass(const FnoParams<float>& params, const std::vector<Sample>& samples,
                     const Normalizer& normalizer, std::uint32_t target_code) {
    if (samples.empty()) throw ContractError("evaluate_loss: no samples to evaluate");
    const std::vector<std::size_t>& shape = samples.front().x.shape;
    const double unit = target_code == kTargetPressure ? kPascalPerPsia : 1.0;
    double sq_norm = 0.0, sq_phys = 0.0;
    std::size_t n_pix = 0;
    for (const Sample& s : samples) {
        if (s.x.shape != shape)
            throw ContractError("evaluate_loss: samples must share one grid shape");
        TensorF x = s.x;
        normalizer.apply_x(x);
        const TensorF yhat = fno_forward(params, x);
        TensorF y_norm = s.y;
        normalizer.apply_y(y_norm);
        TensorF yhat_phys = yhat;
        normalizer.invert_y(yhat_phys);
        if (yhat.size() != s.y.size())
            throw ContractError("evaluate_loss: prediction/target size mismatch");
        for (std::size_t i = 0; i < yhat.size(); ++i) {
            const double dn =
                static_cast<double>(yhat.data[i]) - static_cast<double>(y_norm.data[i]);
            const double dp = (static_cast<double>(yhat_phys.data[i]) -
                               static_cast<double>(s.y.data[i])) /
                              unit;
            sq_norm += dn * dn;
            sq_phys += dp * dp;
        }
        n_pix += yhat.size();
    }
    const double n = static_cast<double>(n_pix);
    return {std::sqrt(sq_norm / n), std::sqrt(sq_phys / n)};
}

struct NormalizedSet {
    std::vector<TensorF> x;
    std::vector<TensorF> y;
};

NormalizedSet normalize_set(const std::vector<Sample>& samples, const Normalizer& n) {
    NormalizedSet out;
    out.x.reserve(samples.size());
    out.y.reserve(samples.size());
    for (const Sample& s : samples) {
        TensorF x = s.x;
        n.apply_x(x);
        TensorF y = s.y;
        n.apply_y(y);
        out.x.push_back(std::move(x));
        out.y.push_back(std::move(y));
    }
    return out;
}

}  // namespace

double evaluate_loss(const FnoParams<float>& params, const std::vector<Sample>& samples,
                     const Normalizer& normalizer, std::uint32_t target_code) {
    return eval_pass(params, samples, normalizer, target_code).phys;
}

std::pair<Checkpoint, TrainHistory> train(const Dataset& data, const FnoArch& arch,
                                          const TrainConfig& cfg, std::uint64_t init_seed) {
    cfg.validate();
    arch.validate();
    if (data.train.empty()) throw ContractError("train: training split is empty");
    const std::vector<std::size_t>& shape = data.train.front().x.shape;
    if (arch.in_channels != shape[0])
        throw ConfigError("train: arch.in_channels must match the feature channels");
    if (arch.out_channels != 1) throw ConfigError("train: arch.out_channels must be 1");
    const std::size_t nx = shape[1], nz = shape[2], npix = nx * nz;
    for (const Sample& s : data.train)
        if (s.x.shape != shape)
            throw ContractError("train: training samples must share one grid shape");

    // Empty validation split: select on the training split instead.
    const std::vector<Sample>& val_samples = data.val.empty() ? data.train : data.val;

    const NormalizedSet tr = normalize_set(data.train, data.normalizer);
    const std::size_t n_train = tr.x.size();

    FnoParams<float> params = fno_init<float>(arch, init_seed);
    const std::vector<Tensor<float>*> ptrs = params.tensors();
    const std::vector<std::string> names = params.tensor_names();
    AdamState<float> adam = AdamState<float>::init(ptrs);

    std::mt19937_64 shuffle_rng(cfg.shuffle_seed);
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    TrainHistory hist;
    hist.config = cfg;
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    FnoParams<float> best_params = params;

    std::vector<FnoCache<float>> caches;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = n_train - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng() % (i + 1));
            std::swap(order[i], order[j]);
        }

        double sq_sum = 0.0;
        std::size_t pix_sum = 0;
        int batch_index = 0;
        for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
            ++batch_index;
            const std::size_t nb = std::min(cfg.batch_size, n_train - start);
            try {
                caches.assign(nb, FnoCache<float>{});
                TensorF y_all({nb, nx, nz});
                TensorF yhat_all({nb, nx, nz});
                for (std::size_t b = 0; b < nb; ++b) {
                    const std::size_t idx = order[start + b];
                    const TensorF yb = fno_forward(params, tr.x[idx], &caches[b]);
                    std::copy(yb.data.begin(), yb.data.end(), yhat_all.data.begin() + b * npix);
                    std::copy(tr.y[idx].data.begin(), tr.y[idx].data.end(),
                              y_all.data.begin() + b * npix);
                }
                auto [loss, grad_all] = rmse_loss(y_all, yhat_all);
                if (!std::isfinite(static_cast<double>(loss)))
                    throw NumericError("non-finite training loss");
                // The RMSE gradient keeps unit scale however small the
                // residual gets, which pins Adam at a learning-rate-sized
                // loss floor. Scaling it by the loss gives the
                // residual-proportional mean-squared-error direction, which
                // has the same minimizer but lets the steps contract.
                const float g_scale =
                    static_cast<float>(std::max(static_cast<double>(loss), 1e-12));
                for (auto& g : grad_all.data) g *= g_scale;

                FnoParams<float> grad_sum = fno_zeros<float>(arch);
                const std::vector<Tensor<float>*> sum_ptrs = grad_sum.tensors();
                TensorF gb({1, nx, nz});
                for (std::size_t b = 0; b < nb; ++b) {
                    std::copy(grad_all.data.begin() + b * npix,
                              grad_all.data.begin() + (b + 1) * npix, gb.data.begin());
                    FnoParams<float> g = fno_backward(params, caches[b], gb);
                    const std::vector<Tensor<float>*> g_ptrs = g.tensors();
                    for (std::size_t k = 0; k < sum_ptrs.size(); ++k)
                        for (std::size_t i = 0; i < sum_ptrs[k]->size(); ++i)
                            sum_ptrs[k]->data[i] += g_ptrs[k]->data[i];
                }
                adam_step(ptrs, {sum_ptrs.begin(), sum_ptrs.end()}, adam,
                          static_cast<float>(cfg.lr), names);
                sq_sum += static_cast<double>(loss) * loss * static_cast<double>(nb * npix);
                pix_sum += nb * npix;
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index) + ")");
            }
        }

        TrainEpoch row;
        row.epoch = epoch;
        row.train_loss = std::sqrt(sq_sum / static_cast<double>(pix_sum));
        const bool do_eval = epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs;
        if (do_eval) {
            const EvalResult er = eval_pass(params, val_samples, data.normalizer, data.target_code);
            row.val_rmse_norm = er.norm;
            row.val_rmse_phys = er.phys;
            if (er.phys < best) {
                best = er.phys;
                best_epoch = epoch;
                best_params = params;
            }
        } else {
            row.val_rmse_norm = std::numeric_limits<double>::quiet_NaN();
            row.val_rmse_phys = std::numeric_limits<double>::quiet_NaN();
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        hist.epochs.push_back(row);
    }
    hist.best_epoch = best_epoch;
    hist.best_val_rmse_phys = best;

    Checkpoint cp;
    cp.params = std::move(best_params);
    cp.meta.scenario_id = static_cast<std::uint32_t>(data.scenario.id);
    cp.meta.target_code = data.target_code;
    cp.meta.nx = static_cast<std::uint32_t>(nx);
    cp.meta.nz = static_cast<std::uint32_t>(nz);
    cp.meta.t_inj_months = data.t_inj_months;
    cp.meta.kv = data.normalizer.to_kv();
    cp.meta.kv["t_total_months"] = format_double(data.t_total_months);
    cp.meta.kv["train.batch_size"] = std::to_string(cfg.batch_size);
    cp.meta.kv["train.max_epochs"] = std::to_string(cfg.max_epochs);
    cp.meta.kv["train.lr"] = format_double(cfg.lr);
    cp.meta.kv["train.shuffle_seed"] = std::to_string(cfg.shuffle_seed);
    cp.meta.kv["train.init_seed"] = std::to_string(init_seed);
    cp.meta.kv["train.best_epoch"] = std::to_string(best_epoch);
    cp.meta.kv["train.best_val_rmse_phys"] = format_double(best);
    return {std::move(cp), std::move(hist)};
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open history file for writing: " + path);
    const auto cell = [](double v) {
        return std::isfinite(v) ? format_double(v) : std::string("NA");
    };
    f << "epoch,train_loss,val_rmse_norm,val_rmse_phys,seconds\n";
    for (const TrainEpoch& row : history.epochs)
        f << row.epoch << ',' << cell(row.train_loss) << ',' << cell(row.val_rmse_norm) << ','
          << cell(row.val_rmse_phys) << ',' << cell(row.seconds) << '\n';
    f.close();
    if (!f) throw ConfigError("failed writing history file: " + path);
}

}  // namespace gcsfno
