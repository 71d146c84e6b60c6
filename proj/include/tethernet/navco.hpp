#ifndef TETHERNET_NAVCO_HPP
#define TETHERNET_NAVCO_HPP

#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tethernet/autodiff.hpp"
#include "tethernet/catalog.hpp"
#include "tethernet/common.hpp"
#include "tethernet/graphspace.hpp"

namespace tethernet {

struct ModelConfig {
    int encoder_layers = 3;
    int hidden_dim = 128;
    int embed_dim = 64;
    int decoder_residual_blocks = 3;  // plus input and output layers = 5 total
    double dropout = 0.30;
    double lambda_cycle = 0.003;
    double huber_delta = 1.0;
    double learning_rate = 1e-3;
    int max_epochs = 300;
    int patience = 30;
    std::uint64_t seed = 1;
    int node_feature_dim = 7;
    int context_dim = ContinuousVector::kDim;
};

/// Context-conditioned message-passing encoder + residual MLP decoder
/// predicting signed pairwise objective differences. Antisymmetry is
/// structural: d_ij = g(h_i, h_j, X) - g(h_j, h_i, X).
struct EdgeFlowModel {
    ModelConfig config;
    double target_scale = 1.0;  // std of training edge differences
    std::uint64_t catalog_hash = 0;

    // Encoder: per layer, self and neighbor-mean transforms + bias.
    std::vector<MatX> w_self, w_neigh, b_enc;
    MatX w_proj, b_proj;
    // Decoder: input layer, residual blocks, output layer.
    MatX w_in, b_in;
    std::vector<MatX> w_res, b_res;
    MatX w_out, b_out;

    static EdgeFlowModel init(const ModelConfig& cfg, Rng& rng) {
        EdgeFlowModel m;
        m.config = cfg;
        const int in = cfg.node_feature_dim + cfg.context_dim;
        auto xavier = [&rng](int rows, int cols) {
            const double a = std::sqrt(6.0 / (rows + cols));
            MatX w(rows, cols);
            for (Eigen::Index i = 0; i < w.rows(); ++i)
                for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-a, a);
            return w;
        };
        int d = in;
        for (int l = 0; l < cfg.encoder_layers; ++l) {
            m.w_self.push_back(xavier(d, cfg.hidden_dim));
            m.w_neigh.push_back(xavier(d, cfg.hidden_dim));
            m.b_enc.push_back(MatX::Zero(1, cfg.hidden_dim));
            d = cfg.hidden_dim;
        }
        m.w_proj = xavier(cfg.hidden_dim, cfg.embed_dim);
        m.b_proj = MatX::Zero(1, cfg.embed_dim);
        const int pair_in = 2 * cfg.embed_dim + cfg.context_dim;
        m.w_in = xavier(pair_in, cfg.hidden_dim);
        m.b_in = MatX::Zero(1, cfg.hidden_dim);
        for (int l = 0; l < cfg.decoder_residual_blocks; ++l) {
            m.w_res.push_back(xavier(cfg.hidden_dim, cfg.hidden_dim));
            m.b_res.push_back(MatX::Zero(1, cfg.hidden_dim));
        }
        m.w_out = xavier(cfg.hidden_dim, 1);
        m.b_out = MatX::Zero(1, 1);
        return m;
    }

    std::vector<MatX*> parameters() {
        std::vector<MatX*> p;
        for (auto& w : w_self) p.push_back(&w);
        for (auto& w : w_neigh) p.push_back(&w);
        for (auto& w : b_enc) p.push_back(&w);
        p.push_back(&w_proj);
        p.push_back(&b_proj);
        p.push_back(&w_in);
        p.push_back(&b_in);
        for (auto& w : w_res) p.push_back(&w);
        for (auto& w : b_res) p.push_back(&w);
        p.push_back(&w_out);
        p.push_back(&b_out);
        return p;
    }

    bool finite() {
        for (auto* p : parameters())
            if (!p->allFinite()) return false;
        return true;
    }
};

struct Prediction {
    MatX edge_matrix;  // d_hat, antisymmetric with zero diagonal
    VecX scores;       // recovered node scores (row means)
};

/// Least-squares potential recovery on a complete graph: row mean of the
/// antisymmetric difference matrix.
inline VecX recover_scores(const MatX& edge_matrix) {
    if (edge_matrix.rows() != edge_matrix.cols())
        throw ConfigError("recover_scores: matrix must be square");
    return edge_matrix.rowwise().mean();
}

/// Fraction of unordered edges whose predicted difference has the true sign;
/// zero-valued truth counts as correct iff the prediction is ~0.
inline double sign_accuracy(const MatX& prediction, const MatX& truth) {
    if (prediction.rows() != truth.rows() || prediction.cols() != truth.cols())
        throw ConfigError("sign_accuracy: shape mismatch");
    const Eigen::Index n = prediction.rows();
    long correct = 0, total = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            ++total;
            if (truth(i, j) == 0.0) {
                if (std::abs(prediction(i, j)) < 1e-9) ++correct;
            } else if ((prediction(i, j) > 0) == (truth(i, j) > 0) && prediction(i, j) != 0.0) {
                ++correct;
            }
        }
    return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 1.0;
}

namespace navco_detail {

struct ForwardIds {
    int dhat = -1;  // column vector over ordered pairs i<j
    std::vector<std::pair<int, int>> pairs;
};

/// Shared forward graph; with `training` true, dropout masks are sampled.
inline ForwardIds forward_on_tape(Tape& tape, EdgeFlowModel& model, const MatX& features,
                                  const VecX& context, bool training, Rng* rng) {
    const auto n = features.rows();
    const auto& cfg = model.config;

    // Node inputs: [feature | context].
    MatX ctx_rows = context.transpose().replicate(n, 1);
    MatX input(n, features.cols() + context.size());
    input << features, ctx_rows;

    auto dropout_mask = [&](Eigen::Index rows, Eigen::Index cols) {
        MatX m = MatX::Constant(rows, cols, 1.0);
        if (training && cfg.dropout > 0.0 && rng) {
            const double keep = 1.0 - cfg.dropout;
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index j = 0; j < cols; ++j)
                    m(i, j) = rng->uniform() < keep ? 1.0 / keep : 0.0;
        }
        return m;
    };

    int h = tape.constant(input);
    // Neighbor mean over the complete subgraph (excluding self).
    MatX agg = (MatX::Constant(n, n, 1.0) - MatX::Identity(n, n)) /
               std::max<double>(1.0, static_cast<double>(n - 1));
    const int agg_id = tape.constant(agg);
    // Parameters are registered on the tape in exactly the order returned by
    // EdgeFlowModel::parameters(), so gradient collection is a contiguous
    // id range starting right after the two constants above.
    std::vector<int> p_self, p_neigh, p_b;
    for (auto& w : model.w_self) p_self.push_back(tape.param(w));
    for (auto& w : model.w_neigh) p_neigh.push_back(tape.param(w));
    for (auto& w : model.b_enc) p_b.push_back(tape.param(w));
    const int p_proj = tape.param(model.w_proj);
    const int p_bproj = tape.param(model.b_proj);
    const int p_in = tape.param(model.w_in);
    const int p_bin = tape.param(model.b_in);
    std::vector<int> p_res, p_bres;
    for (auto& w : model.w_res) p_res.push_back(tape.param(w));
    for (auto& w : model.b_res) p_bres.push_back(tape.param(w));
    const int p_out = tape.param(model.w_out);
    const int p_bout = tape.param(model.b_out);

    for (int l = 0; l < cfg.encoder_layers; ++l) {
        const int self_t = tape.matmul(h, p_self[static_cast<std::size_t>(l)]);
        const int neigh = tape.matmul(tape.matmul(agg_id, h), p_neigh[static_cast<std::size_t>(l)]);
        int z = tape.add_bias(tape.add(self_t, neigh), p_b[static_cast<std::size_t>(l)]);
        z = tape.tanh_op(z);
        if (training && cfg.dropout > 0.0)
            z = tape.mask(z, dropout_mask(n, cfg.hidden_dim));
        h = z;
    }
    const int embed = tape.add_bias(tape.matmul(h, p_proj), p_bproj);

    // Ordered pairs i<j; the reverse direction shares the same decoder pass.
    ForwardIds out;
    std::vector<int> idx_fwd_i, idx_fwd_j;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            out.pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
            idx_fwd_i.push_back(static_cast<int>(i));
            idx_fwd_j.push_back(static_cast<int>(j));
        }
    const auto m_pairs = static_cast<Eigen::Index>(out.pairs.size());
    const int ctx_pair = tape.constant(context.transpose().replicate(m_pairs, 1));

    auto decode = [&](const std::vector<int>& ii, const std::vector<int>& jj) {
        const int zi = tape.gather_rows(embed, ii);
        const int zj = tape.gather_rows(embed, jj);
        int x = tape.concat_cols(tape.concat_cols(zi, zj), ctx_pair);
        x = tape.tanh_op(tape.add_bias(tape.matmul(x, p_in), p_bin));
        if (training && cfg.dropout > 0.0) x = tape.mask(x, dropout_mask(m_pairs, cfg.hidden_dim));
        for (int l = 0; l < cfg.decoder_residual_blocks; ++l) {
            int r = tape.tanh_op(tape.add_bias(tape.matmul(x, p_res[static_cast<std::size_t>(l)]),
                                               p_bres[static_cast<std::size_t>(l)]));
            if (training && cfg.dropout > 0.0)
                r = tape.mask(r, dropout_mask(m_pairs, cfg.hidden_dim));
            x = tape.add(x, r);
        }
        return tape.add_bias(tape.matmul(x, p_out), p_bout);
    };

    // Dropout masks must agree between the two decoder directions, otherwise
    // the antisymmetric difference picks up mask noise: clone the rng state
    // before the forward direction and replay it for the reverse one.
    Rng rng_clone = rng ? *rng : Rng(0);
    const int g_fwd = decode(idx_fwd_i, idx_fwd_j);
    Rng* outer = rng;
    rng = &rng_clone;
    const int g_rev = decode(idx_fwd_j, idx_fwd_i);
    rng = outer;
    out.dhat = tape.sub(g_fwd, g_rev);
    return out;
}

inline MatX pairs_to_matrix(const VecX& dhat, const std::vector<std::pair<int, int>>& pairs,
                            Eigen::Index n) {
    MatX d = MatX::Zero(n, n);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        d(pairs[k].first, pairs[k].second) = dhat[static_cast<Eigen::Index>(k)];
        d(pairs[k].second, pairs[k].first) = -dhat[static_cast<Eigen::Index>(k)];
    }
    return d;
}

}  // namespace navco_detail

/// Inference forward pass (dropout off, deterministic).
inline Prediction forward(EdgeFlowModel& model, const MatX& features, const VecX& context) {
    Tape tape;
    auto ids = navco_detail::forward_on_tape(tape, model, features, context, false, nullptr);
    Prediction pred;
    pred.edge_matrix = navco_detail::pairs_to_matrix(tape.value(ids.dhat).col(0) * model.target_scale,
                                                     ids.pairs, features.rows());
    pred.scores = recover_scores(pred.edge_matrix);
    return pred;
}

struct LossBreakdown {
    double total = 0.0;
    double edge = 0.0;
    double cycle = 0.0;
};

/// Edge Huber loss + lambda * mean squared triangle circulation, evaluated on
/// a ground-truth edge matrix (in model target units).
inline LossBreakdown compute_loss(const MatX& prediction, const MatX& truth, double huber_delta,
                                  double lambda_cycle) {
    if (prediction.rows() != truth.rows()) throw ConfigError("compute_loss: shape mismatch");
    const Eigen::Index n = prediction.rows();
    LossBreakdown out;
    long m = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double x = prediction(i, j) - truth(i, j);
            const double ax = std::abs(x);
            out.edge += ax <= huber_delta ? 0.5 * x * x : huber_delta * (ax - 0.5 * huber_delta);
            ++m;
        }
    if (m > 0) out.edge /= static_cast<double>(m);
    long t = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            for (Eigen::Index k = j + 1; k < n; ++k) {
                const double c = prediction(i, j) + prediction(j, k) + prediction(k, i);
                out.cycle += c * c;
                ++t;
            }
    if (t > 0) out.cycle /= static_cast<double>(t);
    out.total = out.edge + lambda_cycle * out.cycle;
    return out;
}

/// Greedy selection: forward, recover scores, argmin (ties -> lowest node id).
inline int recommend(EdgeFlowModel& model, const Catalog& catalog, const std::vector<int>& node_ids,
                     const ContinuousVector& context) {
    if (node_ids.empty()) throw ConfigError("recommend: empty subgraph");
    if (node_ids.size() == 1) return node_ids.front();
    MatX features(static_cast<Eigen::Index>(node_ids.size()), 7);
    for (std::size_t i = 0; i < node_ids.size(); ++i) {
        const auto f = catalog.normalize_comb(catalog.node(node_ids[i]));
        for (int j = 0; j < 7; ++j) features(static_cast<Eigen::Index>(i), j) = f[j];
    }
    const auto u = catalog.normalize_cont(context);
    VecX ctx(ContinuousVector::kDim);
    for (int j = 0; j < ContinuousVector::kDim; ++j) ctx[j] = u[j];
    const Prediction pred = forward(model, features, ctx);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < pred.scores.size(); ++i) {
        if (pred.scores[i] < pred.scores[best] ||
            (pred.scores[i] == pred.scores[best] &&
             node_ids[static_cast<std::size_t>(i)] < node_ids[static_cast<std::size_t>(best)]))
            best = i;
    }
    return node_ids[static_cast<std::size_t>(best)];
}

struct EpochStats {
    int epoch = 0;
    double train_edge = 0.0;
    double val_edge = 0.0;
    double cycle = 0.0;
    double sign_acc = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_edge = std::numeric_limits<double>::infinity();
    bool aborted_nan = false;
};

struct TrainingSample {
    MatX features;  // n_sn x 7, normalized
    VecX context;   // normalized
    MatX truth;     // edge differences in target units (scaled)
};

namespace navco_detail {

inline std::vector<TrainingSample> to_samples(const Catalog& catalog,
                                              const std::vector<DatasetRecord>& records,
                                              double target_scale) {
    std::vector<TrainingSample> out;
    for (const auto& rec : records) {
        if (!rec.valid) continue;
        TrainingSample s;
        const auto n = static_cast<Eigen::Index>(rec.node_ids.size());
        s.features.resize(n, 7);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto f = catalog.normalize_comb(catalog.node(rec.node_ids[static_cast<std::size_t>(i)]));
            for (int j = 0; j < 7; ++j) s.features(i, j) = f[j];
        }
        s.context.resize(ContinuousVector::kDim);
        for (int j = 0; j < ContinuousVector::kDim; ++j) s.context[j] = rec.normalized_context[j];
        s.truth.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                s.truth(i, j) = (rec.f_values[static_cast<std::size_t>(i)] -
                                 rec.f_values[static_cast<std::size_t>(j)]) /
                                target_scale;
        out.push_back(std::move(s));
    }
    return out;
}

class Adam {
public:
    Adam(std::vector<MatX*> params, double lr) : params_(std::move(params)), lr_(lr) {
        for (auto* p : params_) {
            m_.emplace_back(MatX::Zero(p->rows(), p->cols()));
            v_.emplace_back(MatX::Zero(p->rows(), p->cols()));
        }
    }

    void step(const std::vector<MatX>& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
            v_[i] = (beta2_ * v_[i].array() + (1.0 - beta2_) * grads[i].array().square()).matrix();
            params_[i]->array() -=
                lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
        }
    }

private:
    std::vector<MatX*> params_;
    std::vector<MatX> m_, v_;
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
};

/// One training step on a sample; returns the loss parts (in target units).
inline LossBreakdown loss_and_grads(EdgeFlowModel& model, const TrainingSample& sample,
                                    bool training, Rng* rng, std::vector<MatX>* grads_out) {
    Tape tape;
    auto ids = forward_on_tape(tape, model, sample.features, sample.context, training, rng);
    const auto& pairs = ids.pairs;
    const auto m_pairs = static_cast<Eigen::Index>(pairs.size());

    MatX target(m_pairs, 1);
    for (Eigen::Index k = 0; k < m_pairs; ++k)
        target(k, 0) = sample.truth(pairs[static_cast<std::size_t>(k)].first,
                                    pairs[static_cast<std::size_t>(k)].second);
    const int edge_loss = tape.huber_mean(ids.dhat, target, model.config.huber_delta);

    // Triangle circulation c = d_ij + d_jk - d_ik over pair-vector gathers.
    const Eigen::Index n = sample.features.rows();
    std::vector<std::vector<int>> pair_index(static_cast<std::size_t>(n),
                                             std::vector<int>(static_cast<std::size_t>(n), -1));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        pair_index[static_cast<std::size_t>(pairs[k].first)][static_cast<std::size_t>(pairs[k].second)] =
            static_cast<int>(k);
    }
    std::vector<int> tij, tjk, tik;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                tij.push_back(pair_index[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
                tjk.push_back(pair_index[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]);
                tik.push_back(pair_index[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
            }
    int total;
    LossBreakdown parts;
    if (!tij.empty() && model.config.lambda_cycle != 0.0) {
        const int circ = tape.sub(
            tape.add(tape.gather_rows(ids.dhat, tij), tape.gather_rows(ids.dhat, tjk)),
            tape.gather_rows(ids.dhat, tik));
        const int cycle_loss = tape.mean_square(circ);
        total = tape.add(edge_loss, tape.scale(cycle_loss, model.config.lambda_cycle));
        parts.cycle = tape.value(cycle_loss)(0, 0);
    } else if (!tij.empty()) {
        const int circ = tape.sub(
            tape.add(tape.gather_rows(ids.dhat, tij), tape.gather_rows(ids.dhat, tjk)),
            tape.gather_rows(ids.dhat, tik));
        parts.cycle = (tape.value(circ).array().square().sum()) /
                      static_cast<double>(tape.value(circ).size());
        total = edge_loss;
    } else {
        total = edge_loss;
    }
    parts.edge = tape.value(edge_loss)(0, 0);
    parts.total = tape.value(total)(0, 0);

    if (grads_out) {
        tape.backward(total);
        grads_out->clear();
        // Parameters occupy the contiguous id range right after the two
        // constants, in EdgeFlowModel::parameters() order.
        const auto n_params = model.parameters().size();
        for (std::size_t k = 0; k < n_params; ++k)
            grads_out->push_back(tape.grad(2 + static_cast<int>(k)));
    }
    return parts;
}

}  // namespace navco_detail

/// Mini-batch (one subgraph per step) Adam training; the checkpoint is the
/// parameter set at minimum validation edge loss.
inline std::pair<EdgeFlowModel, TrainReport> train(const Catalog& catalog,
                                                   const std::vector<DatasetRecord>& train_records,
                                                   const std::vector<DatasetRecord>& val_records,
                                                   const ModelConfig& config,
                                                   std::function<void(const EpochStats&)> on_epoch =
                                                       nullptr) {
    if (train_records.empty() || val_records.empty())
        throw ConfigError("train: need non-empty train and validation partitions");
    Rng rng(config.seed);

    // Target scale: std of ground-truth edge differences over the train split.
    double sumsq = 0.0;
    long count = 0;
    for (const auto& rec : train_records) {
        if (!rec.valid) continue;
        for (std::size_t i = 0; i < rec.f_values.size(); ++i)
            for (std::size_t j = 0; j < rec.f_values.size(); ++j) {
                if (i == j) continue;
                const double d = rec.f_values[i] - rec.f_values[j];
                sumsq += d * d;
                ++count;
            }
    }
    const double target_scale = count > 0 ? std::max(1e-12, std::sqrt(sumsq / count)) : 1.0;

    EdgeFlowModel model = EdgeFlowModel::init(config, rng);
    model.target_scale = target_scale;
    model.catalog_hash = catalog.hash();

    auto train_samples = navco_detail::to_samples(catalog, train_records, target_scale);
    auto val_samples = navco_detail::to_samples(catalog, val_records, target_scale);
    if (train_samples.empty() || val_samples.empty())
        throw ConfigError("train: all records invalid");

    navco_detail::Adam opt(model.parameters(), config.learning_rate);
    TrainReport report;
    EdgeFlowModel best = model;
    int since_best = 0;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::vector<std::size_t> order(train_samples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);

        double train_edge = 0.0, train_cycle = 0.0;
        bool nan_hit = false;
        for (std::size_t idx : order) {
            std::vector<MatX> grads;
            const auto parts =
                navco_detail::loss_and_grads(model, train_samples[idx], true, &rng, &grads);
            if (!std::isfinite(parts.total)) {
                nan_hit = true;
                break;
            }
            opt.step(grads);
            train_edge += parts.edge;
            train_cycle += parts.cycle;
        }
        if (nan_hit || !model.finite()) {
            report.aborted_nan = true;
            break;
        }
        train_edge /= static_cast<double>(train_samples.size());
        train_cycle /= static_cast<double>(train_samples.size());

        double val_edge = 0.0, val_sign = 0.0;
        for (const auto& s : val_samples) {
            Tape tape;
            auto ids = navco_detail::forward_on_tape(tape, model, s.features, s.context, false, nullptr);
            const MatX pred =
                navco_detail::pairs_to_matrix(tape.value(ids.dhat).col(0), ids.pairs, s.features.rows());
            const auto parts = compute_loss(pred, s.truth, config.huber_delta, config.lambda_cycle);
            val_edge += parts.edge;
            val_sign += sign_accuracy(pred, s.truth);
        }
        val_edge /= static_cast<double>(val_samples.size());
        val_sign /= static_cast<double>(val_samples.size());

        EpochStats stats{epoch, train_edge, val_edge, train_cycle, val_sign};
        report.epochs.push_back(stats);
        if (on_epoch) on_epoch(stats);

        if (val_edge < report.best_val_edge) {
            report.best_val_edge = val_edge;
            report.best_epoch = epoch;
            best = model;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    return {best, report};
}

// --- checkpoint persistence ---

namespace navco_detail {

inline nlohmann::json mat_to_json(const MatX& m) {
    std::vector<double> data(static_cast<std::size_t>(m.size()));
    Eigen::Map<MatX>(data.data(), m.rows(), m.cols()) = m;
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline MatX mat_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw ConfigError("checkpoint: tensor shape mismatch");
    return Eigen::Map<const MatX>(data.data(), rows, cols);
}

}  // namespace navco_detail

inline void save_checkpoint(EdgeFlowModel& model, const std::string& path) {
    nlohmann::json j;
    j["format"] = "tethernet-checkpoint";
    j["version"] = 1;
    j["catalog_hash"] = hash_hex(model.catalog_hash);
    j["target_scale"] = model.target_scale;
    j["config"] = {{"encoder_layers", model.config.encoder_layers},
                   {"hidden_dim", model.config.hidden_dim},
                   {"embed_dim", model.config.embed_dim},
                   {"decoder_residual_blocks", model.config.decoder_residual_blocks},
                   {"dropout", model.config.dropout},
                   {"lambda_cycle", model.config.lambda_cycle},
                   {"huber_delta", model.config.huber_delta},
                   {"learning_rate", model.config.learning_rate},
                   {"max_epochs", model.config.max_epochs},
                   {"patience", model.config.patience},
                   {"seed", model.config.seed},
                   {"node_feature_dim", model.config.node_feature_dim},
                   {"context_dim", model.config.context_dim}};
    auto params = model.parameters();
    nlohmann::json tensors = nlohmann::json::array();
    for (auto* p : params) tensors.push_back(navco_detail::mat_to_json(*p));
    j["tensors"] = std::move(tensors);
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write checkpoint: " + path);
    os << j.dump();
}

inline EdgeFlowModel load_checkpoint(const std::string& path,
                                     std::optional<std::uint64_t> expect_catalog_hash = std::nullopt) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open checkpoint: " + path);
    nlohmann::json j;
    is >> j;
    if (j.value("format", "") != "tethernet-checkpoint")
        throw ConfigError("not a checkpoint file: " + path);
    ModelConfig cfg;
    const auto& c = j.at("config");
    cfg.encoder_layers = c.at("encoder_layers").get<int>();
    cfg.hidden_dim = c.at("hidden_dim").get<int>();
    cfg.embed_dim = c.at("embed_dim").get<int>();
    cfg.decoder_residual_blocks = c.at("decoder_residual_blocks").get<int>();
    cfg.dropout = c.at("dropout").get<double>();
    cfg.lambda_cycle = c.at("lambda_cycle").get<double>();
    cfg.huber_delta = c.at("huber_delta").get<double>();
    cfg.learning_rate = c.at("learning_rate").get<double>();
    cfg.max_epochs = c.at("max_epochs").get<int>();
    cfg.patience = c.at("patience").get<int>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.node_feature_dim = c.at("node_feature_dim").get<int>();
    cfg.context_dim = c.at("context_dim").get<int>();
    Rng rng(cfg.seed);
    EdgeFlowModel model = EdgeFlowModel::init(cfg, rng);
    model.target_scale = j.at("target_scale").get<double>();
    model.catalog_hash = std::stoull(j.at("catalog_hash").get<std::string>(), nullptr, 16);
    if (expect_catalog_hash && *expect_catalog_hash != model.catalog_hash)
        throw ConfigError("checkpoint catalog hash mismatch: file " + hash_hex(model.catalog_hash) +
                          " vs current " + hash_hex(*expect_catalog_hash));
    auto params = model.parameters();
    const auto& tensors = j.at("tensors");
    if (tensors.size() != params.size()) throw ConfigError("checkpoint: tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i)
        *params[i] = navco_detail::mat_from_json(tensors[i]);
    return model;
}

}  // namespace tethernet

#endif  // TETHERNET_NAVCO_HPP
