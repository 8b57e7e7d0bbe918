#include "merdg/train.hpp"

#include <algorithm>
#include <map>

#include "merdg/diagnostics.hpp"

namespace merdg {

namespace {

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), src.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy(src.row(idx[i]), src.row(idx[i]) + src.cols(), out.row(i));
    }
    return out;
}

struct Split {
    std::vector<Matrix> train_inputs, val_inputs;
    std::vector<int> train_labels, val_labels;
};

// Seeded per-domain split: the last val_fraction of a shuffled index list goes
// to validation, pooled across source domains in domain order.
Split split_sources(const std::vector<DomainData>& sources, double val_fraction, SeededRng& rng) {
    const std::size_t m_count = sources[0].modalities.size();
    std::vector<std::vector<std::size_t>> train_ids(sources.size()), val_ids(sources.size());
    for (std::size_t s = 0; s < sources.size(); ++s) {
        const std::size_t n = sources[s].labels.size();
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        shuffle(idx, rng);
        const auto n_val = static_cast<std::size_t>(static_cast<double>(n) * val_fraction);
        train_ids[s].assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(n_val));
        val_ids[s].assign(idx.end() - static_cast<std::ptrdiff_t>(n_val), idx.end());
    }

    Split out;
    for (std::size_t m = 0; m < m_count; ++m) {
        std::size_t train_total = 0, val_total = 0;
        for (std::size_t s = 0; s < sources.size(); ++s) {
            train_total += train_ids[s].size();
            val_total += val_ids[s].size();
        }
        Matrix train_m(train_total, sources[0].modalities[m].cols());
        Matrix val_m(val_total, sources[0].modalities[m].cols());
        std::size_t ta = 0, va = 0;
        for (std::size_t s = 0; s < sources.size(); ++s) {
            const Matrix& src = sources[s].modalities[m];
            for (std::size_t i : train_ids[s]) {
                std::copy(src.row(i), src.row(i) + src.cols(), train_m.row(ta++));
            }
            for (std::size_t i : val_ids[s]) {
                std::copy(src.row(i), src.row(i) + src.cols(), val_m.row(va++));
            }
        }
        out.train_inputs.push_back(std::move(train_m));
        out.val_inputs.push_back(std::move(val_m));
    }
    for (std::size_t s = 0; s < sources.size(); ++s) {
        for (std::size_t i : train_ids[s]) out.train_labels.push_back(sources[s].labels[i]);
        for (std::size_t i : val_ids[s]) out.val_labels.push_back(sources[s].labels[i]);
    }
    return out;
}

std::vector<Matrix> gather_batch(const std::vector<Matrix>& inputs,
                                 const std::vector<std::size_t>& idx) {
    std::vector<Matrix> out;
    out.reserve(inputs.size());
    for (const Matrix& m : inputs) out.push_back(gather_rows(m, idx));
    return out;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ContractError("TrainConfig: learning_rate must be > 0");
    if (batch_size < 2) throw ContractError("TrainConfig: batch_size must be >= 2");
    if (epochs == 0) throw ContractError("TrainConfig: epochs must be >= 1");
    if (val_fraction <= 0.0 || val_fraction >= 1.0) {
        throw ContractError("TrainConfig: val_fraction must lie in (0, 1)");
    }
    if (mer) mer->validate();
    if (baseline_param < 0.0) throw ContractError("TrainConfig: baseline_param must be >= 0");
}

PooledData pool_domains(const std::vector<DomainData>& domains) {
    if (domains.empty()) throw ContractError("pool_domains: no domains");
    PooledData out;
    const std::size_t m_count = domains[0].modalities.size();
    for (std::size_t m = 0; m < m_count; ++m) {
        std::size_t total = 0;
        for (const DomainData& d : domains) total += d.labels.size();
        Matrix pooled(total, domains[0].modalities[m].cols());
        std::size_t at = 0;
        for (const DomainData& d : domains) {
            const Matrix& src = d.modalities[m];
            for (std::size_t i = 0; i < src.rows(); ++i) {
                std::copy(src.row(i), src.row(i) + src.cols(), pooled.row(at++));
            }
        }
        out.inputs.push_back(std::move(pooled));
    }
    for (const DomainData& d : domains) {
        out.labels.insert(out.labels.end(), d.labels.begin(), d.labels.end());
    }
    return out;
}

TrainOutput train(FusionModel model, const DatasetBundle& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.sources.empty()) throw ContractError("train: dataset has no source domains");
    for (const DomainData& d : data.sources) {
        if (d.labels.empty()) throw ContractError("train: empty source domain " + d.name);
    }

    SeededRng split_rng(derive_seed(cfg.seed, 1));
    SeededRng shuffle_rng(derive_seed(cfg.seed, 2));
    SeededRng reg_rng(derive_seed(cfg.seed, 3));

    Split split = split_sources(data.sources, cfg.val_fraction, split_rng);
    const std::size_t n_train = split.train_labels.size();
    if (n_train < 2) throw ContractError("train: too few training samples after the split");

    RegSettings reg;
    reg.mer = cfg.mer;
    reg.baseline = cfg.baseline;
    reg.baseline_param = cfg.baseline_param;

    const RegSettings eval_reg = reg;  // evaluation never draws dropout/noise
    const RegDraw no_draw;

    AdamState adam = make_adam_state(model);
    TrainOutput out;
    out.best_val_acc = -1.0;

    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Metrics describe the model entering this epoch; row 0 is the
        // untrained initialization, so regularizer columns there do not depend
        // on lambda.
        EpochRow row;
        row.epoch = epoch;
        LossBreakdown eval =
            loss_and_grads(model, split.train_inputs, split.train_labels, eval_reg, no_draw, nullptr);
        row.total = eval.total;
        row.ce = eval.ce;
        row.mer_marg = eval.mer_marg_sum;
        row.mer_spec = eval.mer_spec_sum;
        row.src_val_acc = accuracy(model, split.val_inputs, split.val_labels);
        row.tgt_acc = accuracy(model, data.target.modalities, data.target.labels);
        out.table.push_back(row);

        // Ties go to the later epoch: with a saturating validation split the
        // checkpoint then reflects the fully trained regime.
        if (row.src_val_acc >= out.best_val_acc) {
            out.best_val_acc = row.src_val_acc;
            out.best_epoch = epoch;
            out.best_model = model;
        }

        shuffle(order, shuffle_rng);
        for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
            const std::size_t end = std::min(n_train, start + cfg.batch_size);
            if (end - start < 2) break;  // a one-row tail cannot carry batch statistics
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
            std::vector<Matrix> batch = gather_batch(split.train_inputs, idx);
            std::vector<int> labels(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = split.train_labels[idx[i]];

            std::vector<std::size_t> rows_by_modality(model.num_modalities(), idx.size());
            RegDraw draw = draw_reg_noise(reg, rows_by_modality,
                                          model.encoders[0].output_dim(), reg_rng);
            ModelGrads grads = zero_grads(model);
            loss_and_grads(model, batch, labels, reg, draw, &grads);
            adam_step(model, grads, adam, cfg.learning_rate);
        }
    }

    out.final_model = std::move(model);
    if (out.best_val_acc < 0.0) {
        out.best_model = out.final_model;
    }
    return out;
}

StandaloneProbeResult standalone_probe(const Matrix& src_features,
                                       const std::vector<int>& src_labels,
                                       const Matrix& tgt_features,
                                       const std::vector<int>& tgt_labels,
                                       std::size_t num_classes, SeededRng& rng, int epochs,
                                       double lr) {
    if (src_features.rows() != src_labels.size() || tgt_features.rows() != tgt_labels.size()) {
        throw ContractError("standalone_probe: label count mismatch");
    }
    // Class-stratified 80/20 split of the source rows.
    std::map<int, std::vector<std::size_t>> per_class;
    for (std::size_t i = 0; i < src_labels.size(); ++i) per_class[src_labels[i]].push_back(i);
    std::vector<std::size_t> train_idx, hold_idx;
    for (auto& [cls, idx] : per_class) {
        if (idx.size() < 2) {
            throw ContractError("standalone_probe: class " + std::to_string(cls) +
                                " has fewer than 2 source samples");
        }
        shuffle(idx, rng);
        const std::size_t n_train = (idx.size() * 4) / 5;
        train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + n_train);
        hold_idx.insert(hold_idx.end(), idx.begin() + n_train, idx.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(hold_idx.begin(), hold_idx.end());

    Matrix x_train = gather_rows(src_features, train_idx);
    std::vector<int> y_train;
    y_train.reserve(train_idx.size());
    for (std::size_t i : train_idx) y_train.push_back(src_labels[i]);
    Matrix x_hold = gather_rows(src_features, hold_idx);
    std::vector<int> y_hold;
    for (std::size_t i : hold_idx) y_hold.push_back(src_labels[i]);

    LinearProbe probe = fit_linear_probe(x_train, y_train, num_classes, epochs, lr);
    StandaloneProbeResult out;
    out.source_holdout_acc = probe_accuracy(probe, x_hold, y_hold);
    out.target_acc = probe_accuracy(probe, tgt_features, tgt_labels);
    return out;
}

}  // namespace merdg
