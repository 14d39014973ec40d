#include "tosmtl/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "tosmtl/adam.hpp"

namespace tosmtl {

void TrainConfig::validate() const {
    if (learning_rate < 0.0) throw ConfigError("train: learning rate must be >= 0");
    if (batch_size < 2) throw ConfigError("train: batch size must be >= 2 (train-mode batchnorm)");
    if (lambda_cls < 0.0) throw ConfigError("train: lambda_cls must be >= 0");
    if (l1_weight < 0.0) throw ConfigError("train: l1 weight must be >= 0");
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (val_fraction <= 0.0 || val_fraction >= 1.0) {
        throw ConfigError("train: validation fraction must be in (0,1)");
    }
}

TrainConfig TrainConfig::mtl_defaults() {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.lambda_cls = 10.0;
    c.l1_weight = 0.1;
    return c;
}

TrainConfig TrainConfig::regression_defaults() {
    TrainConfig c;
    c.learning_rate = 1e-2;
    c.lambda_cls = 0.0;
    c.l1_weight = 0.5;
    return c;
}

void TrainHistory::save_csv(const std::string& path, const std::string& comment) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    if (!comment.empty()) out << "# " << comment << "\n";
    out << "epoch,train_total,train_reg,train_cls,train_l1,val_total\n";
    char buf[256];
    for (std::size_t e = 0; e < epochs.size(); ++e) {
        const Epoch& ep = epochs[e];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", e + 1,
                      ep.train_total, ep.train_reg, ep.train_cls, ep.train_l1, ep.val_total);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

nn::Tensor tos_targets(const std::vector<const TrainSample*>& batch) {
    const std::size_t B = batch.size(), S = batch[0]->tos.n_sectors();
    nn::Tensor t({B, S});
    for (std::size_t b = 0; b < B; ++b) {
        std::copy(batch[b]->tos.tos_ms.begin(), batch[b]->tos.tos_ms.end(),
                  t.data.begin() + static_cast<std::ptrdiff_t>(b * S));
    }
    return t;
}

nn::Tensor label_targets(const std::vector<const TrainSample*>& batch) {
    const std::size_t B = batch.size(), S = batch[0]->labels.n_sectors();
    nn::Tensor t({B, S, 2});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t s = 0; s < S; ++s) {
            t.data[(b * S + s) * 2] = batch[b]->labels.probs[s][0];
            t.data[(b * S + s) * 2 + 1] = batch[b]->labels.probs[s][1];
        }
    }
    return t;
}

namespace {

LossComponents evaluate(MtlModel& model, const std::vector<TrainSample>& set,
                        const TrainConfig& cfg) {
    LossComponents total;
    std::size_t count = 0;
    for (std::size_t begin = 0; begin < set.size(); begin += cfg.batch_size) {
        const std::size_t end = std::min(begin + cfg.batch_size, set.size());
        std::vector<const StrainMatrix*> mats;
        std::vector<const TrainSample*> samples;
        for (std::size_t i = begin; i < end; ++i) {
            mats.push_back(&set[i].strain);
            samples.push_back(&set[i]);
        }
        auto out = model.forward(MtlModel::batch_input(mats), nn::Mode::eval);
        const auto c = model.loss(out, tos_targets(samples), label_targets(samples),
                                  cfg.lambda_cls, cfg.l1_weight);
        const double w = static_cast<double>(end - begin);
        total.total += c.total * w;
        total.regression += c.regression * w;
        total.classification += c.classification * w;
        total.l1 = c.l1;  // batch-independent
        count += end - begin;
    }
    const double n = static_cast<double>(count);
    total.total /= n;
    total.regression /= n;
    total.classification /= n;
    return total;
}

}  // namespace

TrainHistory train(MtlModel& model, const std::vector<TrainSample>& train_set,
                   const std::vector<TrainSample>& val_set, const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.empty()) throw ConfigError("train: empty training set");
    if (val_set.empty()) throw ConfigError("train: empty validation set");

    {
        std::set<std::string> train_patients, val_patients;
        for (const auto& s : train_set) train_patients.insert(s.patient_id);
        for (const auto& s : val_set) val_patients.insert(s.patient_id);
        for (const auto& p : val_patients) {
            if (train_patients.count(p)) {
                throw ConfigError("train: patient " + p + " appears in both train and validation");
            }
        }
    }

    Rng rng(cfg.rng_seed);
    model.init(rng);
    nn::Adam optimizer(model.params(), {cfg.learning_rate, 0.9, 0.999, 1e-8});

    TrainHistory history;
    double best_val = std::numeric_limits<double>::infinity();
    MtlModel::Snapshot best_snapshot = model.snapshot();

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);

        double ep_total = 0.0, ep_reg = 0.0, ep_cls = 0.0, ep_l1 = 0.0;
        std::size_t seen = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(begin + cfg.batch_size, order.size());
            if (end - begin < 2) break;  // train-mode batchnorm needs >= 2 rows

            std::vector<const StrainMatrix*> mats;
            std::vector<const TrainSample*> samples;
            for (std::size_t i = begin; i < end; ++i) {
                mats.push_back(&train_set[order[i]].strain);
                samples.push_back(&train_set[order[i]]);
            }
            const auto tos_gt = tos_targets(samples);
            const auto labels_gt = label_targets(samples);

            LossComponents c;
            try {
                auto out = model.forward(MtlModel::batch_input(mats), nn::Mode::train);
                c = model.loss(out, tos_gt, labels_gt, cfg.lambda_cls, cfg.l1_weight);
                model.loss_backward(out, tos_gt, labels_gt, cfg.lambda_cls, cfg.l1_weight);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch + 1) + ": " + e.what());
            }
            optimizer.step();

            const double w = static_cast<double>(end - begin);
            ep_total += c.total * w;
            ep_reg += c.regression * w;
            ep_cls += c.classification * w;
            ep_l1 = c.l1;
            seen += end - begin;
        }
        if (seen == 0) throw ConfigError("train: no usable batches (batch size vs set size)");

        const auto val = evaluate(model, val_set, cfg);

        TrainHistory::Epoch ep;
        ep.train_total = ep_total / static_cast<double>(seen);
        ep.train_reg = ep_reg / static_cast<double>(seen);
        ep.train_cls = ep_cls / static_cast<double>(seen);
        ep.train_l1 = ep_l1;
        ep.val_total = val.total;
        history.epochs.push_back(ep);

        if (val.total < best_val) {
            best_val = val.total;
            history.best_epoch = epoch;
            best_snapshot = model.snapshot();
        } else if (epoch - history.best_epoch >= cfg.patience) {
            history.early_stopped = true;
            break;
        }
    }

    model.restore(best_snapshot);
    return history;
}

PatientSplit split_patients(const std::vector<std::string>& patients, std::size_t test_count,
                            double val_fraction, std::uint64_t seed) {
    if (test_count >= patients.size()) {
        throw ConfigError("split: test patient count must leave patients for training");
    }
    std::vector<std::string> sorted = patients;
    std::sort(sorted.begin(), sorted.end());

    PatientSplit split;
    split.test_patients.assign(sorted.end() - static_cast<std::ptrdiff_t>(test_count),
                               sorted.end());
    std::vector<std::string> rest(sorted.begin(),
                                  sorted.end() - static_cast<std::ptrdiff_t>(test_count));

    const auto val_count = static_cast<std::size_t>(
        std::ceil(val_fraction * static_cast<double>(rest.size())));
    if (val_count == 0 || val_count >= rest.size()) {
        throw ConfigError("split: validation fraction leaves no train or no validation patients");
    }
    Rng rng(derive_seed(seed, 0x51137));
    rng.shuffle(rest);
    split.val_patients.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(val_count));
    split.train_patients.assign(rest.begin() + static_cast<std::ptrdiff_t>(val_count), rest.end());
    std::sort(split.val_patients.begin(), split.val_patients.end());
    std::sort(split.train_patients.begin(), split.train_patients.end());
    return split;
}

std::vector<PhantomRecord> filter_by_patients(const std::vector<PhantomRecord>& records,
                                              const std::vector<std::string>& patients) {
    std::set<std::string> keep(patients.begin(), patients.end());
    std::vector<PhantomRecord> out;
    for (const auto& rec : records) {
        if (keep.count(rec.patient_id)) out.push_back(rec);
    }
    return out;
}

}  // namespace tosmtl
