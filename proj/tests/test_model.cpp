#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "test_util.hpp"
#include "tosmtl/checkpoint.hpp"
#include "tosmtl/dataset.hpp"
#include "tosmtl/gradcheck.hpp"
#include "tosmtl/model.hpp"
#include "tosmtl/phantom.hpp"
#include "tosmtl/train.hpp"

using namespace tosmtl;
using tosmtl::testutil::random_tensor;

namespace {

// Small full-architecture config; all layer kinds present, fast to probe.
ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.n_sectors = 8;
    cfg.n_frames = 12;
    cfg.channels = 4;
    cfg.fc_hidden = {16, 8};
    return cfg;
}

nn::Tensor random_batch(const ModelConfig& cfg, std::size_t B, Rng& rng) {
    return random_tensor({B, 1, cfg.n_sectors, cfg.n_frames}, rng, -0.2, 0.2);
}

nn::Tensor random_tos(const ModelConfig& cfg, std::size_t B, Rng& rng) {
    return random_tensor({B, cfg.n_sectors}, rng, 17.0, 340.0);
}

nn::Tensor random_hard_labels(const ModelConfig& cfg, std::size_t B, Rng& rng) {
    nn::Tensor t({B, cfg.n_sectors, 2});
    for (std::size_t i = 0; i < t.size(); i += 2) {
        const bool lma = rng.uniform01() < 0.3;
        t.data[i] = lma ? 0.0 : 1.0;
        t.data[i + 1] = lma ? 1.0 : 0.0;
    }
    return t;
}

}  // namespace

TEST_CASE("forward output shapes: (B, S) and (B, S, 2)") {
    ModelConfig cfg;  // default 18x48
    MtlModel model(cfg);
    Rng rng(1);
    model.init(rng);
    auto out = model.forward(random_batch(cfg, 3, rng), nn::Mode::eval);
    CHECK(out.tos.shape == std::vector<std::size_t>{3, 18});
    CHECK(out.logits.shape == std::vector<std::size_t>{3, 18, 2});
}

TEST_CASE("tos predictions exceed zero whenever pre-activations are above -t_min/alpha") {
    ModelConfig cfg = tiny_config();
    MtlModel model(cfg);
    Rng rng(2);
    model.init(rng);
    auto out = model.forward(random_batch(cfg, 4, rng), nn::Mode::eval);
    for (double v : out.tos.data) CHECK(v > 0.0);  // fresh nets sit far from -1700
}

TEST_CASE("identical rows in one eval batch give identical outputs") {
    ModelConfig cfg = tiny_config();
    MtlModel model(cfg);
    Rng rng(3);
    model.init(rng);
    nn::Tensor one = random_batch(cfg, 1, rng);
    nn::Tensor two({2, 1, cfg.n_sectors, cfg.n_frames});
    std::copy(one.data.begin(), one.data.end(), two.data.begin());
    std::copy(one.data.begin(), one.data.end(), two.data.begin() + static_cast<std::ptrdiff_t>(one.size()));
    auto out = model.forward(two, nn::Mode::eval);
    for (std::size_t s = 0; s < cfg.n_sectors; ++s) {
        CHECK(out.tos.data[s] == out.tos.data[cfg.n_sectors + s]);
    }
}

TEST_CASE("loss: exact regression and saturated logits give near-zero total") {
    ModelConfig cfg = tiny_config();
    MtlModel model(cfg);
    const std::size_t B = 2, S = cfg.n_sectors;
    MtlModel::Output out;
    out.tos = nn::Tensor({B, S}, 100.0);
    out.logits = nn::Tensor({B, S, 2});
    nn::Tensor labels({B, S, 2});
    for (std::size_t i = 0; i < B * S; ++i) {
        out.logits.data[2 * i] = 30.0;  // margin >= 30 on the true class
        out.logits.data[2 * i + 1] = -30.0;
        labels.data[2 * i] = 1.0;
        labels.data[2 * i + 1] = 0.0;
    }
    auto c = model.loss(out, nn::Tensor({B, S}, 100.0), labels, 10.0, 0.0);
    CHECK(c.regression == 0.0);
    CHECK(c.classification < 1e-12);
    CHECK(c.total < 1e-10);
}

TEST_CASE("loss: single sample with error vector (3,4,0,...) gives Euclidean norm 5") {
    ModelConfig cfg = tiny_config();
    MtlModel model(cfg);
    const std::size_t S = cfg.n_sectors;
    MtlModel::Output out;
    out.tos = nn::Tensor({1, S}, 0.0);
    out.tos.data[0] = 3.0;
    out.tos.data[1] = 4.0;
    out.logits = nn::Tensor({1, S, 2});
    nn::Tensor labels({1, S, 2});
    for (std::size_t s = 0; s < S; ++s) labels.data[2 * s] = 1.0;
    auto c = model.loss(out, nn::Tensor({1, S}, 0.0), labels, 0.0, 0.0);
    CHECK(c.total == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("loss: uniform logits with hard labels cost ln 2 per sector") {
    ModelConfig cfg = tiny_config();
    MtlModel model(cfg);
    const std::size_t S = cfg.n_sectors;
    MtlModel::Output out;
    out.tos = nn::Tensor({1, S}, 50.0);
    out.logits = nn::Tensor({1, S, 2}, 0.7);  // equal logits -> uniform softmax
    nn::Tensor labels({1, S, 2});
    for (std::size_t s = 0; s < S; ++s) labels.data[2 * s + 1] = 1.0;
    auto c = model.loss(out, nn::Tensor({1, S}, 50.0), labels, 1.0, 0.0);
    CHECK(c.total == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("full-network loss gradient matches finite differences (lambda 0 and 10)") {
    for (double lambda_cls : {0.0, 10.0}) {
        ModelConfig cfg = tiny_config();
        MtlModel model(cfg);
        Rng rng(29);
        model.init(rng);
        nn::Tensor input = random_batch(cfg, 4, rng);
        nn::Tensor tos_gt = random_tos(cfg, 4, rng);
        nn::Tensor labels_gt = random_hard_labels(cfg, 4, rng);
        const double r = 0.1;

        auto loss_fn = [&]() {
            auto out = model.forward(input, nn::Mode::train);
            return model.loss(out, tos_gt, labels_gt, lambda_cls, r).total;
        };
        auto backward_fn = [&]() {
            auto out = model.forward(input, nn::Mode::train);
            model.loss_backward(out, tos_gt, labels_gt, lambda_cls, r);
        };
        auto result = nn::gradient_check(model.params(), loss_fn, backward_fn);
        INFO("lambda_cls = " << lambda_cls << ", worst " << result.worst_param << " analytic "
                             << result.worst_analytic << " numeric " << result.worst_numeric);
        CHECK(result.max_rel_error < 1e-4);
    }
}

TEST_CASE("CE term non-negative; L1 regularizer zero iff weights all zero") {
    ModelConfig cfg = tiny_config();
    MtlModel model(cfg);
    Rng rng(31);
    model.init(rng);
    auto input = random_batch(cfg, 2, rng);
    auto out = model.forward(input, nn::Mode::eval);
    auto c = model.loss(out, random_tos(cfg, 2, rng), random_hard_labels(cfg, 2, rng), 1.0, 1.0);
    CHECK(c.classification >= 0.0);
    CHECK(c.l1 > 0.0);
    for (auto* p : model.params()) {
        if (p->is_weight) p->value.fill(0.0);
    }
    auto out2 = model.forward(input, nn::Mode::eval);
    auto c2 = model.loss(out2, random_tos(cfg, 2, rng), random_hard_labels(cfg, 2, rng), 1.0, 1.0);
    CHECK(c2.l1 == 0.0);
}

TEST_CASE("predict: repeated calls identical; argmax invariant to per-sector logit shifts") {
    ModelConfig cfg = tiny_config();
    MtlModel model(cfg);
    Rng rng(37);
    model.init(rng);
    StrainMatrix m(cfg.n_sectors, cfg.n_frames);
    for (double& v : m.values) v = rng.uniform(-0.2, 0.2);
    auto [tos_a, labels_a] = model.predict(m);
    auto [tos_b, labels_b] = model.predict(m);
    CHECK(tos_a.tos_ms == tos_b.tos_ms);
    for (std::size_t s = 0; s < cfg.n_sectors; ++s) {
        CHECK(labels_a.probs[s] == labels_b.probs[s]);
        CHECK(tos_a.tos_ms[s] > 0.0);
        CHECK(std::isfinite(tos_a.tos_ms[s]));
    }

    // softmax shift invariance on the argmax rule
    nn::Tensor logits({1, 3, 2});
    logits.data = {1.0, 2.0, -3.0, -5.0, 0.0, 0.0};
    for (std::size_t s = 0; s < 3; ++s) {
        const bool before = logits.data[2 * s + 1] > logits.data[2 * s];
        const double shift = 100.0;
        const bool after = (logits.data[2 * s + 1] + shift) > (logits.data[2 * s] + shift);
        CHECK(before == after);
    }
}

TEST_CASE("training on a small noiseless phantom set reduces the loss sharply") {
    PhantomSpec spec;
    spec.noise_std = 0.0;
    spec.rng_seed = 5;
    auto records = generate_phantom(spec, 12);  // 48 records

    PreprocessConfig pre;
    pre.shift_copies = 4;
    pre.mixup_copies = 0;
    Rng rng(6);
    auto split = split_patients(patient_ids(records), 0, 0.2, 123);
    auto train_samples = build_training_set(filter_by_patients(records, split.train_patients), pre, rng);
    auto val_samples = build_training_set(filter_by_patients(records, split.val_patients), pre, rng);
    CHECK(train_samples.size() >= 180);  // ~200-sample noiseless set

    ModelConfig mcfg;
    TrainConfig tcfg = TrainConfig::mtl_defaults();
    tcfg.batch_size = 16;
    tcfg.max_epochs = 160;
    tcfg.patience = 160;
    tcfg.rng_seed = 7;
    MtlModel model(mcfg);
    auto history = train(model, train_samples, val_samples, tcfg);
    REQUIRE(!history.epochs.empty());
    const double first = history.epochs.front().train_total;
    const double best = history.epochs[history.best_epoch].train_total;
    CHECK(best < 0.2 * first);
}

TEST_CASE("training is deterministic: identical seeds give identical histories") {
    PhantomSpec spec;
    spec.rng_seed = 8;
    auto records = generate_phantom(spec, 6);
    PreprocessConfig pre;
    pre.shift_copies = 1;
    pre.mixup_copies = 1;
    Rng rng_a(9), rng_b(9);
    auto split = split_patients(patient_ids(records), 0, 0.2, 5);
    auto train_recs = filter_by_patients(records, split.train_patients);
    auto val_recs = filter_by_patients(records, split.val_patients);
    auto train_a = build_training_set(train_recs, pre, rng_a);
    auto train_b = build_training_set(train_recs, pre, rng_b);
    Rng rng_c(10), rng_d(10);
    auto val_a = build_training_set(val_recs, pre, rng_c);
    auto val_b = build_training_set(val_recs, pre, rng_d);

    TrainConfig tcfg = TrainConfig::mtl_defaults();
    tcfg.batch_size = 8;
    tcfg.max_epochs = 5;
    tcfg.rng_seed = 11;
    ModelConfig mcfg;
    mcfg.n_sectors = 18;
    mcfg.n_frames = 48;
    mcfg.channels = 4;
    mcfg.fc_hidden = {16};

    MtlModel model_a(mcfg), model_b(mcfg);
    auto hist_a = train(model_a, train_a, val_a, tcfg);
    auto hist_b = train(model_b, train_b, val_b, tcfg);
    REQUIRE(hist_a.epochs.size() == hist_b.epochs.size());
    for (std::size_t e = 0; e < hist_a.epochs.size(); ++e) {
        CHECK(hist_a.epochs[e].train_total == hist_b.epochs[e].train_total);
        CHECK(hist_a.epochs[e].val_total == hist_b.epochs[e].val_total);
    }
    auto pa = model_a.params();
    auto pb = model_b.params();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value.data == pb[i]->value.data);
}

TEST_CASE("lambda_cls = 0: classification gradient into shared layers is exactly zero") {
    ModelConfig cfg = tiny_config();
    MtlModel model(cfg);
    Rng rng(41);
    model.init(rng);
    nn::Tensor input = random_batch(cfg, 3, rng);
    nn::Tensor tos_gt = random_tos(cfg, 3, rng);
    nn::Tensor labels_gt = random_hard_labels(cfg, 3, rng);

    // gradients with the classification path weighted zero
    auto out = model.forward(input, nn::Mode::train);
    for (auto* p : model.params()) p->zero_grad();
    model.loss_backward(out, tos_gt, labels_gt, 0.0, 0.0);
    // classification-head parameter gradients must be identically zero
    for (auto* p : model.classification_head().params()) {
        for (double g : p->grad.data) CHECK(g == 0.0);
    }
}

TEST_CASE("early stopping: best epoch is never after a later-returned epoch") {
    PhantomSpec spec;
    spec.rng_seed = 12;
    auto records = generate_phantom(spec, 6);
    PreprocessConfig pre;
    pre.shift_copies = 0;
    pre.mixup_copies = 0;
    Rng rng(13);
    auto split = split_patients(patient_ids(records), 0, 0.25, 3);
    auto train_samples = build_training_set(filter_by_patients(records, split.train_patients), pre, rng);
    auto val_samples = build_training_set(filter_by_patients(records, split.val_patients), pre, rng);

    ModelConfig mcfg;
    mcfg.channels = 4;
    mcfg.fc_hidden = {16};
    TrainConfig tcfg = TrainConfig::mtl_defaults();
    tcfg.batch_size = 8;
    tcfg.max_epochs = 40;
    tcfg.patience = 5;
    tcfg.rng_seed = 14;
    MtlModel model(mcfg);
    auto history = train(model, train_samples, val_samples, tcfg);
    CHECK(history.best_epoch < history.epochs.size());
    double best_val = history.epochs[history.best_epoch].val_total;
    for (const auto& e : history.epochs) CHECK(best_val <= e.val_total);
    if (history.early_stopped) {
        CHECK(history.epochs.size() - 1 - history.best_epoch >= tcfg.patience);
    }
}

TEST_CASE("train rejects an empty validation set and overlapping patients") {
    PhantomSpec spec;
    spec.rng_seed = 15;
    auto records = generate_phantom(spec, 2);
    PreprocessConfig pre;
    pre.shift_copies = 0;
    pre.mixup_copies = 0;
    Rng rng(16);
    auto samples = build_training_set(records, pre, rng);
    ModelConfig mcfg;
    mcfg.channels = 2;
    mcfg.fc_hidden = {8};
    TrainConfig tcfg = TrainConfig::mtl_defaults();
    tcfg.batch_size = 4;
    tcfg.max_epochs = 1;
    MtlModel model(mcfg);
    CHECK_THROWS_AS(train(model, samples, {}, tcfg), ConfigError);
    CHECK_THROWS_AS(train(model, samples, samples, tcfg), ConfigError);
}

TEST_CASE("checkpoint: save -> load gives identical forward outputs") {
    ModelConfig cfg = tiny_config();
    MtlModel model(cfg);
    Rng rng(51);
    model.init(rng);
    // touch running stats so they are non-trivial
    auto warm = random_batch(cfg, 4, rng);
    model.forward(warm, nn::Mode::train);

    const std::string path = "test_ckpt.bin";
    TrainConfig tcfg = TrainConfig::mtl_defaults();
    save_checkpoint(model, tcfg, path);

    auto [loaded, ckpt] = load_checkpoint(path);
    CHECK(ckpt.model_config.n_sectors == cfg.n_sectors);
    CHECK(ckpt.train_config.lambda_cls == tcfg.lambda_cls);

    nn::Tensor input = random_batch(cfg, 2, rng);
    auto out_a = model.forward(input, nn::Mode::eval);
    auto out_b = loaded->forward(input, nn::Mode::eval);
    CHECK(out_a.tos.data == out_b.tos.data);        // bitwise round-trip
    CHECK(out_a.logits.data == out_b.logits.data);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint: truncated file raises an integrity error") {
    ModelConfig cfg = tiny_config();
    MtlModel model(cfg);
    Rng rng(52);
    model.init(rng);
    const std::string path = "test_ckpt_trunc.bin";
    save_checkpoint(model, TrainConfig::mtl_defaults(), path);
    // truncate away most of the blob
    {
        std::ifstream in(path, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size() / 2));
    }
    MtlModel fresh(cfg);
    CHECK_THROWS_AS(load_checkpoint(fresh, path), SchemaError);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint from a different config names the mismatched tensor") {
    ModelConfig cfg = tiny_config();
    MtlModel model(cfg);
    Rng rng(53);
    model.init(rng);
    const std::string path = "test_ckpt_mismatch.bin";
    save_checkpoint(model, TrainConfig::mtl_defaults(), path);

    ModelConfig other = cfg;
    other.channels = cfg.channels * 2;
    MtlModel wrong(other);
    try {
        load_checkpoint(wrong, path);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("joint.conv1") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("checkpoint magic check rejects foreign files") {
    const std::string path = "test_ckpt_magic.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out << "definitely not a checkpoint";
    }
    CHECK_THROWS_AS(read_checkpoint_header(path), SchemaError);
    std::remove(path.c_str());
}
