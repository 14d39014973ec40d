#include "tosmtl/preprocess.hpp"

#include <algorithm>
#include <fstream>

namespace tosmtl {

using nlohmann::json;
using nlohmann::ordered_json;

StrainMatrix trim_frames(const StrainMatrix& m, std::size_t k) {
    if (k >= m.n_frames) {
        throw ConfigError("trim_frames: cannot trim " + std::to_string(k) + " of " +
                          std::to_string(m.n_frames) + " frames");
    }
    StrainMatrix out(m.n_sectors, m.n_frames - k, m.frame_period_ms);
    for (std::size_t s = 0; s < m.n_sectors; ++s) {
        for (std::size_t f = 0; f < out.n_frames; ++f) out.at(s, f) = m.at(s, f);
    }
    return out;
}

StrainMatrix pad_to(const StrainMatrix& m, std::size_t target_sectors, std::size_t target_frames) {
    if (target_sectors < m.n_sectors || target_frames < m.n_frames) {
        throw ConfigError("pad_to: target " + std::to_string(target_sectors) + "x" +
                          std::to_string(target_frames) + " smaller than input " +
                          std::to_string(m.n_sectors) + "x" + std::to_string(m.n_frames));
    }
    StrainMatrix out(target_sectors, target_frames, m.frame_period_ms);
    for (std::size_t s = 0; s < target_sectors; ++s) {
        const std::size_t src = s % m.n_sectors;  // wrap-around duplication
        for (std::size_t f = 0; f < m.n_frames; ++f) out.at(s, f) = m.at(src, f);
        // columns beyond n_frames stay zero
    }
    return out;
}

void circular_shift(StrainMatrix& m, TosCurve& tos, SectorLabels& labels, std::size_t k) {
    const std::size_t n = m.n_sectors;
    if (n == 0) return;
    k %= n;
    if (k == 0) return;
    StrainMatrix sm(m.n_sectors, m.n_frames, m.frame_period_ms);
    TosCurve st;
    st.tos_ms.resize(n);
    SectorLabels sl;
    sl.probs.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t dst = (s + k) % n;
        for (std::size_t f = 0; f < m.n_frames; ++f) sm.at(dst, f) = m.at(s, f);
        st.tos_ms[dst] = tos.tos_ms[s];
        sl.probs[dst] = labels.probs[s];
    }
    m = std::move(sm);
    tos = std::move(st);
    labels = std::move(sl);
}

TrainSample mixup(const TrainSample& a, const TrainSample& b, double lambda) {
    if (a.strain.n_sectors != b.strain.n_sectors || a.strain.n_frames != b.strain.n_frames) {
        throw ConfigError("mixup: shape mismatch " + std::to_string(a.strain.n_sectors) + "x" +
                          std::to_string(a.strain.n_frames) + " vs " +
                          std::to_string(b.strain.n_sectors) + "x" +
                          std::to_string(b.strain.n_frames));
    }
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("mixup: lambda outside [0,1]");

    TrainSample out = a;
    const double mu = 1.0 - lambda;
    for (std::size_t i = 0; i < out.strain.values.size(); ++i) {
        out.strain.values[i] = lambda * a.strain.values[i] + mu * b.strain.values[i];
    }
    for (std::size_t s = 0; s < out.tos.tos_ms.size(); ++s) {
        out.tos.tos_ms[s] = lambda * a.tos.tos_ms[s] + mu * b.tos.tos_ms[s];
        out.labels.probs[s][0] = lambda * a.labels.probs[s][0] + mu * b.labels.probs[s][0];
        out.labels.probs[s][1] = lambda * a.labels.probs[s][1] + mu * b.labels.probs[s][1];
    }
    return out;
}

SectorLabels derive_lma_labels(const TosCurve& tos, double threshold_ms) {
    if (threshold_ms <= 0.0) throw ConfigError("derive_lma_labels: threshold must be > 0");
    std::vector<bool> lma(tos.n_sectors());
    for (std::size_t s = 0; s < tos.n_sectors(); ++s) lma[s] = tos.tos_ms[s] > threshold_ms;
    return SectorLabels::hard(lma);
}

std::vector<TrainSample> build_training_set(const std::vector<PhantomRecord>& records,
                                            const PreprocessConfig& config, Rng& rng) {
    if (records.empty()) throw ConfigError("build_training_set: no records");

    // Stage 1: trimmed, padded originals plus their shifted copies.
    std::vector<TrainSample> pool;
    pool.reserve(records.size() * (1 + config.shift_copies));
    for (const auto& rec : records) {
        TrainSample base;
        base.id = rec.id;
        base.patient_id = rec.patient_id;
        base.strain = pad_to(trim_frames(rec.strain, config.trim_last_frames),
                             config.target_sectors, config.target_frames);
        base.tos = rec.tos;
        base.labels = rec.labels;
        base.provenance_sources = {rec.id};
        base.provenance_transform = "orig";
        pool.push_back(base);

        const std::size_t n = config.target_sectors;
        for (std::size_t c = 0; c < config.shift_copies; ++c) {
            const std::size_t k = static_cast<std::size_t>(
                rng.uniform_int(1, static_cast<std::int64_t>(n) - 1));
            TrainSample shifted = base;
            circular_shift(shifted.strain, shifted.tos, shifted.labels, k);
            shifted.id = rec.id + "~shift" + std::to_string(c);
            shifted.provenance_transform = "shift(" + std::to_string(k) + ")";
            pool.push_back(std::move(shifted));
        }
    }

    // Stage 2: mixup partners drawn from the shifted pool.
    std::vector<TrainSample> out = pool;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const TrainSample& base = pool[r * (1 + config.shift_copies)];
        for (std::size_t c = 0; c < config.mixup_copies; ++c) {
            const std::size_t partner = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
            const double lambda = rng.beta(config.mixup_alpha, config.mixup_alpha);
            TrainSample mixed = mixup(base, pool[partner], lambda);
            mixed.id = base.id + "~mix" + std::to_string(c);
            mixed.provenance_sources = {base.id, pool[partner].id};
            char buf[48];
            std::snprintf(buf, sizeof(buf), "mixup(%.6f)", lambda);
            mixed.provenance_transform = buf;
            out.push_back(std::move(mixed));
        }
    }
    return out;
}

void save_training_set(const std::vector<TrainSample>& samples, const std::string& path,
                       const ordered_json* meta) {
    std::ofstream fout(path, std::ios::binary);
    if (!fout) throw IoError("cannot open for writing: " + path);
    if (meta) {
        ordered_json line;
        line["_meta"] = *meta;
        fout << line.dump() << "\n";
    }
    for (const auto& s : samples) {
        ordered_json j;
        j["id"] = s.id;
        j["patient_id"] = s.patient_id;
        j["n_sectors"] = s.strain.n_sectors;
        j["n_frames"] = s.strain.n_frames;
        j["frame_period_ms"] = s.strain.frame_period_ms;
        j["strain"] = s.strain.values;
        j["tos_ms"] = s.tos.tos_ms;
        ordered_json lma = ordered_json::array();
        for (const auto& row : s.labels.probs) lma.push_back({row[0], row[1]});
        j["lma"] = std::move(lma);
        j["provenance"] = {{"sources", s.provenance_sources},
                           {"transform", s.provenance_transform}};
        fout << j.dump() << "\n";
    }
    if (!fout) throw IoError("write failed: " + path);
}

std::vector<TrainSample> load_training_set(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<TrainSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (j.contains("_meta")) continue;
        TrainSample s;
        try {
            s.id = j.at("id").get<std::string>();
            s.patient_id = j.at("patient_id").get<std::string>();
            const auto ns = j.at("n_sectors").get<std::size_t>();
            const auto nf = j.at("n_frames").get<std::size_t>();
            s.strain = StrainMatrix(ns, nf, j.at("frame_period_ms").get<double>());
            s.strain.values = j.at("strain").get<std::vector<double>>();
            if (s.strain.values.size() != ns * nf) {
                throw SchemaError("sample " + s.id + ": strain array size mismatch");
            }
            s.tos.tos_ms = j.at("tos_ms").get<std::vector<double>>();
            for (const auto& row : j.at("lma")) {
                s.labels.probs.push_back({row[0].get<double>(), row[1].get<double>()});
            }
            if (j.contains("provenance")) {
                s.provenance_sources =
                    j["provenance"].at("sources").get<std::vector<std::string>>();
                s.provenance_transform = j["provenance"].at("transform").get<std::string>();
            }
        } catch (const SchemaError& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace tosmtl
