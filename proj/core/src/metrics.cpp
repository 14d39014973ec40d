#include "tosmtl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tosmtl {

using nlohmann::json;
using nlohmann::ordered_json;

double tos_mae_ms(const TosCurve& pred, const TosCurve& gt) {
    if (pred.n_sectors() != gt.n_sectors()) {
        throw ConfigError("tos_mae_ms: curve lengths differ (" + std::to_string(pred.n_sectors()) +
                          " vs " + std::to_string(gt.n_sectors()) + ")");
    }
    if (pred.n_sectors() == 0) throw ConfigError("tos_mae_ms: empty curves");
    double acc = 0.0;
    for (std::size_t s = 0; s < pred.n_sectors(); ++s) {
        acc += std::abs(pred.tos_ms[s] - gt.tos_ms[s]);
    }
    return acc / static_cast<double>(pred.n_sectors());
}

ClassificationMetrics classification_metrics(const SectorLabels& pred, const SectorLabels& gt) {
    if (pred.n_sectors() != gt.n_sectors()) {
        throw ConfigError("classification_metrics: label lengths differ");
    }
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t s = 0; s < pred.n_sectors(); ++s) {
        const bool p = pred.is_lma(s), g = gt.is_lma(s);
        if (p && g) ++tp;
        else if (!p && !g) ++tn;
        else if (p && !g) ++fp;
        else ++fn;
    }
    ClassificationMetrics m;
    const double n = static_cast<double>(tp + tn + fp + fn);
    m.accuracy = static_cast<double>(tp + tn) / n;
    if (tp + fp == 0 && tp + fn == 0) {
        // no positives predicted, none exist
        m.precision = m.recall = m.f1 = 1.0;
        m.degenerate_convention = true;
        return m;
    }
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

ScarStratifiedReport scar_stratified_report(const std::vector<PredictionRecord>& predictions,
                                            const std::vector<PhantomRecord>& dataset) {
    std::map<std::string, const PhantomRecord*> by_id;
    for (const auto& rec : dataset) by_id[rec.id] = &rec;

    struct Accum {
        double sum = 0.0;
        std::size_t n = 0;
        void add(double v) { sum += v; ++n; }
        StratumStats stats() const {
            StratumStats s;
            s.sectors = n;
            s.mae_ms = n > 0 ? sum / static_cast<double>(n) : 0.0;
            return s;
        }
    };
    struct MethodAccum {
        Accum all, scar, lma, normal;
        double record_mean_sum = 0.0;
        std::size_t records = 0;
        std::vector<std::string> seen_ids;
    };
    std::map<std::string, MethodAccum> methods;

    for (const auto& pred : predictions) {
        auto it = by_id.find(pred.id);
        if (it == by_id.end()) {
            throw SchemaError("prediction for unknown record id: " + pred.id);
        }
        const PhantomRecord& rec = *it->second;
        if (pred.tos.n_sectors() != rec.tos.n_sectors()) {
            throw SchemaError("prediction " + pred.id + ": sector count mismatch");
        }
        MethodAccum& acc = methods[pred.method];
        acc.seen_ids.push_back(pred.id);
        double rec_sum = 0.0;
        for (std::size_t s = 0; s < rec.tos.n_sectors(); ++s) {
            const double err = std::abs(pred.tos.tos_ms[s] - rec.tos.tos_ms[s]);
            acc.all.add(err);
            rec_sum += err;
            if (rec.scar_mask[s]) {
                acc.scar.add(err);
            } else if (rec.labels.is_lma(s)) {
                acc.lma.add(err);
            } else {
                acc.normal.add(err);
            }
        }
        acc.record_mean_sum += rec_sum / static_cast<double>(rec.tos.n_sectors());
        acc.records += 1;
    }

    ScarStratifiedReport report;
    for (auto& [method, acc] : methods) {
        MethodReport mr;
        mr.method = method;
        mr.all = acc.all.stats();
        mr.scar = acc.scar.stats();
        mr.lma = acc.lma.stats();
        mr.normal = acc.normal.stats();
        mr.records = acc.records;
        mr.mae_ms_per_record_mean =
            acc.records > 0 ? acc.record_mean_sum / static_cast<double>(acc.records) : 0.0;
        std::sort(acc.seen_ids.begin(), acc.seen_ids.end());
        for (const auto& rec : dataset) {
            if (!std::binary_search(acc.seen_ids.begin(), acc.seen_ids.end(), rec.id)) {
                mr.missing_record_ids.push_back(rec.id);
            }
        }
        report.methods.push_back(std::move(mr));
    }
    std::sort(report.methods.begin(), report.methods.end(),
              [](const MethodReport& a, const MethodReport& b) {
                  if (a.all.mae_ms != b.all.mae_ms) return a.all.mae_ms < b.all.mae_ms;
                  return a.method < b.method;
              });
    return report;
}

namespace {

ordered_json stratum_json(const StratumStats& s) {
    if (!s.present()) return ordered_json{{"sectors", 0}, {"mae_ms", nullptr}};
    return ordered_json{{"sectors", s.sectors}, {"mae_ms", s.mae_ms}};
}

}  // namespace

ordered_json report_to_json(const ScarStratifiedReport& report) {
    ordered_json methods = ordered_json::array();
    for (const auto& m : report.methods) {
        ordered_json j;
        j["method"] = m.method;
        j["records"] = m.records;
        j["mae_ms"] = m.all.present() ? ordered_json(m.all.mae_ms) : ordered_json(nullptr);
        j["mae_ms_per_record_mean"] = m.mae_ms_per_record_mean;
        j["strata"] = ordered_json{{"all", stratum_json(m.all)},
                                   {"scar", stratum_json(m.scar)},
                                   {"lma", stratum_json(m.lma)},
                                   {"normal", stratum_json(m.normal)}};
        j["missing_record_ids"] = m.missing_record_ids;
        methods.push_back(std::move(j));
    }
    return ordered_json{{"methods", std::move(methods)}};
}

std::string report_to_csv(const ScarStratifiedReport& report, const std::string& comment) {
    std::ostringstream out;
    if (!comment.empty()) out << "# " << comment << "\n";
    out << "method,records,mae_ms,mae_ms_per_record_mean,"
           "scar_sectors,scar_mae_ms,lma_sectors,lma_mae_ms,normal_sectors,normal_mae_ms,"
           "missing_records\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    auto stratum = [&](const StratumStats& s) {
        return std::to_string(s.sectors) + "," + (s.present() ? num(s.mae_ms) : "");
    };
    for (const auto& m : report.methods) {
        out << m.method << "," << m.records << "," << (m.all.present() ? num(m.all.mae_ms) : "")
            << "," << num(m.mae_ms_per_record_mean) << "," << stratum(m.scar) << ","
            << stratum(m.lma) << "," << stratum(m.normal) << "," << m.missing_record_ids.size()
            << "\n";
    }
    return out.str();
}

void save_predictions(const std::vector<PredictionRecord>& predictions, const std::string& path,
                      const ordered_json* meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    if (meta) {
        ordered_json line;
        line["_meta"] = *meta;
        out << line.dump() << "\n";
    }
    for (const auto& p : predictions) {
        ordered_json j;
        j["id"] = p.id;
        j["method"] = p.method;
        j["tos_ms"] = p.tos.tos_ms;
        if (p.labels) {
            ordered_json lma = ordered_json::array();
            for (const auto& row : p.labels->probs) lma.push_back({row[0], row[1]});
            j["lma"] = std::move(lma);
        }
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<PredictionRecord> out;
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
        PredictionRecord p;
        try {
            p.id = j.at("id").get<std::string>();
            p.method = j.at("method").get<std::string>();
            p.tos.tos_ms = j.at("tos_ms").get<std::vector<double>>();
            if (j.contains("lma")) {
                SectorLabels labels;
                for (const auto& row : j["lma"]) {
                    labels.probs.push_back({row[0].get<double>(), row[1].get<double>()});
                }
                p.labels = std::move(labels);
            }
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace tosmtl
