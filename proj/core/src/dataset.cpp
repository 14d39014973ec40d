#include "tosmtl/dataset.hpp"

#include <algorithm>
#include <fstream>

namespace tosmtl {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json record_to_json(const PhantomRecord& rec) {
    ordered_json j;
    j["id"] = rec.id;
    j["patient_id"] = rec.patient_id;
    j["slice_level"] = rec.slice_level;
    j["n_sectors"] = rec.strain.n_sectors;
    j["n_frames"] = rec.strain.n_frames;
    j["frame_period_ms"] = rec.strain.frame_period_ms;
    j["strain"] = rec.strain.values;
    j["tos_ms"] = rec.tos.tos_ms;
    ordered_json lma = ordered_json::array();
    for (const auto& row : rec.labels.probs) lma.push_back({row[0], row[1]});
    j["lma"] = std::move(lma);
    ordered_json scar = ordered_json::array();
    for (bool b : rec.scar_mask) scar.push_back(b);
    j["scar_mask"] = std::move(scar);
    return j;
}

PhantomRecord record_from_json(const json& j) {
    PhantomRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.patient_id = j.at("patient_id").get<std::string>();
    rec.slice_level = j.at("slice_level").get<std::string>();
    const auto n_sectors = j.at("n_sectors").get<std::size_t>();
    const auto n_frames = j.at("n_frames").get<std::size_t>();
    rec.strain = StrainMatrix(n_sectors, n_frames, j.at("frame_period_ms").get<double>());
    rec.strain.values = j.at("strain").get<std::vector<double>>();
    if (rec.strain.values.size() != n_sectors * n_frames) {
        throw SchemaError("record " + rec.id + ": strain array has " +
                          std::to_string(rec.strain.values.size()) + " values, expected " +
                          std::to_string(n_sectors * n_frames));
    }
    rec.tos.tos_ms = j.at("tos_ms").get<std::vector<double>>();
    if (rec.tos.tos_ms.size() != n_sectors) {
        throw SchemaError("record " + rec.id + ": tos_ms length mismatch");
    }
    for (const auto& row : j.at("lma")) {
        if (!row.is_array() || row.size() != 2) {
            throw SchemaError("record " + rec.id + ": lma rows must have 2 probabilities");
        }
        rec.labels.probs.push_back({row[0].get<double>(), row[1].get<double>()});
    }
    if (rec.labels.probs.size() != n_sectors) {
        throw SchemaError("record " + rec.id + ": lma length mismatch");
    }
    for (const auto& b : j.at("scar_mask")) rec.scar_mask.push_back(b.get<bool>());
    if (rec.scar_mask.size() != n_sectors) {
        throw SchemaError("record " + rec.id + ": scar_mask length mismatch");
    }
    return rec;
}

void save_dataset(const std::vector<PhantomRecord>& records, const std::string& path,
                  const ordered_json* meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    if (meta) {
        ordered_json line;
        line["_meta"] = *meta;
        out << line.dump() << "\n";
    }
    for (const auto& rec : records) {
        out << record_to_json(rec).dump() << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<PhantomRecord> load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<PhantomRecord> records;
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
        try {
            records.push_back(record_from_json(j));
        } catch (const SchemaError& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const json::exception& e) {
            std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                                     : "<unknown>";
            throw ParseError(path + ":" + std::to_string(line_no) + ": record " + id + ": " +
                             e.what());
        }
    }
    return records;
}

std::vector<std::string> patient_ids(const std::vector<PhantomRecord>& records) {
    std::vector<std::string> ids;
    for (const auto& rec : records) {
        if (std::find(ids.begin(), ids.end(), rec.patient_id) == ids.end()) {
            ids.push_back(rec.patient_id);
        }
    }
    return ids;
}

}  // namespace tosmtl
