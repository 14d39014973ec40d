#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tosmtl/strain_types.hpp"

namespace tosmtl {

// JSON Lines dataset, one record per line:
//   {"id", "patient_id", "slice_level", "n_sectors", "n_frames",
//    "frame_period_ms", "strain", "tos_ms", "lma", "scar_mask"}
// Numbers round-trip at full precision. An optional leading {"_meta": ...}
// line carries the effective config + tool version; readers skip it.
void save_dataset(const std::vector<PhantomRecord>& records, const std::string& path,
                  const nlohmann::ordered_json* meta = nullptr);

std::vector<PhantomRecord> load_dataset(const std::string& path);

nlohmann::ordered_json record_to_json(const PhantomRecord& rec);
PhantomRecord record_from_json(const nlohmann::json& j);

// Distinct patient ids in record order of first appearance.
std::vector<std::string> patient_ids(const std::vector<PhantomRecord>& records);

}  // namespace tosmtl
