#include "tosmtl/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "tosmtl/version.hpp"

namespace tosmtl {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'T', 'O', 'S', 'M', 'T', 'L', '0', '1'};

ordered_json model_config_to_json(const ModelConfig& c) {
    return ordered_json{{"n_sectors", c.n_sectors},
                        {"n_frames", c.n_frames},
                        {"channels", c.channels},
                        {"kernel", c.kernel},
                        {"joint_conv_layers", c.joint_conv_layers},
                        {"head_conv_layers", c.head_conv_layers},
                        {"fc_hidden", c.fc_hidden},
                        {"leak_alpha", c.leak_alpha},
                        {"tos_min_ms", c.tos_min_ms},
                        {"squared_regression", c.squared_regression}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig c;
    c.n_sectors = j.at("n_sectors").get<std::size_t>();
    c.n_frames = j.at("n_frames").get<std::size_t>();
    c.channels = j.at("channels").get<std::size_t>();
    c.kernel = j.at("kernel").get<std::size_t>();
    c.joint_conv_layers = j.at("joint_conv_layers").get<std::size_t>();
    c.head_conv_layers = j.at("head_conv_layers").get<std::size_t>();
    c.fc_hidden = j.at("fc_hidden").get<std::vector<std::size_t>>();
    c.leak_alpha = j.at("leak_alpha").get<double>();
    c.tos_min_ms = j.at("tos_min_ms").get<double>();
    c.squared_regression = j.at("squared_regression").get<bool>();
    return c;
}

ordered_json train_config_to_json(const TrainConfig& c) {
    return ordered_json{{"learning_rate", c.learning_rate},
                        {"batch_size", c.batch_size},
                        {"lambda_cls", c.lambda_cls},
                        {"l1_weight", c.l1_weight},
                        {"max_epochs", c.max_epochs},
                        {"patience", c.patience},
                        {"val_fraction", c.val_fraction},
                        {"rng_seed", c.rng_seed}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.lambda_cls = j.at("lambda_cls").get<double>();
    c.l1_weight = j.at("l1_weight").get<double>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.val_fraction = j.at("val_fraction").get<double>();
    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return c;
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

// Tensors are serialized as consecutive little-endian doubles. This code
// assumes a little-endian host (checked at startup of save/load).
bool host_is_little_endian() {
    const std::uint16_t probe = 1;
    unsigned char b;
    std::memcpy(&b, &probe, 1);
    return b == 1;
}

struct NamedTensor {
    std::string name;
    std::vector<std::size_t> shape;
    const std::vector<double>* data;
};

std::vector<NamedTensor> collect_tensors(MtlModel& model) {
    std::vector<NamedTensor> out;
    for (auto* p : model.params()) {
        out.push_back({p->name, p->value.shape, &p->value.data});
    }
    for (auto& [name, t] : model.state()) {
        out.push_back({name, t->shape, &t->data});
    }
    return out;
}

}  // namespace

void save_checkpoint(MtlModel& model, const TrainConfig& train_cfg, const std::string& path) {
    if (!host_is_little_endian()) throw NumericError("checkpoint: big-endian hosts unsupported");
    const auto tensors = collect_tensors(model);

    ordered_json index = ordered_json::array();
    std::uint64_t offset = 0;
    for (const auto& t : tensors) {
        index.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}});
        offset += t.data->size() * sizeof(double);
    }
    ordered_json header;
    header["version"] = kVersion;
    header["model_config"] = model_config_to_json(model.config());
    header["train_config"] = train_config_to_json(train_cfg);
    header["tensors"] = std::move(index);
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, 8);
    write_u64_le(out, header_str.size());
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& t : tensors) {
        out.write(reinterpret_cast<const char*>(t.data->data()),
                  static_cast<std::streamsize>(t.data->size() * sizeof(double)));
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace {

json parse_header(std::ifstream& in, const std::string& path) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw SchemaError(path + ": bad magic, not a TOSMTL01 checkpoint");
    }
    const std::uint64_t len = read_u64_le(in);
    if (!in) throw SchemaError(path + ": truncated header length");
    std::string header_str(len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(len));
    if (!in) throw SchemaError(path + ": truncated header");
    try {
        return json::parse(header_str);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": header parse failure: " + e.what());
    }
}

}  // namespace

Checkpoint read_checkpoint_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    const json header = parse_header(in, path);
    Checkpoint ckpt;
    ckpt.model_config = model_config_from_json(header.at("model_config"));
    ckpt.train_config = train_config_from_json(header.at("train_config"));
    return ckpt;
}

Checkpoint load_checkpoint(MtlModel& model, const std::string& path) {
    if (!host_is_little_endian()) throw NumericError("checkpoint: big-endian hosts unsupported");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    const json header = parse_header(in, path);

    Checkpoint ckpt;
    ckpt.model_config = model_config_from_json(header.at("model_config"));
    ckpt.train_config = train_config_from_json(header.at("train_config"));

    const std::streampos blob_start = in.tellg();
    auto tensors = collect_tensors(model);
    if (header.at("tensors").size() != tensors.size()) {
        throw SchemaError(path + ": checkpoint has " +
                          std::to_string(header.at("tensors").size()) + " tensors, model expects " +
                          std::to_string(tensors.size()));
    }
    for (const auto& entry : header.at("tensors")) {
        const auto name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        const auto offset = entry.at("offset").get<std::uint64_t>();
        auto it = std::find_if(tensors.begin(), tensors.end(),
                               [&](const NamedTensor& t) { return t.name == name; });
        if (it == tensors.end()) {
            throw SchemaError(path + ": checkpoint tensor " + name + " not present in model");
        }
        if (it->shape != shape) {
            throw SchemaError(path + ": shape mismatch for tensor " + name + ": checkpoint " +
                              nn::shape_str(shape) + " vs model " + nn::shape_str(it->shape));
        }
        auto* dst = const_cast<std::vector<double>*>(it->data);
        in.seekg(blob_start + static_cast<std::streamoff>(offset));
        in.read(reinterpret_cast<char*>(dst->data()),
                static_cast<std::streamsize>(dst->size() * sizeof(double)));
        if (!in) {
            throw SchemaError(path + ": truncated tensor data for " + name);
        }
    }
    return ckpt;
}

std::pair<std::unique_ptr<MtlModel>, Checkpoint> load_checkpoint(const std::string& path) {
    Checkpoint header = read_checkpoint_header(path);
    auto model = std::make_unique<MtlModel>(header.model_config);
    Checkpoint full = load_checkpoint(*model, path);
    return {std::move(model), full};
}

}  // namespace tosmtl
