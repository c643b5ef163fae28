#include "rqmap/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

namespace rqmap {

using nlohmann::json;

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t digest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

std::uint64_t scene_spec_digest(const SceneSpec& s) {
    json j = {{"floor_x", s.floor_x_m}, {"floor_y", s.floor_y_m}, {"ceiling", s.ceiling_m},
              {"rows", s.shelf_rows},   {"cols", s.shelf_cols},   {"len", s.shelf_len_m},
              {"wid", s.shelf_wid_m},   {"base", s.shelf_base_height_m},
              {"amp", s.goods_amplitude_m}, {"period", s.goods_period_steps},
              {"nobs", s.n_obstacles},  {"omin", s.obstacle_min_m}, {"omax", s.obstacle_max_m},
              {"seed", s.rng_seed}};
    const std::string txt = j.dump();
    return fnv1a64(txt.data(), txt.size());
}

namespace {

constexpr int kDatasetVersion = 1;
constexpr char kCheckpointMagic[4] = {'R', 'Q', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& x) {
    out.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T x{};
    in.read(reinterpret_cast<char*>(&x), sizeof(T));
    if (!in) throw IoError("truncated file");
    return x;
}

void write_str(std::ofstream& out, const std::string& s) {
    write_pod(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::ifstream& in) {
    const auto n = read_pod<std::uint32_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw IoError("truncated string");
    return s;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& blob_path) {
    std::ofstream blob(blob_path, std::ios::binary);
    if (!blob) throw IoError("cannot write " + blob_path.string());
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    std::uint64_t digest = 0xcbf29ce484222325ull;
    for (const auto& item : ds.items) {
        if (item.size() != ds.item_floats())
            throw IoError("dataset item size inconsistent with the manifest geometry");
        offsets.push_back(off);
        blob.write(reinterpret_cast<const char*>(item.data()),
                   static_cast<std::streamsize>(item.size() * sizeof(float)));
        digest = fnv1a64(item.data(), item.size() * sizeof(float), digest);
        off += item.size() * sizeof(float);
    }
    blob.close();

    json j;
    j["format_version"] = kDatasetVersion;
    j["kind"] = ds.kind == Dataset::Kind::sequences ? "sequences" : "labeled";
    j["modality"] = ds.modality;
    j["h"] = ds.h;
    j["w"] = ds.w;
    j["k"] = ds.k;
    j["seq_len"] = ds.seq_len;
    j["seed"] = ds.seed;
    j["scene_spec_digest"] = ds.scene_spec_digest;
    j["count"] = ds.items.size();
    j["byte_offsets"] = offsets;
    j["blob_bytes"] = off;
    j["blob_digest"] = digest;
    j["blob_file"] = blob_path.filename().string();
    j["split"] = ds.split;
    std::ofstream man(manifest_path);
    if (!man) throw IoError("cannot write " + manifest_path.string());
    man << j.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream man(manifest_path);
    if (!man) throw IoError("cannot open " + manifest_path.string());
    json j;
    try {
        man >> j;
    } catch (const json::exception& e) {
        throw IoError("bad manifest: " + std::string(e.what()));
    }
    if (j.value("format_version", -1) != kDatasetVersion)
        throw IoError("dataset format version mismatch");

    Dataset ds;
    ds.kind = j.at("kind") == "sequences" ? Dataset::Kind::sequences : Dataset::Kind::labeled;
    ds.modality = j.at("modality");
    ds.h = j.at("h");
    ds.w = j.at("w");
    ds.k = j.at("k");
    ds.seq_len = j.at("seq_len");
    ds.seed = j.at("seed");
    ds.scene_spec_digest = j.at("scene_spec_digest");
    ds.split = j.value("split", std::vector<int>{});
    const std::size_t count = j.at("count");
    const std::size_t blob_bytes = j.at("blob_bytes");
    const std::uint64_t want_digest = j.at("blob_digest");

    const auto blob_path = manifest_path.parent_path() / std::string(j.at("blob_file"));
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw IoError("cannot open " + blob_path.string());
    blob.seekg(0, std::ios::end);
    if (static_cast<std::size_t>(blob.tellg()) != blob_bytes)
        throw IoError("blob length " + std::to_string(blob.tellg()) + " != manifest " +
                      std::to_string(blob_bytes));
    blob.seekg(0);

    const std::size_t item_floats = ds.item_floats();
    if (count * item_floats * sizeof(float) != blob_bytes)
        throw IoError("blob length inconsistent with item count and geometry");

    std::uint64_t digest = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<float> item(item_floats);
        blob.read(reinterpret_cast<char*>(item.data()),
                  static_cast<std::streamsize>(item_floats * sizeof(float)));
        if (!blob) throw IoError("truncated blob");
        digest = fnv1a64(item.data(), item.size() * sizeof(float), digest);
        ds.items.push_back(std::move(item));
    }
    if (digest != want_digest) throw IoError("blob digest mismatch: data corrupted");
    return ds;
}

void save_model(Model<float>& model, const std::filesystem::path& path, Adam<float>* optimizer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kCheckpointMagic, 4);
    write_pod(out, kCheckpointVersion);
    write_str(out, model.arch);
    auto params = model.param_refs();
    write_pod(out, static_cast<std::uint32_t>(params.size()));
    for (auto& p : params) {
        write_str(out, p.name);
        write_pod(out, static_cast<std::uint32_t>(p.value->shape.size()));
        for (int d : p.value->shape) write_pod(out, static_cast<std::uint32_t>(d));
    }
    for (auto& p : params)
        out.write(reinterpret_cast<const char*>(p.value->data()),
                  static_cast<std::streamsize>(p.value->size() * sizeof(float)));

    write_pod(out, static_cast<std::uint8_t>(optimizer ? 1 : 0));
    if (optimizer) {
        write_pod(out, static_cast<std::int32_t>(optimizer->step_count()));
        write_pod(out, optimizer->lr());
        write_pod(out, optimizer->beta1());
        write_pod(out, optimizer->beta2());
        write_pod(out, optimizer->eps());
        for (auto& m : optimizer->moments1())
            out.write(reinterpret_cast<const char*>(m.data()),
                      static_cast<std::streamsize>(m.size() * sizeof(float)));
        for (auto& v : optimizer->moments2())
            out.write(reinterpret_cast<const char*>(v.data()),
                      static_cast<std::streamsize>(v.size() * sizeof(float)));
    }
}

std::string read_checkpoint_arch(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) throw IoError("bad checkpoint magic");
    if (read_pod<std::uint32_t>(in) != kCheckpointVersion) throw IoError("checkpoint version mismatch");
    return read_str(in);
}

void load_model(Model<float>& model, const std::filesystem::path& path, Adam<float>* optimizer) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) throw IoError("bad checkpoint magic");
    if (read_pod<std::uint32_t>(in) != kCheckpointVersion) throw IoError("checkpoint version mismatch");
    const std::string arch = read_str(in);
    if (arch != model.arch)
        throw IoError("checkpoint architecture '" + arch + "' does not match model '" + model.arch + "'");

    auto params = model.param_refs();
    const auto n = read_pod<std::uint32_t>(in);
    if (n != params.size()) throw IoError("checkpoint tensor count mismatch");
    std::string diffs;
    for (auto& p : params) {
        const std::string name = read_str(in);
        const auto ndim = read_pod<std::uint32_t>(in);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(read_pod<std::uint32_t>(in));
        if (name != p.name || shape != p.value->shape) diffs += p.name + " ";
    }
    if (!diffs.empty()) throw IoError("checkpoint layer mismatch: " + diffs);
    for (auto& p : params) {
        in.read(reinterpret_cast<char*>(p.value->data()),
                static_cast<std::streamsize>(p.value->size() * sizeof(float)));
        if (!in) throw IoError("truncated checkpoint blob");
    }

    const auto has_opt = read_pod<std::uint8_t>(in);
    if (optimizer) {
        if (!has_opt) throw IoError("checkpoint has no optimizer section");
        optimizer->set_step(read_pod<std::int32_t>(in));
        read_pod<double>(in);  // lr/betas/eps recorded for inspection; construction fixes them
        read_pod<double>(in);
        read_pod<double>(in);
        read_pod<double>(in);
        for (auto& m : optimizer->moments1()) {
            in.read(reinterpret_cast<char*>(m.data()),
                    static_cast<std::streamsize>(m.size() * sizeof(float)));
            if (!in) throw IoError("truncated optimizer section");
        }
        for (auto& v : optimizer->moments2()) {
            in.read(reinterpret_cast<char*>(v.data()),
                    static_cast<std::streamsize>(v.size() * sizeof(float)));
            if (!in) throw IoError("truncated optimizer section");
        }
    }
}

void write_pgm(const float* values, int h, int w, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << w << " " << h << "\n255\n";
    for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
        const int byte = static_cast<int>(std::lround(std::clamp(values[i], 0.0f, 1.0f) * 255.0f));
        out.put(static_cast<char>(byte));
    }
}

void write_loss_csv(const std::vector<std::pair<double, double>>& history,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "epoch,train_loss,test_loss\n";
    for (std::size_t i = 0; i < history.size(); ++i)
        out << i << "," << history[i].first << "," << history[i].second << "\n";
}

}  // namespace rqmap
