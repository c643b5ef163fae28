#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rqmap/fields.hpp"
#include "rqmap/model.hpp"
#include "rqmap/optim.hpp"

namespace rqmap {

// FNV-1a 64-bit content digest.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull);
std::uint64_t digest_file(const std::filesystem::path& path);

// Stored dataset: human-readable JSON manifest + raw little-endian float32
// blob. Items are flat row-major grids; an item is either one depth-map
// sequence (seq_len*h*w floats) or one labeled pair (2*h*w floats).
struct Dataset {
    enum class Kind { sequences, labeled };
    Kind kind = Kind::sequences;
    std::string modality = "depth";
    int h = 64, w = 64;
    int k = 4;
    int seq_len = 0;  // sequences only
    std::uint64_t seed = 0;
    std::uint64_t scene_spec_digest = 0;
    std::vector<std::vector<float>> items;
    std::vector<int> split;  // 0 = train, 1 = test; may be empty

    std::size_t item_floats() const {
        return kind == Kind::sequences ? static_cast<std::size_t>(seq_len) * h * w
                                       : 2 * static_cast<std::size_t>(h) * w;
    }
};

void save_dataset(const Dataset& ds, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& blob_path);
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Versioned binary checkpoint: magic + version + arch string + per-tensor
// manifest (name, shape) + float32 blobs, with an optional Adam section.
void save_model(Model<float>& model, const std::filesystem::path& path,
                Adam<float>* optimizer = nullptr);
// Loads into an already-built model of the same architecture.
void load_model(Model<float>& model, const std::filesystem::path& path,
                Adam<float>* optimizer = nullptr);

// Architecture identity string stored in a checkpoint header.
std::string read_checkpoint_arch(const std::filesystem::path& path);

// 8-bit binary PGM (value*255 rounded).
void write_pgm(const float* values, int h, int w, const std::filesystem::path& path);
template <typename Vec>
void write_pgm(const Vec& values, int h, int w, const std::filesystem::path& path) {
    if (values.size() != static_cast<std::size_t>(h) * w) throw IoError("write_pgm: size mismatch");
    write_pgm(values.data(), h, w, path);
}

void write_loss_csv(const std::vector<std::pair<double, double>>& history,
                    const std::filesystem::path& path);

std::uint64_t scene_spec_digest(const SceneSpec& spec);

}  // namespace rqmap
