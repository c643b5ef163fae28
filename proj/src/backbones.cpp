#include "rqmap/backbones.hpp"

#include <sstream>

namespace rqmap {

namespace {

// "vit:k4:i64:p8:d128:L3:h4:s12:dec40-20-16" -> {"vit","k4","i64",...}
std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) out.push_back(part);
    return out;
}

int field(const std::vector<std::string>& parts, std::size_t i, const std::string& prefix) {
    if (i >= parts.size() || parts[i].rfind(prefix, 0) != 0)
        throw ArgumentError("malformed architecture string: expected '" + prefix + "...' field");
    return std::stoi(parts[i].substr(prefix.size()));
}

std::array<int, 3> triple(const std::vector<std::string>& parts, std::size_t i,
                          const std::string& prefix) {
    if (i >= parts.size() || parts[i].rfind(prefix, 0) != 0)
        throw ArgumentError("malformed architecture string: expected '" + prefix + "...' field");
    const auto nums = split(parts[i].substr(prefix.size()), '-');
    if (nums.size() != 3) throw ArgumentError("malformed architecture string: expected a-b-c widths");
    return {std::stoi(nums[0]), std::stoi(nums[1]), std::stoi(nums[2])};
}

}  // namespace

const char* backbone_name(Backbone b) {
    switch (b) {
        case Backbone::vit: return "vit";
        case Backbone::cnn: return "cnn";
        case Backbone::mlp: return "mlp";
    }
    return "?";
}

Backbone backbone_from_name(const std::string& name) {
    if (name == "vit") return Backbone::vit;
    if (name == "cnn") return Backbone::cnn;
    if (name == "mlp") return Backbone::mlp;
    throw ArgumentError("unknown backbone '" + name + "'");
}

Model<float> build_from_arch(const std::string& arch, std::uint64_t seed) {
    const auto parts = split(arch, ':');
    if (parts.empty()) throw ArgumentError("empty architecture string");
    if (parts[0] == "vit") {
        VitConfig c;
        c.in_channels = field(parts, 1, "k");
        c.image = field(parts, 2, "i");
        c.patch = field(parts, 3, "p");
        c.dim = field(parts, 4, "d");
        c.depth = field(parts, 5, "L");
        c.heads = field(parts, 6, "h");
        c.stem_channels = field(parts, 7, "s");
        const auto d = triple(parts, 8, "dec");
        c.dec1 = d[0];
        c.dec2 = d[1];
        c.dec3 = d[2];
        c.enforce_budget = false;
        return build_vit<float>(c, seed);
    }
    if (parts[0] == "cnn") {
        CnnConfig c;
        c.in_channels = field(parts, 1, "k");
        c.image = field(parts, 2, "i");
        const auto e = triple(parts, 3, "e");
        c.enc1 = e[0];
        c.enc2 = e[1];
        c.enc3 = e[2];
        c.bott = field(parts, 4, "b");
        const auto d = triple(parts, 5, "d");
        c.dec1 = d[0];
        c.dec2 = d[1];
        c.dec3 = d[2];
        c.enforce_budget = false;
        return build_cnn<float>(c, seed);
    }
    if (parts[0] == "mlp") {
        MlpConfig c;
        c.in_channels = field(parts, 1, "k");
        c.image = field(parts, 2, "i");
        c.hidden = field(parts, 3, "h");
        c.enforce_budget = false;
        return build_mlp<float>(c, seed);
    }
    throw ArgumentError("unknown architecture family '" + parts[0] + "'");
}

}  // namespace rqmap
