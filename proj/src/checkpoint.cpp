#include "satnet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "satnet/error.hpp"

namespace satnet {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'T', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ParseError(path + ": truncated checkpoint");
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, Model& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    out.write(kMagic, sizeof kMagic);
    write_pod(out, kVersion);

    const std::string cfg = model.config().to_json_string();
    write_pod(out, static_cast<std::uint64_t>(cfg.size()));
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

    const auto params = model.parameters();
    write_pod(out, static_cast<std::uint64_t>(params.size()));
    for (const ad::Parameter* p : params) {
        write_pod(out, static_cast<std::uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_pod(out, static_cast<std::int32_t>(p->value.rows));
        write_pod(out, static_cast<std::int32_t>(p->value.cols));
        out.write(reinterpret_cast<const char*>(p->value.data.data()),
                  static_cast<std::streamsize>(p->value.data.size() * sizeof(double)));
    }
    if (!out) throw ValidationError("write failed: " + path);
}

Model load_checkpoint(const std::string& path, const Graph& g) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);

    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw VersionError(path + ": not a checkpoint file");
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion)
        throw VersionError(path + ": unsupported checkpoint version " + std::to_string(version));

    const auto cfg_len = read_pod<std::uint64_t>(in, path);
    std::string cfg_text(cfg_len, '\0');
    in.read(cfg_text.data(), static_cast<std::streamsize>(cfg_len));
    if (!in) throw ParseError(path + ": truncated checkpoint");
    const TrainConfig cfg = TrainConfig::from_json_string(cfg_text);

    Model model(cfg, g);
    std::map<std::string, ad::Parameter*> by_name;
    for (ad::Parameter* p : model.parameters()) by_name[p->name] = p;

    const auto count = read_pod<std::uint64_t>(in, path);
    if (count != by_name.size())
        throw ValidationError(path + ": checkpoint holds " + std::to_string(count) +
                              " tensors, model expects " + std::to_string(by_name.size()) +
                              " (graph/config mismatch)");
    for (std::uint64_t k = 0; k < count; ++k) {
        const auto name_len = read_pod<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rows = read_pod<std::int32_t>(in, path);
        const auto cols = read_pod<std::int32_t>(in, path);
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw ValidationError(path + ": unexpected tensor \"" + name + "\"");
        Tensor& dst = it->second->value;
        if (dst.rows != rows || dst.cols != cols)
            throw ValidationError(path + ": tensor \"" + name + "\" is " + std::to_string(rows) +
                                  "x" + std::to_string(cols) + ", model expects " +
                                  std::to_string(dst.rows) + "x" + std::to_string(dst.cols));
        in.read(reinterpret_cast<char*>(dst.data.data()),
                static_cast<std::streamsize>(dst.data.size() * sizeof(double)));
        if (!in) throw ParseError(path + ": truncated checkpoint");
    }
    return model;
}

} // namespace satnet
