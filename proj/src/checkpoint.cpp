#include "learnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace learnet {

namespace {

constexpr char kMagic[4] = {'L', 'R', 'N', 'T'};
constexpr uint16_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (in.gcount() != sizeof(T)) throw TruncatedError("checkpoint " + path + " is truncated");
    return value;
}

}  // namespace

void save_checkpoint(const ModelParams& params, uint64_t graph_digest,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path);
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, graph_digest);
    put(out, static_cast<uint32_t>(params.size()));
    for (const auto& [name, tensor] : params) {
        put(out, static_cast<uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put(out, static_cast<uint8_t>(tensor.shape.size()));
        for (int d : tensor.shape) put(out, static_cast<uint32_t>(d));
        out.write(reinterpret_cast<const char*>(tensor.v.data()),
                  static_cast<std::streamsize>(tensor.v.size() * sizeof(float)));
    }
    if (!out) throw IoError("failed writing checkpoint " + path);
}

namespace {

uint64_t read_header(std::istream& in, const std::string& path) {
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4) throw TruncatedError("checkpoint " + path + " is truncated");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw BadMagicError(path + " is not a checkpoint file (bad magic)");
    const uint16_t version = get<uint16_t>(in, path);
    if (version != kVersion)
        throw BadVersionError("checkpoint " + path + " has unsupported version " +
                              std::to_string(version));
    return get<uint64_t>(in, path);
}

}  // namespace

ModelParams load_checkpoint(const std::string& path, uint64_t expected_digest) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    const uint64_t digest = read_header(in, path);
    if (digest != expected_digest)
        throw DigestMismatchError("checkpoint " + path +
                                  " was written for a different graph configuration");
    const uint32_t count = get<uint32_t>(in, path);
    ModelParams params;
    for (uint32_t r = 0; r < count; ++r) {
        const uint16_t name_len = get<uint16_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (in.gcount() != name_len) throw TruncatedError("checkpoint " + path + " is truncated");
        const uint8_t rank = get<uint8_t>(in, path);
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(get<uint32_t>(in, path));
        Tensor t = Tensor::zeros(shape);
        in.read(reinterpret_cast<char*>(t.v.data()),
                static_cast<std::streamsize>(t.v.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(t.v.size() * sizeof(float)))
            throw TruncatedError("checkpoint " + path + " is truncated");
        params[name] = std::move(t);
    }
    return params;
}

uint64_t checkpoint_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    return read_header(in, path);
}

}  // namespace learnet
