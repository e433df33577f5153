#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "impress/errors.hpp"
#include "impress/models.hpp"
#include "impress/tensor.hpp"

namespace impress {

// Checkpoint layout, all little-endian:
//   "IMPN"  magic
//   u32     format version (currently 1)
//   u8      architecture tag (0 = conv3d, 1 = lstm)
//   u32     tensor count
//   per tensor: u16 name length, name bytes, u8 rank, u32 x rank dims,
//               float32 payload, row-major
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u16(std::vector<unsigned char>& b, uint16_t v) {
    b.push_back(static_cast<unsigned char>(v & 0xff));
    b.push_back(static_cast<unsigned char>(v >> 8));
}

inline void put_u32(std::vector<unsigned char>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::vector<unsigned char>& b, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(b, bits);
}

struct ByteReader {
    const std::vector<unsigned char>& buf;
    size_t pos = 0;
    const std::string& path;

    void need(size_t n) const {
        if (pos + n > buf.size()) throw DataFormatError(path + ": truncated checkpoint");
    }
    uint16_t u16() {
        need(2);
        const uint16_t v = static_cast<uint16_t>(buf[pos] | (buf[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint8_t u8() {
        need(1);
        return buf[pos++];
    }
    float f32() {
        const uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
        pos += n;
        return s;
    }
};

}  // namespace detail

template <typename T, typename Model>
void save_checkpoint(const std::string& path, Model& model) {
    std::vector<unsigned char> out;
    out.insert(out.end(), {'I', 'M', 'P', 'N'});
    detail::put_u32(out, kCheckpointVersion);
    out.push_back(Model::kArchTag);
    const auto tensors = model.tensors();
    detail::put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const NamedTensor<T>& nt : tensors) {
        detail::put_u16(out, static_cast<uint16_t>(nt.name.size()));
        out.insert(out.end(), nt.name.begin(), nt.name.end());
        out.push_back(static_cast<unsigned char>(nt.tensor->rank()));
        for (int d = 0; d < nt.tensor->rank(); ++d)
            detail::put_u32(out, static_cast<uint32_t>(nt.tensor->dim(d)));
        for (const T v : nt.tensor->data) detail::put_f32(out, static_cast<float>(v));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw MissingInputError("cannot create checkpoint: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataFormatError("failed writing checkpoint: " + path);
}

// Architecture tag alone, for picking a model type before a full load.
inline uint8_t read_checkpoint_tag(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open checkpoint: " + path);
    char head[9];
    in.read(head, 9);
    if (!in || std::memcmp(head, "IMPN", 4) != 0)
        throw DataFormatError(path + ": not a checkpoint file");
    return static_cast<uint8_t>(head[8]);
}

// Strict load: tensor names, order and shapes must match the model exactly.
template <typename T, typename Model>
void load_checkpoint(const std::string& path, Model& model) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open checkpoint: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    detail::ByteReader r{buf, 0, path};
    if (r.str(4) != "IMPN") throw DataFormatError(path + ": not a checkpoint file");
    const uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw DataFormatError(path + ": unsupported checkpoint version " + std::to_string(version));
    const uint8_t tag = r.u8();
    if (tag != Model::kArchTag)
        throw DataFormatError(path + ": checkpoint architecture tag " + std::to_string(tag) +
                              " does not match " + Model::kArchName);
    auto tensors = model.tensors();
    const uint32_t count = r.u32();
    if (count != tensors.size())
        throw DataFormatError(path + ": checkpoint has " + std::to_string(count) +
                              " tensors, model expects " + std::to_string(tensors.size()));
    for (NamedTensor<T>& nt : tensors) {
        const std::string name = r.str(r.u16());
        if (name != nt.name)
            throw DataFormatError(path + ": tensor '" + name + "' where '" + nt.name +
                                  "' was expected");
        const uint8_t rank = r.u8();
        if (rank != nt.tensor->rank())
            throw DataFormatError(path + ": tensor '" + name + "' has rank " +
                                  std::to_string(rank) + ", expected " +
                                  std::to_string(nt.tensor->rank()));
        for (int d = 0; d < rank; ++d) {
            const uint32_t dim = r.u32();
            if (dim != static_cast<uint32_t>(nt.tensor->dim(d)))
                throw DataFormatError(path + ": tensor '" + name + "' dim " + std::to_string(d) +
                                      " is " + std::to_string(dim) + ", expected " +
                                      std::to_string(nt.tensor->dim(d)));
        }
        for (T& v : nt.tensor->data) v = static_cast<T>(r.f32());
    }
    if (r.pos != buf.size()) throw DataFormatError(path + ": trailing bytes after tensors");
}

}  // namespace impress
