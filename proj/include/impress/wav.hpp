#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "impress/errors.hpp"

namespace impress {

// Mono waveform in [-1, 1].
template <typename T>
struct AudioClip {
    int sample_rate = 0;
    std::vector<T> samples;
};

namespace detail {

inline uint32_t read_u32le(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline uint16_t read_u16le(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

inline void push_u32le(std::vector<unsigned char>& out, uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

inline void push_u16le(std::vector<unsigned char>& out, uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace detail

// Reads a RIFF/WAVE file holding 16-bit integer PCM, mono or stereo.
// Samples are scaled by 1/32768; stereo frames are averaged to mono.
template <typename T>
AudioClip<T> load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open audio file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw DataFormatError(path + ": not a RIFF/WAVE file");

    bool have_fmt = false;
    uint16_t channels = 0;
    uint32_t rate = 0;
    size_t data_off = 0, data_len = 0;
    bool have_data = false;

    size_t off = 12;
    while (off + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + off;
        const uint32_t sz = detail::read_u32le(hdr + 4);
        const size_t body = off + 8;
        if (body + sz > bytes.size())
            throw DataFormatError(path + ": chunk extends past end of file");
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (sz < 16) throw DataFormatError(path + ": fmt chunk too short");
            const uint16_t format = detail::read_u16le(bytes.data() + body);
            channels = detail::read_u16le(bytes.data() + body + 2);
            rate = detail::read_u32le(bytes.data() + body + 4);
            const uint16_t bits = detail::read_u16le(bytes.data() + body + 14);
            if (format != 1)
                throw DataFormatError(path + ": unsupported WAVE encoding " +
                                      std::to_string(format) + " (only integer PCM)");
            if (bits != 16)
                throw DataFormatError(path + ": unsupported sample width " +
                                      std::to_string(bits) + " bits (only 16)");
            if (channels != 1 && channels != 2)
                throw DataFormatError(path + ": unsupported channel count " +
                                      std::to_string(channels));
            if (rate == 0) throw DataFormatError(path + ": zero sample rate");
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data_off = body;
            data_len = sz;
            have_data = true;
        }
        off = body + sz + (sz & 1u);  // chunks are word-aligned
    }
    if (!have_fmt) throw DataFormatError(path + ": missing fmt chunk");
    if (!have_data) throw DataFormatError(path + ": missing data chunk");

    const size_t bytes_per_frame = 2u * channels;
    if (data_len % bytes_per_frame != 0)
        throw DataFormatError(path + ": data chunk is not a whole number of sample frames");
    const size_t n = data_len / bytes_per_frame;
    if (n == 0) throw DataFormatError(path + ": no samples");

    AudioClip<T> clip;
    clip.sample_rate = static_cast<int>(rate);
    clip.samples.resize(n);
    const unsigned char* p = bytes.data() + data_off;
    const T scale = T(1) / T(32768);
    for (size_t i = 0; i < n; ++i) {
        const int16_t a = static_cast<int16_t>(detail::read_u16le(p));
        p += 2;
        if (channels == 1) {
            clip.samples[i] = static_cast<T>(a) * scale;
        } else {
            const int16_t b = static_cast<int16_t>(detail::read_u16le(p));
            p += 2;
            clip.samples[i] =
                (static_cast<T>(a) * scale + static_cast<T>(b) * scale) / T(2);
        }
    }
    return clip;
}

// Writes mono 16-bit PCM. Values are scaled by 32768, rounded to nearest and
// clamped to the representable range.
template <typename T>
void write_wav(const std::string& path, const AudioClip<T>& clip) {
    if (clip.sample_rate <= 0) throw std::invalid_argument("write_wav: sample rate must be positive");
    std::vector<unsigned char> out;
    const uint32_t data_len = static_cast<uint32_t>(clip.samples.size() * 2);
    out.reserve(44 + data_len);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    detail::push_u32le(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    detail::push_u32le(out, 16);
    detail::push_u16le(out, 1);  // integer PCM
    detail::push_u16le(out, 1);  // mono
    detail::push_u32le(out, static_cast<uint32_t>(clip.sample_rate));
    detail::push_u32le(out, static_cast<uint32_t>(clip.sample_rate) * 2);
    detail::push_u16le(out, 2);
    detail::push_u16le(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    detail::push_u32le(out, data_len);
    for (const T v : clip.samples) {
        long q = std::lround(static_cast<double>(v) * 32768.0);
        q = std::min(32767l, std::max(-32768l, q));
        detail::push_u16le(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw MissingInputError("cannot create audio file: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataFormatError("failed writing audio file: " + path);
}

}  // namespace impress
