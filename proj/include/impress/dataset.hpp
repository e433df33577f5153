#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "impress/audio_features.hpp"
#include "impress/csv.hpp"
#include "impress/errors.hpp"
#include "impress/rng.hpp"
#include "impress/tensor.hpp"
#include "impress/wav.hpp"

namespace impress {

inline constexpr int kFrameSize = 112;

// ---------------------------------------------------------------------------
// Manifest.
// ---------------------------------------------------------------------------

struct SampleRecord {
    std::string video_id;
    std::string frames_dir;  // resolved against the manifest's directory
    std::string audio_path;
    bool has_traits = false;
    std::array<double, 5> traits{};
};

// Header is either `video_id,frames_dir,audio_path,e,a,c,n,o` or the first
// three columns alone (test sets without ground truth). Paths are taken
// relative to the manifest location; duplicates and out-of-range traits are
// rejected, as are records whose files are absent.
inline std::vector<SampleRecord> load_manifest(const std::string& path) {
    namespace fs = std::filesystem;
    const auto lines = read_lines(path);
    if (lines.empty()) throw DataFormatError(path + ": empty manifest");
    const std::string with_traits = "video_id,frames_dir,audio_path,e,a,c,n,o";
    const std::string without_traits = "video_id,frames_dir,audio_path";
    bool has_traits;
    if (lines[0] == with_traits)
        has_traits = true;
    else if (lines[0] == without_traits)
        has_traits = false;
    else
        throw DataFormatError(path + ": unrecognized manifest header '" + lines[0] + "'");

    const fs::path base = fs::path(path).parent_path();
    const size_t want = has_traits ? 8 : 3;
    std::vector<SampleRecord> records;
    std::set<std::string> seen;
    for (size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv_line(lines[i]);
        const std::string where = path + " row " + std::to_string(i + 1);
        if (fields.size() != want)
            throw DataFormatError(where + ": expected " + std::to_string(want) + " fields, got " +
                                  std::to_string(fields.size()));
        SampleRecord rec;
        rec.video_id = fields[0];
        if (rec.video_id.empty()) throw DataFormatError(where + ": empty video_id");
        if (!seen.insert(rec.video_id).second)
            throw DataFormatError(path + ": duplicate video_id '" + rec.video_id + "'");
        rec.frames_dir = (base / fields[1]).string();
        rec.audio_path = (base / fields[2]).string();
        if (!fs::is_directory(rec.frames_dir))
            throw MissingInputError(where + ": frames directory not found: " + rec.frames_dir);
        if (!fs::is_regular_file(rec.audio_path))
            throw MissingInputError(where + ": audio file not found: " + rec.audio_path);
        rec.has_traits = has_traits;
        if (has_traits)
            for (int t = 0; t < 5; ++t) {
                rec.traits[t] = parse_double_field(fields[3 + t], where);
                if (!(rec.traits[t] >= 0.0 && rec.traits[t] <= 1.0))
                    throw DataFormatError(where + ": trait value " + fields[3 + t] +
                                          " outside [0,1]");
            }
        records.push_back(std::move(rec));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Frame images: binary PPM, maxval 255, decoded to channel-major [0,1].
// ---------------------------------------------------------------------------

namespace detail {

// PPM header tokens are separated by whitespace; '#' starts a comment that
// runs to end of line.
inline std::string ppm_token(std::istream& in, const std::string& path) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw DataFormatError(path + ": truncated image header");
    return tok;
}

}  // namespace detail

template <typename T>
Tensor<T> load_frame(const std::string& path, int expected_size = kFrameSize) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open frame: " + path);
    if (detail::ppm_token(in, path) != "P6")
        throw DataFormatError(path + ": not a binary PPM (P6) file");
    int w, h, maxval;
    try {
        w = std::stoi(detail::ppm_token(in, path));
        h = std::stoi(detail::ppm_token(in, path));
        maxval = std::stoi(detail::ppm_token(in, path));
    } catch (const std::exception&) {
        throw DataFormatError(path + ": malformed image header");
    }
    if (w != expected_size || h != expected_size)
        throw DataFormatError(path + ": image is " + std::to_string(w) + "x" + std::to_string(h) +
                              ", expected " + std::to_string(expected_size) + "x" +
                              std::to_string(expected_size));
    if (maxval != 255) throw DataFormatError(path + ": maxval " + std::to_string(maxval) +
                                             ", expected 255");
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw DataFormatError(path + ": truncated pixel payload");

    Tensor<T> img({3, h, w});
    const size_t plane = static_cast<size_t>(w) * h;
    for (size_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c)
            img[static_cast<size_t>(c) * plane + p] = static_cast<T>(raw[p * 3 + c]) / T(255);
    return img;
}

// Inverse of load_frame; exact for tensors whose values are k/255.
template <typename T>
void write_frame_ppm(const std::string& path, const Tensor<T>& img) {
    if (img.rank() != 3 || img.dim(0) != 3)
        throw std::invalid_argument("write_frame_ppm: expected (3,H,W), got " + shape_str(img.shape));
    const int h = img.dim(1), w = img.dim(2);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingInputError("cannot create frame: " + path);
    out << "P6\n" << w << " " << h << "\n255\n";
    const size_t plane = static_cast<size_t>(w) * h;
    std::vector<unsigned char> raw(plane * 3);
    for (size_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c) {
            long q = std::lround(static_cast<double>(img[static_cast<size_t>(c) * plane + p]) * 255.0);
            raw[p * 3 + c] = static_cast<unsigned char>(std::min(255l, std::max(0l, q)));
        }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataFormatError("failed writing frame: " + path);
}

// Frame files in lexicographic order define temporal order.
inline std::vector<std::string> list_frames(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ppm")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    return paths;
}

// ---------------------------------------------------------------------------
// Fully decoded dataset, ready for training.
// ---------------------------------------------------------------------------

template <typename T>
struct LoadedSample {
    std::string video_id;
    uint64_t video_hash = 0;  // seeds the per-video sampling stream
    std::vector<Tensor<T>> frames;
    Tensor<T> audio_features;  // (n_partitions, 68)
    bool has_traits = false;
    Tensor<T> traits;  // (5) when present
};

template <typename T>
struct LoadedDataset {
    std::vector<LoadedSample<T>> samples;
};

template <typename T>
LoadedDataset<T> load_dataset(const std::string& manifest_path, const FeatureConfig& features = {},
                              int frame_size = kFrameSize) {
    const auto records = load_manifest(manifest_path);
    if (records.empty()) throw DataFormatError(manifest_path + ": manifest has no rows");
    LoadedDataset<T> ds;
    ds.samples.reserve(records.size());
    for (const SampleRecord& rec : records) {
        LoadedSample<T> s;
        s.video_id = rec.video_id;
        s.video_hash = fnv1a64(rec.video_id);
        const auto frame_paths = list_frames(rec.frames_dir);
        if (static_cast<int>(frame_paths.size()) < features.n_partitions)
            throw DataFormatError("video '" + rec.video_id + "': " +
                                  std::to_string(frame_paths.size()) + " frames cannot fill " +
                                  std::to_string(features.n_partitions) + " partitions");
        s.frames.reserve(frame_paths.size());
        for (const auto& fp : frame_paths) s.frames.push_back(load_frame<T>(fp, frame_size));
        const AudioClip<T> clip = load_wav<T>(rec.audio_path);
        s.audio_features = extract_features(clip, features);
        s.has_traits = rec.has_traits;
        if (rec.has_traits) {
            s.traits = Tensor<T>({5});
            for (int t = 0; t < 5; ++t) s.traits[t] = static_cast<T>(rec.traits[t]);
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Synthetic dataset generator.
//
// Videos form a grid of visual identities x audio identities. A visual
// identity fixes traits 1-2 (red-channel brightness; green-square x
// position) and the whole frame jitter sequence; an audio identity fixes
// traits 3-4 (tone frequency; amplitude-modulation rate). Videos sharing a
// visual identity have byte-identical frames, so no model can recover their
// audio traits from pixels; the same holds with the roles swapped. Trait 5
// is the mean of the other four. This is what makes the single-modality
// ablation floors provable rather than merely observed.
// ---------------------------------------------------------------------------

struct SyntheticConfig {
    int n_videos = 20;
    int frames_per_video = 36;  // 6 per partition with the default N=6
    int frame_size = kFrameSize;
    int sample_rate = 16000;
    double audio_seconds = 15.0;
    int square_size = 20;
};

namespace detail {

// Stratified value inside cell `index` of `count` cells spanning
// [0.08, 0.92]: spacing between identities is guaranteed.
inline double stratified_trait(int index, int count, double u) {
    const double width = 0.84 / count;
    return 0.08 + (index + 0.25 + 0.5 * u) * width;
}

// A multiplier coprime to `count`, so index -> (index*a + b) % count
// permutes cells and the second trait keeps full spread.
inline int coprime_multiplier(int count) {
    for (int a = 3;; a += 2)
        if (std::gcd(a, count) == 1) return a;
}

inline std::string synth_trait_str(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Writes frames/, audio, manifest.csv and targets.csv under out_dir and
// returns the manifest path. Byte-identical output for equal (seed, config).
inline std::string generate_synthetic_dataset(int n_videos, uint64_t seed,
                                              const std::string& out_dir,
                                              const SyntheticConfig& cfg_in = {}) {
    namespace fs = std::filesystem;
    SyntheticConfig cfg = cfg_in;
    cfg.n_videos = n_videos;
    if (n_videos < 1) throw std::invalid_argument("generate_synthetic_dataset: need videos >= 1");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw MissingInputError("cannot create output directory: " + out_dir);

    const int n_visual = std::max(1, static_cast<int>(std::lround(std::sqrt(n_videos))));
    const int n_audio = (n_videos + n_visual - 1) / n_visual;

    // Per-identity parameter and jitter streams.
    struct VisualIdentity {
        double t1, t2;
        std::vector<int> dx, dy;
    };
    std::vector<VisualIdentity> visuals(n_visual);
    const int mul_v = detail::coprime_multiplier(n_visual);
    for (int i = 0; i < n_visual; ++i) {
        SplitMix64 rng(seed_combine(seed_combine(seed, 1), static_cast<uint64_t>(i)));
        visuals[i].t1 = detail::stratified_trait(i, n_visual, rng.unit());
        visuals[i].t2 = detail::stratified_trait((i * mul_v + 1) % n_visual, n_visual, rng.unit());
        visuals[i].dx.resize(cfg.frames_per_video);
        visuals[i].dy.resize(cfg.frames_per_video);
        for (int f = 0; f < cfg.frames_per_video; ++f) {
            visuals[i].dx[f] = static_cast<int>(rng.below(5)) - 2;
            visuals[i].dy[f] = static_cast<int>(rng.below(5)) - 2;
        }
    }
    struct AudioIdentity {
        double t3, t4;
    };
    std::vector<AudioIdentity> audios(n_audio);
    const int mul_a = detail::coprime_multiplier(n_audio);
    for (int j = 0; j < n_audio; ++j) {
        SplitMix64 rng(seed_combine(seed_combine(seed, 2), static_cast<uint64_t>(j)));
        audios[j].t3 = detail::stratified_trait(j, n_audio, rng.unit());
        audios[j].t4 = detail::stratified_trait((j * mul_a + 1) % n_audio, n_audio, rng.unit());
    }

    std::string manifest = (fs::path(out_dir) / "manifest.csv").string();
    std::ofstream mf(manifest);
    std::ofstream tf((fs::path(out_dir) / "targets.csv").string());
    if (!mf || !tf) throw MissingInputError("cannot create manifest under: " + out_dir);
    mf << "video_id,frames_dir,audio_path,e,a,c,n,o\n";
    tf << "video_id,e,a,c,n,o\n";

    const int size = cfg.frame_size;
    const size_t plane = static_cast<size_t>(size) * size;
    const int travel = size - cfg.square_size;
    for (int v = 0; v < n_videos; ++v) {
        const int vi = v % n_visual;
        const int aj = v / n_visual;
        const VisualIdentity& V = visuals[vi];
        const AudioIdentity& A = audios[aj];
        const double t5 = (V.t1 + V.t2 + A.t3 + A.t4) / 4.0;

        char id[16];
        std::snprintf(id, sizeof(id), "vid%03d", v);
        const fs::path vdir = fs::path(out_dir) / id;
        fs::create_directories(vdir / "frames", ec);
        if (ec) throw MissingInputError("cannot create video directory: " + (vdir / "frames").string());

        // Frames: red channel encodes t1 as brightness, green holds a bright
        // square whose x position encodes t2 (with the identity's jitter),
        // blue is constant.
        const unsigned char red = static_cast<unsigned char>(std::lround(255.0 * (0.1 + 0.8 * V.t1)));
        const int base_x = static_cast<int>(std::lround(V.t2 * travel));
        const int base_y = travel / 2;
        for (int f = 0; f < cfg.frames_per_video; ++f) {
            const int x0 = std::min(travel, std::max(0, base_x + V.dx[f]));
            const int y0 = std::min(travel, std::max(0, base_y + V.dy[f]));
            std::vector<unsigned char> raw(plane * 3);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) {
                    const size_t p = (static_cast<size_t>(y) * size + x) * 3;
                    const bool in_square = x >= x0 && x < x0 + cfg.square_size && y >= y0 &&
                                           y < y0 + cfg.square_size;
                    raw[p] = red;
                    raw[p + 1] = in_square ? 230 : 26;
                    raw[p + 2] = 128;
                }
            char fname[16];
            std::snprintf(fname, sizeof(fname), "f%04d.ppm", f);
            std::ofstream pf(vdir / "frames" / fname, std::ios::binary);
            if (!pf) throw MissingInputError("cannot create frame under: " + vdir.string());
            pf << "P6\n" << size << " " << size << "\n255\n";
            pf.write(reinterpret_cast<const char*>(raw.data()),
                     static_cast<std::streamsize>(raw.size()));
        }

        // Audio: carrier frequency encodes t3, amplitude-modulation rate
        // encodes t4. Identical for all videos sharing the audio identity.
        const double carrier_hz = 400.0 + 1600.0 * A.t3;
        const double am_hz = 50.0 + 200.0 * A.t4;
        AudioClip<double> clip;
        clip.sample_rate = cfg.sample_rate;
        const size_t n_samples = static_cast<size_t>(std::lround(cfg.audio_seconds * cfg.sample_rate));
        clip.samples.resize(n_samples);
        for (size_t s = 0; s < n_samples; ++s) {
            const double t = static_cast<double>(s) / cfg.sample_rate;
            const double envelope = 0.55 + 0.45 * std::sin(2.0 * M_PI * am_hz * t);
            clip.samples[s] = 0.7 * envelope * std::sin(2.0 * M_PI * carrier_hz * t);
        }
        const std::string wav_rel = std::string(id) + "/audio.wav";
        write_wav((fs::path(out_dir) / wav_rel).string(), clip);

        mf << id << "," << id << "/frames," << wav_rel;
        tf << id;
        for (const double t : {V.t1, V.t2, A.t3, A.t4, t5}) {
            mf << "," << detail::synth_trait_str(t);
            tf << "," << detail::synth_trait_str(t);
        }
        mf << "\n";
        tf << "\n";
    }
    return manifest;
}

}  // namespace impress
