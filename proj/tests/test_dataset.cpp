#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "impress/csv.hpp"
#include "impress/dataset.hpp"
#include "impress/rng.hpp"
#include "impress/wav.hpp"

namespace fs = std::filesystem;
using impress::SplitMix64;
using impress::Tensor;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    auto p = fs::temp_directory_path() / ("impress_dataset_test_" + std::to_string(counter++));
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

// A syntactically complete video: frames directory with `n` small frames
// plus a short mono wav.
void make_video(const fs::path& root, const std::string& id, int n_frames, int size = 16) {
    fs::create_directories(root / id / "frames");
    SplitMix64 rng(impress::fnv1a64(id));
    for (int f = 0; f < n_frames; ++f) {
        Tensor<double> img({3, size, size});
        for (auto& v : img.data) v = static_cast<double>(rng.below(256)) / 255.0;
        char name[16];
        std::snprintf(name, sizeof(name), "f%04d.ppm", f);
        impress::write_frame_ppm((root / id / "frames" / name).string(), img);
    }
    impress::AudioClip<double> clip;
    clip.sample_rate = 8000;
    clip.samples.resize(8000);
    for (size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = 0.5 * std::sin(2.0 * M_PI * 440.0 * i / 8000.0);
    impress::write_wav((root / id / "audio.wav").string(), clip);
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
}

// Byte-compare two directory trees by relative path.
void require_identical_trees(const fs::path& a, const fs::path& b) {
    std::map<std::string, fs::path> fa, fb;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) fa[fs::relative(e.path(), a).string()] = e.path();
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) fb[fs::relative(e.path(), b).string()] = e.path();
    REQUIRE(fa.size() == fb.size());
    for (const auto& [rel, pa] : fa) {
        INFO("file " << rel);
        REQUIRE(fb.count(rel) == 1);
        REQUIRE(slurp(pa) == slurp(fb[rel]));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// PPM frames
// ---------------------------------------------------------------------------

TEST_CASE("frames round trip losslessly at 8-bit resolution", "[dataset][ppm]") {
    const auto dir = temp_dir();
    const auto path = (dir / "frame.ppm").string();
    Tensor<double> img({3, 16, 16});
    SplitMix64 rng(5);
    for (auto& v : img.data) v = static_cast<double>(rng.below(256)) / 255.0;
    impress::write_frame_ppm(path, img);
    const auto back = impress::load_frame<double>(path, 16);
    REQUIRE(back.shape == img.shape);
    for (size_t i = 0; i < img.numel(); ++i)
        REQUIRE_THAT(back[i], Catch::Matchers::WithinAbs(img[i], 1e-12));

    // all-white stays exactly 1
    img.fill(1.0);
    impress::write_frame_ppm(path, img);
    const auto white = impress::load_frame<double>(path, 16);
    for (double v : white.data) REQUIRE(v == 1.0);
}

TEST_CASE("frame layout is channel-major in [0,1]", "[dataset][ppm]") {
    const auto dir = temp_dir();
    const auto path = (dir / "rgb.ppm").string();
    // 2x2: red, green, blue, gray pixels; a comment sits inside the header
    std::ofstream f(path, std::ios::binary);
    f << "P6\n# a comment\n2 2\n255\n";
    const unsigned char px[12] = {255, 0, 0, 0, 255, 0, 0, 0, 255, 51, 51, 51};
    f.write(reinterpret_cast<const char*>(px), 12);
    f.close();
    const auto img = impress::load_frame<double>(path, 2);
    REQUIRE(img.shape == std::vector<int>{3, 2, 2});
    // red plane
    REQUIRE(img[0] == 1.0);
    REQUIRE(img[1] == 0.0);
    REQUIRE(img[2] == 0.0);
    REQUIRE_THAT(img[3], Catch::Matchers::WithinAbs(0.2, 1e-12));
    // green plane
    REQUIRE(img[4] == 0.0);
    REQUIRE(img[5] == 1.0);
    // blue plane
    REQUIRE(img[10] == 1.0);
}

TEST_CASE("frame loader rejects malformed files", "[dataset][ppm]") {
    const auto dir = temp_dir();
    REQUIRE_THROWS_AS(impress::load_frame<double>((dir / "none.ppm").string(), 16),
                      impress::MissingInputError);

    const auto p5 = (dir / "gray.ppm").string();
    write_text(p5, "P5\n16 16\n255\n");
    REQUIRE_THROWS_AS(impress::load_frame<double>(p5, 16), impress::DataFormatError);

    const auto wrong = (dir / "wrong.ppm").string();
    {
        Tensor<double> img({3, 8, 8});
        impress::write_frame_ppm(wrong, img);
    }
    REQUIRE_THROWS_WITH(impress::load_frame<double>(wrong, 16),
                        Catch::Matchers::ContainsSubstring("8x8"));

    const auto deep = (dir / "deep.ppm").string();
    write_text(deep, "P6\n16 16\n65535\n");
    REQUIRE_THROWS_AS(impress::load_frame<double>(deep, 16), impress::DataFormatError);

    const auto cut = (dir / "cut.ppm").string();
    std::ofstream f(cut, std::ios::binary);
    f << "P6\n16 16\n255\n";
    f.write("abc", 3);
    f.close();
    REQUIRE_THROWS_WITH(impress::load_frame<double>(cut, 16),
                        Catch::Matchers::ContainsSubstring("truncated"));
}

TEST_CASE("frame order is lexicographic and ignores other files", "[dataset][ppm]") {
    const auto dir = temp_dir();
    Tensor<double> img({3, 4, 4});
    for (const char* name : {"f0002.ppm", "f0000.ppm", "f0001.ppm"})
        impress::write_frame_ppm((dir / name).string(), img);
    write_text(dir / "notes.txt", "ignore me");
    const auto frames = impress::list_frames(dir.string());
    REQUIRE(frames.size() == 3);
    REQUIRE(frames[0] < frames[1]);
    REQUIRE(frames[1] < frames[2]);
    REQUIRE(frames[0].find("f0000") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

TEST_CASE("manifest with traits parses and resolves paths", "[dataset][manifest]") {
    const auto dir = temp_dir();
    make_video(dir, "vidA", 6);
    make_video(dir, "vidB", 6);
    const auto manifest = dir / "manifest.csv";
    write_text(manifest,
               "video_id,frames_dir,audio_path,e,a,c,n,o\n"
               "vidA,vidA/frames,vidA/audio.wav,0.1,0.2,0.3,0.4,0.5\n"
               "vidB,vidB/frames,vidB/audio.wav,1,0,0.25,0.75,0.5\n");
    const auto recs = impress::load_manifest(manifest.string());
    REQUIRE(recs.size() == 2);
    REQUIRE(recs[0].video_id == "vidA");
    REQUIRE(recs[0].has_traits);
    REQUIRE(recs[0].traits == std::array<double, 5>{0.1, 0.2, 0.3, 0.4, 0.5});
    REQUIRE(recs[1].traits[0] == 1.0);
    REQUIRE(fs::is_directory(recs[1].frames_dir));
    REQUIRE(fs::is_regular_file(recs[1].audio_path));
}

TEST_CASE("manifest without trait columns marks records accordingly", "[dataset][manifest]") {
    const auto dir = temp_dir();
    make_video(dir, "vidA", 6);
    const auto manifest = dir / "test.csv";
    write_text(manifest,
               "video_id,frames_dir,audio_path\n"
               "vidA,vidA/frames,vidA/audio.wav\n");
    const auto recs = impress::load_manifest(manifest.string());
    REQUIRE(recs.size() == 1);
    REQUIRE_FALSE(recs[0].has_traits);
}

TEST_CASE("manifest validation failures name the offender", "[dataset][manifest]") {
    const auto dir = temp_dir();
    make_video(dir, "vidA", 6);

    const auto dup = dir / "dup.csv";
    write_text(dup,
               "video_id,frames_dir,audio_path,e,a,c,n,o\n"
               "vidA,vidA/frames,vidA/audio.wav,0.1,0.2,0.3,0.4,0.5\n"
               "vidA,vidA/frames,vidA/audio.wav,0.1,0.2,0.3,0.4,0.5\n");
    REQUIRE_THROWS_WITH(impress::load_manifest(dup.string()),
                        Catch::Matchers::ContainsSubstring("duplicate") &&
                            Catch::Matchers::ContainsSubstring("vidA"));

    const auto range = dir / "range.csv";
    write_text(range,
               "video_id,frames_dir,audio_path,e,a,c,n,o\n"
               "vidA,vidA/frames,vidA/audio.wav,0.1,0.2,1.3,0.4,0.5\n");
    REQUIRE_THROWS_WITH(impress::load_manifest(range.string()),
                        Catch::Matchers::ContainsSubstring("outside [0,1]"));

    const auto missing = dir / "missing.csv";
    write_text(missing,
               "video_id,frames_dir,audio_path,e,a,c,n,o\n"
               "vidZ,vidZ/frames,vidZ/audio.wav,0.1,0.2,0.3,0.4,0.5\n");
    REQUIRE_THROWS_AS(impress::load_manifest(missing.string()), impress::MissingInputError);

    const auto header = dir / "header.csv";
    write_text(header, "id,frames,audio\nvidA,vidA/frames,vidA/audio.wav\n");
    REQUIRE_THROWS_WITH(impress::load_manifest(header.string()),
                        Catch::Matchers::ContainsSubstring("header"));

    const auto fields = dir / "fields.csv";
    write_text(fields,
               "video_id,frames_dir,audio_path,e,a,c,n,o\n"
               "vidA,vidA/frames,vidA/audio.wav,0.1,0.2\n");
    REQUIRE_THROWS_WITH(impress::load_manifest(fields.string()),
                        Catch::Matchers::ContainsSubstring("expected 8 fields"));

    REQUIRE_THROWS_AS(impress::load_manifest((dir / "nothere.csv").string()),
                      impress::MissingInputError);
}

// ---------------------------------------------------------------------------
// Full dataset loading
// ---------------------------------------------------------------------------

TEST_CASE("datasets decode frames and audio features together", "[dataset][load]") {
    const auto dir = temp_dir();
    impress::SyntheticConfig cfg;
    cfg.frames_per_video = 12;
    cfg.frame_size = 16;
    cfg.sample_rate = 8000;
    cfg.audio_seconds = 3.0;
    const auto manifest = impress::generate_synthetic_dataset(4, 99, dir.string(), cfg);

    const auto ds = impress::load_dataset<float>(manifest, impress::FeatureConfig{}, 16);
    REQUIRE(ds.samples.size() == 4);
    for (const auto& s : ds.samples) {
        REQUIRE(s.frames.size() == 12);
        for (const auto& f : s.frames) REQUIRE(f.shape == std::vector<int>{3, 16, 16});
        REQUIRE(s.audio_features.shape == std::vector<int>{6, 68});
        REQUIRE(s.has_traits);
        REQUIRE(s.traits.numel() == 5);
        for (float t : s.traits.data) {
            REQUIRE(t >= 0.0f);
            REQUIRE(t <= 1.0f);
        }
        REQUIRE(s.video_hash == impress::fnv1a64(s.video_id));
    }
}

TEST_CASE("videos with too few frames are rejected by id", "[dataset][load]") {
    const auto dir = temp_dir();
    make_video(dir, "tiny", 3);  // cannot fill 6 partitions
    const auto manifest = dir / "manifest.csv";
    write_text(manifest,
               "video_id,frames_dir,audio_path,e,a,c,n,o\n"
               "tiny,tiny/frames,tiny/audio.wav,0.1,0.2,0.3,0.4,0.5\n");
    REQUIRE_THROWS_WITH((impress::load_dataset<double>(manifest.string(),
                                                       impress::FeatureConfig{}, 16)),
                        Catch::Matchers::ContainsSubstring("tiny"));
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

TEST_CASE("generator output is a pure function of seed and config", "[dataset][synth]") {
    const auto a = temp_dir(), b = temp_dir(), c = temp_dir();
    impress::SyntheticConfig cfg;
    cfg.frames_per_video = 12;
    cfg.frame_size = 16;
    cfg.sample_rate = 8000;
    cfg.audio_seconds = 3.0;
    impress::generate_synthetic_dataset(6, 1234, a.string(), cfg);
    impress::generate_synthetic_dataset(6, 1234, b.string(), cfg);
    require_identical_trees(a, b);

    impress::generate_synthetic_dataset(6, 1235, c.string(), cfg);
    REQUIRE(slurp(a / "targets.csv") != slurp(c / "targets.csv"));
}

TEST_CASE("generator emits a complete, in-range dataset", "[dataset][synth]") {
    const auto dir = temp_dir();
    impress::SyntheticConfig cfg;
    cfg.frames_per_video = 12;
    cfg.frame_size = 16;
    cfg.sample_rate = 8000;
    cfg.audio_seconds = 3.0;
    const auto manifest = impress::generate_synthetic_dataset(6, 42, dir.string(), cfg);
    REQUIRE(fs::is_regular_file(manifest));
    REQUIRE(fs::is_regular_file(dir / "targets.csv"));

    const auto recs = impress::load_manifest(manifest);
    REQUIRE(recs.size() == 6);
    int frame_files = 0, wav_files = 0;
    for (const auto& rec : recs) {
        frame_files += static_cast<int>(impress::list_frames(rec.frames_dir).size());
        wav_files += fs::is_regular_file(rec.audio_path) ? 1 : 0;
        for (double t : rec.traits) {
            REQUIRE(t >= 0.05);
            REQUIRE(t <= 0.95);
        }
    }
    REQUIRE(frame_files == 72);
    REQUIRE(wav_files == 6);

    // targets.csv mirrors the manifest's trait columns
    const auto tlines = impress::read_lines((dir / "targets.csv").string());
    REQUIRE(tlines.size() == 7);
    REQUIRE(tlines[0] == "video_id,e,a,c,n,o");
    for (size_t i = 1; i < tlines.size(); ++i) {
        const auto f = impress::split_csv_line(tlines[i]);
        REQUIRE(f.size() == 6);
        REQUIRE(f[0] == recs[i - 1].video_id);
        for (int t = 0; t < 5; ++t)
            REQUIRE(impress::parse_double_field(f[1 + t], "targets") == recs[i - 1].traits[t]);
    }

    // the fifth trait is exactly the mean of the other four as emitted
    for (const auto& rec : recs) {
        const double mean = (rec.traits[0] + rec.traits[1] + rec.traits[2] + rec.traits[3]) / 4.0;
        REQUIRE(rec.traits[4] == mean);
    }
}

TEST_CASE("identity grid ties modality content to its traits", "[dataset][synth]") {
    const auto dir = temp_dir();
    impress::SyntheticConfig cfg;
    cfg.frames_per_video = 12;
    cfg.frame_size = 16;
    cfg.sample_rate = 8000;
    cfg.audio_seconds = 3.0;
    // 6 videos -> 2 visual identities x 3 audio identities
    const auto manifest = impress::generate_synthetic_dataset(6, 77, dir.string(), cfg);
    const auto recs = impress::load_manifest(manifest);

    auto frames_of = [&](int v) {
        std::vector<std::vector<char>> out;
        for (const auto& p : impress::list_frames(recs[v].frames_dir)) out.push_back(slurp(p));
        return out;
    };
    // vid0 and vid2 share the visual identity (v % 2): identical frames,
    // identical visual traits
    REQUIRE(frames_of(0) == frames_of(2));
    REQUIRE(recs[0].traits[0] == recs[2].traits[0]);
    REQUIRE(recs[0].traits[1] == recs[2].traits[1]);
    REQUIRE(frames_of(0) != frames_of(1));
    REQUIRE(recs[0].traits[0] != recs[1].traits[0]);

    // vid0 and vid1 share the audio identity (v / 2): identical wav bytes,
    // identical audio traits
    REQUIRE(slurp(recs[0].audio_path) == slurp(recs[1].audio_path));
    REQUIRE(recs[0].traits[2] == recs[1].traits[2]);
    REQUIRE(recs[0].traits[3] == recs[1].traits[3]);
    REQUIRE(slurp(recs[0].audio_path) != slurp(recs[2].audio_path));
    REQUIRE(recs[0].traits[2] != recs[2].traits[2]);

    // neither modality alone separates all six videos; the pair does
    std::set<std::pair<double, double>> visual_ids, audio_ids;
    std::set<std::array<double, 4>> joint;
    for (const auto& r : recs) {
        visual_ids.insert({r.traits[0], r.traits[1]});
        audio_ids.insert({r.traits[2], r.traits[3]});
        joint.insert({r.traits[0], r.traits[1], r.traits[2], r.traits[3]});
    }
    REQUIRE(visual_ids.size() == 2);
    REQUIRE(audio_ids.size() == 3);
    REQUIRE(joint.size() == 6);
}

TEST_CASE("generated data loads and samples end to end", "[dataset][synth]") {
    const auto dir = temp_dir();
    impress::SyntheticConfig cfg;
    cfg.frames_per_video = 12;
    cfg.frame_size = 16;
    cfg.sample_rate = 8000;
    cfg.audio_seconds = 3.0;
    const auto manifest = impress::generate_synthetic_dataset(2, 7, dir.string(), cfg);
    const auto ds = impress::load_dataset<double>(manifest, impress::FeatureConfig{}, 16);
    REQUIRE(ds.samples.size() == 2);
    // features differ across audio identities (2 videos -> 1 visual, 2 audio)
    bool differ = false;
    for (size_t i = 0; i < ds.samples[0].audio_features.numel(); ++i)
        if (ds.samples[0].audio_features[i] != ds.samples[1].audio_features[i]) differ = true;
    REQUIRE(differ);
}
