#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "impress/audio_features.hpp"
#include "impress/dft.hpp"
#include "impress/errors.hpp"
#include "impress/rng.hpp"
#include "impress/wav.hpp"
#include "support/oracles.hpp"

using impress::AudioClip;
using impress::SplitMix64;

namespace {

std::vector<double> random_signal(size_t n, uint64_t seed, double amp = 1.0) {
    SplitMix64 rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.symmetric(amp);
    return x;
}

std::vector<double> tone(size_t n, double hz, int rate, double amp = 1.0) {
    std::vector<double> x(n);
    for (size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * M_PI * hz * i / rate);
    return x;
}

std::filesystem::path temp_dir() {
    static int counter = 0;
    auto p = std::filesystem::temp_directory_path() /
             ("impress_audio_test_" + std::to_string(counter++));
    std::filesystem::create_directories(p);
    return p;
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& b) {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

void push_u16(std::vector<unsigned char>& b, uint16_t v) {
    b.push_back(static_cast<unsigned char>(v & 0xff));
    b.push_back(static_cast<unsigned char>(v >> 8));
}

void push_u32(std::vector<unsigned char>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

// Hand-assembled WAVE container: optional odd-length junk chunk before fmt,
// arbitrary channel count, interleaved i16 samples.
std::vector<unsigned char> make_wav(const std::vector<int16_t>& interleaved, uint16_t channels,
                                    uint32_t rate, bool junk_chunk) {
    std::vector<unsigned char> body;
    if (junk_chunk) {
        body.insert(body.end(), {'L', 'I', 'S', 'T'});
        push_u32(body, 3);
        body.insert(body.end(), {'a', 'b', 'c', 0});  // 3 bytes + pad
    }
    body.insert(body.end(), {'f', 'm', 't', ' '});
    push_u32(body, 16);
    push_u16(body, 1);
    push_u16(body, channels);
    push_u32(body, rate);
    push_u32(body, rate * 2u * channels);
    push_u16(body, static_cast<uint16_t>(2 * channels));
    push_u16(body, 16);
    body.insert(body.end(), {'d', 'a', 't', 'a'});
    push_u32(body, static_cast<uint32_t>(interleaved.size() * 2));
    for (int16_t s : interleaved) push_u16(body, static_cast<uint16_t>(s));
    std::vector<unsigned char> out;
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    push_u32(out, static_cast<uint32_t>(4 + body.size()));
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// WAV container
// ---------------------------------------------------------------------------

TEST_CASE("wav samples scale to [-1,1) by 1/32768", "[audio][wav]") {
    const auto dir = temp_dir();
    const auto path = (dir / "mono.wav").string();
    write_bytes(path, make_wav({16384, -16384, 32767, -32768, 0}, 1, 16000, false));
    const auto clip = impress::load_wav<double>(path);
    REQUIRE(clip.sample_rate == 16000);
    REQUIRE(clip.samples.size() == 5);
    REQUIRE(clip.samples[0] == 0.5);
    REQUIRE(clip.samples[1] == -0.5);
    REQUIRE_THAT(clip.samples[2], Catch::Matchers::WithinAbs(32767.0 / 32768.0, 1e-15));
    REQUIRE(clip.samples[3] == -1.0);
    REQUIRE(clip.samples[4] == 0.0);
}

TEST_CASE("stereo wav collapses to the channel average", "[audio][wav]") {
    const auto dir = temp_dir();
    const auto path = (dir / "stereo.wav").string();
    // frames: (16384,16384) -> 0.5, (16384,-16384) -> 0, (0,-32768) -> -0.5
    write_bytes(path, make_wav({16384, 16384, 16384, -16384, 0, -32768}, 2, 8000, true));
    const auto clip = impress::load_wav<double>(path);
    REQUIRE(clip.sample_rate == 8000);
    REQUIRE(clip.samples.size() == 3);
    REQUIRE(clip.samples[0] == 0.5);
    REQUIRE(clip.samples[1] == 0.0);
    REQUIRE(clip.samples[2] == -0.5);
}

TEST_CASE("wav writer round trips within one quantization step", "[audio][wav]") {
    const auto dir = temp_dir();
    const auto path = (dir / "roundtrip.wav").string();
    AudioClip<double> clip;
    clip.sample_rate = 16000;
    clip.samples = tone(1600, 440.0, 16000, 0.9);
    impress::write_wav(path, clip);
    const auto back = impress::load_wav<double>(path);
    REQUIRE(back.sample_rate == clip.sample_rate);
    REQUIRE(back.samples.size() == clip.samples.size());
    for (size_t i = 0; i < back.samples.size(); ++i)
        REQUIRE_THAT(back.samples[i],
                     Catch::Matchers::WithinAbs(clip.samples[i], 1.0 / 32768.0));
}

TEST_CASE("wav loader rejects broken containers", "[audio][wav]") {
    const auto dir = temp_dir();
    REQUIRE_THROWS_AS(impress::load_wav<double>((dir / "absent.wav").string()),
                      impress::MissingInputError);

    const auto bad = (dir / "bad.wav").string();
    write_bytes(bad, {'n', 'o', 't', 'a', 'w', 'a', 'v', 'e', 'f', 'i', 'l', 'e'});
    REQUIRE_THROWS_AS(impress::load_wav<double>(bad), impress::DataFormatError);

    const auto trunc = (dir / "trunc.wav").string();
    auto bytes = make_wav({100, 200, 300}, 1, 8000, false);
    bytes.resize(bytes.size() - 3);  // data chunk now extends past EOF
    write_bytes(trunc, bytes);
    REQUIRE_THROWS_AS(impress::load_wav<double>(trunc), impress::DataFormatError);

    const auto bad_bits = (dir / "bits.wav").string();
    auto b2 = make_wav({100}, 1, 8000, false);
    b2[34 + 8] = 8;  // bits-per-sample byte inside fmt
    write_bytes(bad_bits, b2);
    REQUIRE_THROWS_AS(impress::load_wav<double>(bad_bits), impress::DataFormatError);
}

// ---------------------------------------------------------------------------
// Fourier transform
// ---------------------------------------------------------------------------

TEST_CASE("fast transform matches the direct definition", "[audio][dft]") {
    for (const int len : {4, 37, 64, 100, 337, 800}) {
        const auto x = random_signal(static_cast<size_t>(len), 9000 + len);
        const impress::Dft<double> plan(len);
        const auto fast = plan.transform(x);
        const auto direct = oracles::direct_dft(x);
        REQUIRE(fast.size() == direct.size());
        double scale = 1.0;
        for (const auto& v : direct) scale = std::max(scale, std::abs(v));
        for (int k = 0; k < len; ++k) {
            INFO("len=" << len << " bin=" << k);
            REQUIRE_THAT(fast[k].real(),
                         Catch::Matchers::WithinAbs(direct[k].real(), 1e-9 * scale));
            REQUIRE_THAT(fast[k].imag(),
                         Catch::Matchers::WithinAbs(direct[k].imag(), 1e-9 * scale));
        }
    }
}

TEST_CASE("magnitude spectrum keeps the first half of the bins", "[audio][dft]") {
    const int L = 800, rate = 16000;
    const auto x = tone(L, 2000.0, rate);  // exactly bin 100
    const impress::Dft<double> plan(L);
    const auto mag = plan.magnitudes(x);
    REQUIRE(mag.size() == 400);
    size_t peak = 0;
    for (size_t k = 1; k < mag.size(); ++k)
        if (mag[k] > mag[peak]) peak = k;
    REQUIRE(peak == 100);
    REQUIRE_THAT(mag[100], Catch::Matchers::WithinRel(L / 2.0, 1e-9));

    const auto zero = plan.magnitudes(std::vector<double>(L, 0.0));
    for (double v : zero) REQUIRE(v == 0.0);
}

TEST_CASE("transform length must match the plan", "[audio][dft]") {
    const impress::Dft<double> plan(64);
    REQUIRE_THROWS_AS(plan.transform(std::vector<double>(63, 0.0)), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Time-domain features
// ---------------------------------------------------------------------------

TEST_CASE("zero-crossing rate counts sign flips", "[audio][features]") {
    std::vector<double> alternating(8);
    for (size_t i = 0; i < 8; ++i) alternating[i] = (i % 2 == 0) ? 1.0 : -1.0;
    REQUIRE(impress::zcr(alternating) == 0.875);  // 7 flips / 8 samples
    REQUIRE(impress::zcr(std::vector<double>(16, 0.7)) == 0.0);
    REQUIRE(impress::zcr(std::vector<double>(16, 0.0)) == 0.0);
}

TEST_CASE("energy is the mean squared sample", "[audio][features]") {
    REQUIRE(impress::energy(std::vector<double>(10, 1.0)) == 1.0);
    REQUIRE(impress::energy(std::vector<double>(10, 0.0)) == 0.0);
    REQUIRE(impress::energy(std::vector<double>{0.5, -0.5}) == 0.25);
}

TEST_CASE("energy entropy spans [0, log2(10)]", "[audio][features]") {
    std::vector<double> concentrated(100, 0.0);
    concentrated[3] = 1.0;  // single sub-block carries everything
    REQUIRE(impress::energy_entropy(concentrated) == 0.0);

    const std::vector<double> uniform(100, 0.5);
    REQUIRE_THAT(impress::energy_entropy(uniform),
                 Catch::Matchers::WithinAbs(std::log2(10.0), 1e-12));

    // generic frame against the naive entropy of its 10 sub-block energies
    const auto x = random_signal(100, 77);
    std::vector<double> blocks(10, 0.0);
    for (int s = 0; s < 10; ++s)
        for (int i = 0; i < 10; ++i) blocks[s] += x[s * 10 + i] * x[s * 10 + i];
    REQUIRE_THAT(impress::energy_entropy(x),
                 Catch::Matchers::WithinAbs(oracles::entropy_naive(blocks), 1e-12));
}

// ---------------------------------------------------------------------------
// Framing and partitioning
// ---------------------------------------------------------------------------

TEST_CASE("framing drops the trailing remainder", "[audio][framing]") {
    AudioClip<double> clip;
    clip.sample_rate = 16000;
    clip.samples.assign(16000, 0.25);  // one second
    const auto frames = impress::frame_signal(clip, 0.05, 0.025);
    REQUIRE(frames.size() == 39);  // (16000 - 800) / 400 + 1
    for (const auto& f : frames) REQUIRE(f.size() == 800);

    clip.samples.assign(800, 0.0);
    REQUIRE(impress::frame_signal(clip, 0.05, 0.025).size() == 1);
    clip.samples.assign(799, 0.0);
    REQUIRE(impress::frame_signal(clip, 0.05, 0.025).empty());
    clip.samples.assign(1200, 0.0);
    REQUIRE(impress::frame_signal(clip, 0.05, 0.05).size() == 1);  // step == window tiles
}

TEST_CASE("audio partitions follow the floor rule", "[audio][framing]") {
    AudioClip<double> clip;
    clip.sample_rate = 16000;
    clip.samples.resize(240000);
    for (size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = static_cast<double>(i % 97) / 97.0;
    const auto parts = impress::partition_audio(clip, 6);
    REQUIRE(parts.size() == 6);
    size_t total = 0;
    for (const auto& p : parts) {
        REQUIRE(p.samples.size() == 40000);
        REQUIRE(p.sample_rate == 16000);
        total += p.samples.size();
    }
    REQUIRE(total == clip.samples.size());

    clip.samples.resize(10);
    const auto uneven = impress::partition_audio(clip, 3);
    REQUIRE(uneven[0].samples.size() == 3);
    REQUIRE(uneven[1].samples.size() == 3);
    REQUIRE(uneven[2].samples.size() == 4);  // remainder joins the last slice
    // concatenation reproduces the source
    std::vector<double> cat;
    for (const auto& p : uneven) cat.insert(cat.end(), p.samples.begin(), p.samples.end());
    REQUIRE(cat == clip.samples);

    clip.samples.resize(2);
    REQUIRE_THROWS_AS(impress::partition_audio(clip, 3), impress::DataFormatError);
}

// ---------------------------------------------------------------------------
// Spectral features
// ---------------------------------------------------------------------------

TEST_CASE("spectral centroid and spread use positions (k+1)/K", "[audio][features]") {
    const std::vector<double> single{0.0, 0.0, 5.0, 0.0};  // all mass at k=2 of K=4
    const auto [c1, s1] = impress::spectral_centroid_spread(single);
    REQUIRE_THAT(c1, Catch::Matchers::WithinAbs(0.75, 1e-15));
    REQUIRE(s1 == 0.0);

    const std::vector<double> pair{1.0, 1.0};
    const auto [c2, s2] = impress::spectral_centroid_spread(pair);
    REQUIRE_THAT(c2, Catch::Matchers::WithinAbs(0.75, 1e-15));  // mean of 0.5 and 1.0
    REQUIRE_THAT(s2, Catch::Matchers::WithinAbs(0.25, 1e-15));

    const auto [c3, s3] = impress::spectral_centroid_spread(std::vector<double>(8, 0.0));
    REQUIRE(c3 == 0.5);
    REQUIRE(s3 == 0.0);

    // pure 2 kHz tone at 16 kHz: bin 100 of 400 -> centroid near 0.25
    const impress::Dft<double> plan(800);
    const auto mag = plan.magnitudes(tone(800, 2000.0, 16000));
    const auto [c4, s4] = impress::spectral_centroid_spread(mag);
    REQUIRE_THAT(c4, Catch::Matchers::WithinAbs(0.2525, 0.002));
    REQUIRE(s4 < 0.05);
}

TEST_CASE("spectral entropy of band energies", "[audio][features]") {
    std::vector<double> one(100, 0.0);
    one[42] = 3.0;
    REQUIRE(impress::spectral_entropy(one) == 0.0);
    REQUIRE_THAT(impress::spectral_entropy(std::vector<double>(100, 0.75)),
                 Catch::Matchers::WithinAbs(std::log2(10.0), 1e-12));

    const auto spectrum = random_signal(107, 4242, 0.5);  // remainder bins truncated
    std::vector<double> abs_spectrum(spectrum.size());
    for (size_t i = 0; i < spectrum.size(); ++i) abs_spectrum[i] = std::abs(spectrum[i]);
    std::vector<double> bands(10, 0.0);
    for (int s = 0; s < 10; ++s)
        for (int i = 0; i < 10; ++i) bands[s] += abs_spectrum[s * 10 + i] * abs_spectrum[s * 10 + i];
    REQUIRE_THAT(impress::spectral_entropy(abs_spectrum),
                 Catch::Matchers::WithinAbs(oracles::entropy_naive(bands), 1e-12));
}

TEST_CASE("spectral flux compares self-normalized spectra", "[audio][features]") {
    const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
    REQUIRE_THAT(impress::spectral_flux(b, a), Catch::Matchers::WithinAbs(2.0, 1e-15));
    REQUIRE(impress::spectral_flux(a, a) == 0.0);

    // amplitude invariance: doubling one side changes nothing
    auto spectrum = random_signal(64, 888, 1.0);
    for (auto& v : spectrum) v = std::abs(v);
    auto doubled = spectrum;
    for (auto& v : doubled) v *= 2.0;
    REQUIRE_THAT(impress::spectral_flux(doubled, spectrum), Catch::Matchers::WithinAbs(0.0, 1e-15));

    const std::vector<double> zero(64, 0.0);
    REQUIRE(impress::spectral_flux(zero, zero) == 0.0);
    REQUIRE_THROWS_AS(impress::spectral_flux(a, zero), std::invalid_argument);
}

TEST_CASE("spectral rolloff returns m/K at the 90 percent mark", "[audio][features]") {
    REQUIRE(impress::spectral_rolloff(std::vector<double>(100, 1.0)) == 0.89);

    std::vector<double> first(10, 0.0);
    first[0] = 2.0;
    REQUIRE(impress::spectral_rolloff(first) == 0.0);

    REQUIRE(impress::spectral_rolloff(std::vector<double>(16, 0.0)) == 0.0);

    // c = 1 with trailing zeros: accumulation may stop a hair short of the
    // full total; the answer is the last non-zero bin either way
    const std::vector<double> tail{0.0, 3.0, 0.0, 4.0, 0.0};
    REQUIRE(impress::spectral_rolloff(tail, 1.0) == 0.6);
}

// ---------------------------------------------------------------------------
// Cepstrum and chroma
// ---------------------------------------------------------------------------

TEST_CASE("cepstral coefficients match a from-scratch filterbank", "[audio][mfcc]") {
    const int L = 800, rate = 16000;
    const impress::Dft<double> plan(L);
    for (const double hz : {440.0, 1337.5, 3000.0}) {
        auto sig = tone(L, hz, rate, 0.8);
        const auto sp = random_signal(L, 31337, 0.05);
        for (int i = 0; i < L; ++i) sig[i] += sp[i];
        const auto mag = plan.magnitudes(sig);
        const auto got = impress::mfcc(mag, rate);
        const auto want = oracles::mfcc_naive(mag, rate / static_cast<double>(L));
        REQUIRE(got.size() == 13);
        for (int j = 0; j < 13; ++j) {
            INFO("hz=" << hz << " coeff=" << j);
            REQUIRE_THAT(got[j], Catch::Matchers::WithinAbs(want[j], 1e-9));
        }
    }
}

TEST_CASE("silence maps to the floored constant cepstrum", "[audio][mfcc]") {
    const auto c = impress::mfcc(std::vector<double>(400, 0.0), 16000);
    // every filter energy floors at 1e-10, so only the DC coefficient survives
    REQUIRE_THAT(c[0], Catch::Matchers::WithinAbs(std::sqrt(40.0) * std::log(1e-10), 1e-6));
    for (int j = 1; j < 13; ++j) REQUIRE_THAT(c[j], Catch::Matchers::WithinAbs(0.0, 1e-9));
}

TEST_CASE("chroma folds bins into pitch classes anchored at 440 Hz", "[audio][chroma]") {
    const impress::ChromaMap map(400, 20.0);
    REQUIRE(map.at(22) == 0);   // 440 Hz
    REQUIRE(map.at(44) == 0);   // 880 Hz, one octave up
    REQUIRE(map.at(33) == 7);   // 660 Hz, a fifth above
    REQUIRE(map.at(11) == 0);   // 220 Hz, one octave down

    const int L = 800, rate = 16000;
    const impress::Dft<double> plan(L);
    const auto mag = plan.magnitudes(tone(L, 440.0, rate));
    const auto [v, dev] = impress::chroma(mag, rate);
    double sum = 0.0;
    for (double x : v) sum += x;
    REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE(v[0] > 0.99);
    REQUIRE(dev > 0.0);

    const auto [u, udev] = impress::chroma(std::vector<double>(400, 0.0), rate);
    for (double x : u) REQUIRE_THAT(x, Catch::Matchers::WithinAbs(1.0 / 12.0, 1e-15));
    REQUIRE(udev == 0.0);
}

// ---------------------------------------------------------------------------
// Amplitude invariance across the spectral shape features
// ---------------------------------------------------------------------------

TEST_CASE("shape features ignore gain, energy scales with its square", "[audio][features]") {
    const double gain = 3.7;
    const auto x = random_signal(800, 2024, 0.25);
    auto y = x;
    for (auto& v : y) v *= gain;
    const impress::Dft<double> plan(800);
    const auto mx = plan.magnitudes(x);
    const auto my = plan.magnitudes(y);

    REQUIRE(impress::zcr(y) == impress::zcr(x));
    REQUIRE_THAT(impress::energy(y),
                 Catch::Matchers::WithinRel(gain * gain * impress::energy(x), 1e-12));
    REQUIRE_THAT(impress::energy_entropy(y),
                 Catch::Matchers::WithinAbs(impress::energy_entropy(x), 1e-9));
    const auto [cx, sx] = impress::spectral_centroid_spread(mx);
    const auto [cy, sy] = impress::spectral_centroid_spread(my);
    REQUIRE_THAT(cy, Catch::Matchers::WithinAbs(cx, 1e-9));
    REQUIRE_THAT(sy, Catch::Matchers::WithinAbs(sx, 1e-9));
    REQUIRE_THAT(impress::spectral_entropy(my),
                 Catch::Matchers::WithinAbs(impress::spectral_entropy(mx), 1e-9));
    REQUIRE(impress::spectral_rolloff(my) == impress::spectral_rolloff(mx));
    const auto [chx, devx] = impress::chroma(mx, 16000);
    const auto [chy, devy] = impress::chroma(my, 16000);
    for (int i = 0; i < 12; ++i) REQUIRE_THAT(chy[i], Catch::Matchers::WithinAbs(chx[i], 1e-9));
    REQUIRE_THAT(devy, Catch::Matchers::WithinAbs(devx, 1e-9));
}

// ---------------------------------------------------------------------------
// Partition aggregation
// ---------------------------------------------------------------------------

TEST_CASE("feature matrix pools frame features per partition", "[audio][aggregate]") {
    AudioClip<double> clip;
    clip.sample_rate = 8000;
    clip.samples = random_signal(3 * 8000, 555, 0.5);
    impress::FeatureConfig cfg;
    cfg.n_partitions = 3;
    const auto feats = impress::extract_features(clip, cfg);
    REQUIRE(feats.rank() == 2);
    REQUIRE(feats.dim(0) == 3);
    REQUIRE(feats.dim(1) == 68);

    // independent pooling: frame the partitions by hand, reuse the per-frame
    // analyzer (itself oracle-tested), aggregate with two-pass mean/std
    const int frame_len = 400;  // 0.05 s at 8 kHz
    const impress::FrameAnalyzer<double> an(frame_len, clip.sample_rate, cfg);
    const auto parts = impress::partition_audio(clip, cfg.n_partitions);
    for (int p = 0; p < 3; ++p) {
        const auto frames = impress::frame_signal(parts[p], cfg.window_s, cfg.step_s);
        std::vector<std::array<double, 34>> rows;
        std::vector<double> prev;
        for (size_t fi = 0; fi < frames.size(); ++fi) {
            auto spectrum = an.spectrum(frames[fi]);
            rows.push_back(an.features(frames[fi], spectrum, fi == 0 ? nullptr : &prev));
            prev = std::move(spectrum);
        }
        for (int f = 0; f < 34; ++f) {
            double mean = 0.0;
            for (const auto& r : rows) mean += r[f];
            mean /= static_cast<double>(rows.size());
            double var = 0.0;
            for (const auto& r : rows) var += (r[f] - mean) * (r[f] - mean);
            var /= static_cast<double>(rows.size());
            INFO("partition=" << p << " feature=" << f);
            REQUIRE_THAT(feats[static_cast<size_t>(p) * 68 + f],
                         Catch::Matchers::WithinAbs(mean, 1e-12));
            REQUIRE_THAT(feats[static_cast<size_t>(p) * 68 + 34 + f],
                         Catch::Matchers::WithinAbs(std::sqrt(var), 1e-12));
        }
    }
}

TEST_CASE("identical partitions produce identical feature rows", "[audio][aggregate]") {
    const auto chunk = random_signal(8000, 321, 0.4);
    AudioClip<double> clip;
    clip.sample_rate = 8000;
    clip.samples = chunk;
    clip.samples.insert(clip.samples.end(), chunk.begin(), chunk.end());
    impress::FeatureConfig cfg;
    cfg.n_partitions = 2;
    const auto feats = impress::extract_features(clip, cfg);
    for (int f = 0; f < 68; ++f) REQUIRE(feats[f] == feats[68 + f]);
}

TEST_CASE("stationary tone has zero deviation columns", "[audio][aggregate]") {
    // One literal 200-sample period tiled end to end: every analysis frame
    // sees bit-identical samples, so each deviation column must be exactly 0.
    const auto period = tone(200, 40.0, 8000, 0.6);
    AudioClip<double> clip;
    clip.sample_rate = 8000;
    for (int rep = 0; rep < 3 * 8000 / 200; ++rep)
        clip.samples.insert(clip.samples.end(), period.begin(), period.end());
    impress::FeatureConfig cfg;
    cfg.n_partitions = 3;
    const auto feats = impress::extract_features(clip, cfg);
    for (int p = 0; p < 3; ++p)
        for (int f = 0; f < 34; ++f) {
            if (f == 6) continue;  // flux: first frame is 0 by convention, the rest equal
            INFO("partition=" << p << " feature=" << f);
            REQUIRE_THAT(feats[static_cast<size_t>(p) * 68 + 34 + f],
                         Catch::Matchers::WithinAbs(0.0, 1e-9));
        }
}

TEST_CASE("partitions too short to frame are rejected", "[audio][aggregate]") {
    AudioClip<double> clip;
    clip.sample_rate = 16000;
    clip.samples.assign(1600, 0.1);  // 0.1 s: partitions of 266 samples < one 800 frame
    REQUIRE_THROWS_AS(impress::extract_features(clip, impress::FeatureConfig{}),
                      impress::DataFormatError);
}

TEST_CASE("feature csv writes one labeled row per partition", "[audio][aggregate]") {
    impress::Tensor<double> feats({2, 68});
    for (size_t i = 0; i < feats.numel(); ++i) feats[i] = static_cast<double>(i) * 0.5;
    std::ostringstream os;
    impress::write_features_csv(os, feats);
    std::istringstream is(os.str());
    std::string header, row0, row1, extra;
    REQUIRE(std::getline(is, header));
    REQUIRE(std::getline(is, row0));
    REQUIRE(std::getline(is, row1));
    REQUIRE_FALSE(std::getline(is, extra));
    REQUIRE(header.substr(0, 18) == "f00_mean,f01_mean,");
    REQUIRE(header.find("f00_std") != std::string::npos);
    REQUIRE(std::count(header.begin(), header.end(), ',') == 67);
    REQUIRE(std::count(row0.begin(), row0.end(), ',') == 67);
    REQUIRE(row0.substr(0, 6) == "0,0.5,");
}
