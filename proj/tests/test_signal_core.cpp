#include <cmath>
#include <limits>

#include "doctest.h"

#include "bat/dsp.hpp"
#include "bat/error.hpp"
#include "bat/signal_core.hpp"
#include "oracles.hpp"

using namespace bat;

TEST_SUITE("signal_core") {

TEST_CASE("default framing is 32 ms / 8 ms at 16 kHz") {
  const StftParams p;
  CHECK(p.frame_len == 512);
  CHECK(p.hop == 128);
  CHECK(p.num_bins() == 257);
  CHECK(p.bin_hz(32) == doctest::Approx(1000.0));
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("invalid framing is rejected") {
  StftParams p;
  p.hop = 100;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.frame_len = 1024;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.hop = 512;  // sqrt-Hann pair is not COLA without overlap
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("window is the periodic square-root Hann") {
  const auto w = analysis_window(StftParams{});
  const auto ref = oracle::sqrt_hann(512);
  for (int i = 0; i < 512; ++i) CHECK(w[i] == doctest::Approx(ref[i]).epsilon(1e-14));
}

TEST_CASE("frame count covers every sample") {
  const StftParams p;
  // Padded by frame_len - hop in front; frames start every hop.
  CHECK(stft_frame_count(512, p) == (512 + 384 - 1) / 128 + 1);
  CHECK(stft_frame_count(16000, p) == 128);
  const auto X = stft(Signal(16000, 0.0), p);
  CHECK(X.frames() == 128);
  CHECK(X.bins() == 257);
  CHECK(X.num_samples() == 16000);
}

TEST_CASE("all-zero signal gives an all-zero spectrogram") {
  const auto X = stft(Signal(16000, 0.0), StftParams{});
  for (const auto& v : X.data()) CHECK(v == cplx{});
}

TEST_CASE("1 kHz sine peaks at bin 32 and matches a direct DFT of the frame") {
  const StftParams p;
  const auto x = oracle::sine(16000, 1000.0, 16000.0, 0.3);
  const auto X = stft(x, p);
  const int l = 40;
  int best = 0;
  for (int f = 0; f < X.bins(); ++f)
    if (std::abs(X(0, l, f)) > std::abs(X(0, l, best))) best = f;
  CHECK(best == 32);

  const auto w = oracle::sqrt_hann(512);
  std::vector<double> frame(512);
  const long start = static_cast<long>(l) * 128 - 384;
  for (int n = 0; n < 512; ++n) frame[n] = x[static_cast<std::size_t>(start + n)] * w[n];
  const auto ref = oracle::dft(frame, 512);
  for (int f = 0; f < X.bins(); ++f) CHECK(std::abs(X(0, l, f) - ref[f]) < 1e-9);
}

TEST_CASE("impulse inside a frame has a flat magnitude equal to the window value") {
  // Unit impulse at sample n0: in a frame starting at s, the windowed frame
  // holds w[n0 - s] at one position, so every bin has magnitude w[n0 - s].
  const StftParams p;
  Signal x(4096, 0.0);
  const int n0 = 1000;
  x[n0] = 1.0;
  const auto X = stft(x, p);
  const auto w = oracle::sqrt_hann(512);
  for (int l = 0; l < X.frames(); ++l) {
    const long off = n0 - (static_cast<long>(l) * 128 - 384);
    const double expect = (off >= 0 && off < 512) ? w[off] : 0.0;
    for (int f = 0; f < X.bins(); f += 17) CHECK(std::abs(X(0, l, f)) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("constant signal: interior frame magnitude equals the window spectrum") {
  const StftParams p;
  const auto X = stft(Signal(8000, 1.0), p);
  const auto W = oracle::dft(oracle::sqrt_hann(512), 512);
  for (int f = 0; f < X.bins(); ++f) CHECK(std::abs(std::abs(X(0, 20, f)) - std::abs(W[f])) < 1e-9);
}

TEST_CASE("roundtrip reconstructs white noise and a sine") {
  const StftParams p;
  for (const auto& x : {oracle::noise(16000, 1), oracle::sine(16000, 440.0, 16000.0)}) {
    const auto y = istft(stft(x, p), p);
    REQUIRE(y.size() == 1);
    REQUIRE(y[0].size() == x.size());
    CHECK(oracle::rel_l2(x, y[0]) < 1e-6);
  }
}

TEST_CASE("roundtrip property over random lengths and non-default hops") {
  for (int trial = 0; trial < 6; ++trial) {
    StftParams p;
    p.hop = trial % 2 == 0 ? 128 : 64;
    const std::size_t n = 600 + 997 * trial;
    const auto x = oracle::noise(n, 100 + trial, 0.3);
    const auto y = istft(stft(x, p), p);
    CHECK(oracle::rel_l2(x, y[0]) < 1e-6);
  }
}

TEST_CASE("zero spectrogram inverts to silence") {
  const StftParams p;
  Spectrogram Z(2, stft_frame_count(4000, p), p, 4000);
  const auto y = istft(Z, p);
  for (const auto& ch : y)
    for (double v : ch) CHECK(v == 0.0);
}

TEST_CASE("per-frame Parseval consistency") {
  const StftParams p;
  const auto x = oracle::noise(3000, 9);
  const auto X = stft(x, p);
  const auto w = oracle::sqrt_hann(512);
  for (int l = 0; l < X.frames(); l += 3) {
    double time = 0.0;
    const long start = static_cast<long>(l) * 128 - 384;
    for (int n = 0; n < 512; ++n) {
      const long i = start + n;
      const double v = (i >= 0 && i < 3000) ? x[i] * w[n] : 0.0;
      time += v * v;
    }
    double freq = 0.0;
    for (int f = 0; f < X.bins(); ++f) freq += (f == 0 || f == 256 ? 1.0 : 2.0) * std::norm(X(0, l, f));
    freq /= 512.0;
    CHECK(std::abs(freq - time) <= 1e-9 * std::max(time, 1e-300));
  }
}

TEST_CASE("stft input errors") {
  const StftParams p;
  CHECK_THROWS_AS(stft(Signal(100, 0.0), p), DataError);
  Signal bad(2000, 0.0);
  bad[7] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(stft(bad, p), DataError);
  CHECK_THROWS_AS(stft(MultiSignal{Signal(2000), Signal(1999)}, p), DataError);
}

TEST_CASE("istft rejects mismatched params") {
  const StftParams p;
  const auto X = stft(oracle::noise(2000, 3), p);
  StftParams q = p;
  q.hop = 64;
  CHECK_THROWS_AS(istft(X, q), DataError);
}

TEST_CASE("ERB filterbank: B = 48 and B = 32 give non-empty partitions") {
  const StftParams p;
  for (int B : {48, 32}) {
    const auto fb = build_erb_filterbank(B, p);
    CHECK(fb.bands() == B);
    CHECK(fb.bins() == 257);
    for (int b = 0; b < B; ++b) {
      CHECK(fb.band_end(b) > fb.band_begin(b));
      CHECK(fb.normalizer(b) > 0.0);
      double pi_b = 0.0;
      for (int f = 0; f < 257; ++f) pi_b += fb.weight(b, f);
      CHECK(pi_b == fb.normalizer(b));
    }
    for (int f = 0; f < 257; ++f) {
      double s = 0.0;
      for (int b = 0; b < B; ++b) s += fb.weight(b, f);
      CHECK(s == 1.0);
    }
  }
}

TEST_CASE("ERB band edges follow the ERB-rate scale where bins allow") {
  const StftParams p;
  const auto fb = build_erb_filterbank(32, p);
  CHECK(erb_rate(1000.0) == doctest::Approx(oracle::erb_number(1000.0)));
  // Upper bands are wide enough that their edges sit at the equally spaced
  // ERB-rate points (rounded to the bin grid).
  const double top = oracle::erb_number(8000.0);
  for (int b = 24; b < 32; ++b) {
    const double target = top * b / 32.0;
    const double edge_hz = p.bin_hz(fb.band_begin(b));
    CHECK(std::abs(oracle::erb_number(edge_hz) - target) < 0.5);
  }
  CHECK(fb.band_end(31) == 257);
}

TEST_CASE("B = F gives one bin per band and an identity compression") {
  const StftParams p;
  const auto fb = build_erb_filterbank(257, p);
  for (int b = 0; b < 257; ++b) CHECK(fb.band_end(b) - fb.band_begin(b) == 1);
  const auto x = oracle::noise(257, 4);
  CHECK(erb_compress(x, fb) == x);
  CHECK_THROWS_AS(build_erb_filterbank(258, p), std::invalid_argument);
  CHECK_THROWS_AS(build_erb_filterbank(0, p), std::invalid_argument);
}

TEST_CASE("erb_compress matches a direct weighted mean and is linear") {
  const StftParams p;
  const auto fb = build_erb_filterbank(32, p);
  const std::size_t inner = 3;
  const auto x = oracle::noise(2 * 257 * inner, 5);
  const auto y = oracle::noise(2 * 257 * inner, 6);
  const auto cx = erb_compress(x, fb, inner);
  REQUIRE(cx.size() == 2 * 32 * inner);
  for (int o = 0; o < 2; ++o)
    for (int b = 0; b < 32; ++b)
      for (std::size_t i = 0; i < inner; ++i) {
        double num = 0.0, den = 0.0;
        for (int f = 0; f < 257; ++f) {
          num += fb.weight(b, f) * x[(o * 257 + f) * inner + i];
          den += fb.weight(b, f);
        }
        CHECK(cx[(o * 32 + b) * inner + i] == doctest::Approx(num / den).epsilon(1e-12));
      }
  std::vector<double> sum(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sum[i] = 2.0 * x[i] - y[i];
  const auto cs = erb_compress(sum, fb, inner);
  const auto cy = erb_compress(y, fb, inner);
  for (std::size_t i = 0; i < cs.size(); ++i) CHECK(cs[i] == doctest::Approx(2.0 * cx[i] - cy[i]).epsilon(1e-12));
}

TEST_CASE("constant and indicator inputs compress exactly") {
  const auto fb = build_erb_filterbank(32, StftParams{});
  for (double v : erb_compress(std::vector<double>(257, 0.7), fb)) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
  std::vector<double> ind(257, 0.0);
  for (int f = fb.band_begin(9); f < fb.band_end(9); ++f) ind[f] = 1.0;
  const auto c = erb_compress(ind, fb);
  for (int b = 0; b < 32; ++b) CHECK(c[b] == (b == 9 ? 1.0 : 0.0));
}

TEST_CASE("erb_expand: compress after expand is the identity on band vectors") {
  const auto fb = build_erb_filterbank(48, StftParams{});
  for (int b0 = 0; b0 < 48; ++b0) {
    std::vector<double> e(48, 0.0);
    e[b0] = 1.0;
    CHECK(erb_compress(erb_expand(e, fb), fb) == e);
  }
  std::vector<double> half(48, 1.0);
  half[5] = 0.5;
  const auto g = erb_expand(half, fb);
  for (int f = 0; f < 257; ++f) CHECK(g[f] == (fb.band_of_bin(f) == 5 ? 0.5 : 1.0));
}

TEST_CASE("expand after compress is idempotent") {
  const auto fb = build_erb_filterbank(32, StftParams{});
  const auto x = oracle::noise(257, 8);
  const auto once = erb_expand(erb_compress(x, fb), fb);
  const auto twice = erb_expand(erb_compress(once, fb), fb);
  for (int f = 0; f < 257; ++f) CHECK(twice[f] == doctest::Approx(once[f]).epsilon(1e-14));
}

TEST_CASE("filterbank dimension mismatches are DimensionErrors") {
  const auto fb = build_erb_filterbank(32, StftParams{});
  CHECK_THROWS_AS(erb_compress(std::vector<double>(256), fb), DimensionError);
  CHECK_THROWS_AS(erb_expand(std::vector<double>(31), fb), DimensionError);
}

TEST_CASE("dsp helpers agree with direct computations") {
  const auto x = oracle::noise(37, 11);
  const auto X = dsp::rfft(x, 64);
  const auto ref = oracle::dft(x, 64);
  for (int k = 0; k <= 32; ++k) CHECK(std::abs(X[k] - ref[k]) < 1e-10);
  const auto back = dsp::irfft(X, 64);
  for (int n = 0; n < 37; ++n) CHECK(back[n] == doctest::Approx(x[n]).epsilon(1e-12));

  const auto a = oracle::noise(300, 12);
  const auto b = oracle::noise(45, 13);
  const auto c = dsp::convolve(a, b);
  REQUIRE(c.size() == 344);
  for (std::size_t n = 0; n < c.size(); n += 7) {
    double acc = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k)
      if (n >= k && n - k < a.size()) acc += a[n - k] * b[k];
    CHECK(c[n] == doctest::Approx(acc).epsilon(1e-10));
  }
  const auto t = dsp::convolve_truncated(a, b, 100);
  REQUIRE(t.size() == 100);
  for (int n = 0; n < 100; ++n) CHECK(t[n] == doctest::Approx(c[n]).epsilon(1e-12));
}

}  // TEST_SUITE
