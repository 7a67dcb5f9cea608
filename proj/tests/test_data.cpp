#include "gaitverify/data.hpp"
#include "gaitverify/models.hpp"
#include "gaitverify/pipeline.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

using namespace gaitverify;
using gaitverify::testing::Rng;
using gaitverify::testing::uniform;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gaitverify_test_" + std::to_string(::getpid()) + "_" + name);
}

std::string write_csv(const std::vector<RawRecording>& recs) {
  std::ostringstream out;
  write_canonical_csv(recs, out);
  return out.str();
}

std::vector<RawRecording> read_csv(const std::string& text) {
  std::istringstream in(text);
  return read_canonical_csv(in);
}

template <typename E, typename F>
E expect_throws(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e;
  }
  ADD_FAILURE() << "expected exception";
  return E("", 0);
}

}  // namespace

TEST(CanonicalCsv, MinimalFile) {
  const auto recs = read_csv("subject,session,recording,t,ax,ay,az\ns1,1,r1,0,1,2,3\ns1,1,r1,0.01,4,5,6\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].samples.rows(), 2);
  EXPECT_EQ(recs[0].samples(1, 2), 6.0);
  EXPECT_EQ(recs[0].subject_id, "s1");
}

TEST(CanonicalCsv, GroupsKeepFileOrder) {
  const auto recs = read_csv(
      "subject,session,recording,t,ax,ay,az\n"
      "zed,1,r1,0,1,2,3\nzed,1,r1,1,1,2,3\nalpha,2,r9,0,0,0,0\nalpha,2,r9,1,0,0,0\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].subject_id, "zed");
  EXPECT_EQ(recs[1].subject_id, "alpha");
  EXPECT_EQ(recs[1].session_id, "2");
}

TEST(CanonicalCsv, RoundTripIsExact) {
  SyntheticConfig config;
  config.num_subjects = 2;
  config.recording_seconds = 3;
  const auto recs = generate_synthetic(config);
  const auto text = write_csv(recs);
  const auto back = read_csv(text);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].samples, recs[i].samples);
    EXPECT_EQ(back[i].timestamps, recs[i].timestamps);
  }
  EXPECT_EQ(write_csv(back), text);
}

TEST(CanonicalCsv, ParseErrorsCarryLineNumbers) {
  const auto e = expect_throws<ParseError>([] {
    read_csv("subject,session,recording,t,ax,ay,az\ns1,1,r1,0,1,2,3\ns1,1,r1,0.01,4,x,6\n");
  });
  EXPECT_EQ(e.line(), 3);
  const auto f = expect_throws<ParseError>([] { read_csv("subject,session,recording,t,ax,ay,az\ns1,1,r1,0,1,2\n"); });
  EXPECT_EQ(f.line(), 2);
  EXPECT_THROW(read_csv("subject,t,ax\n"), ParseError);
}

TEST(CanonicalCsv, NonMonotonicTimeNamesRecording) {
  try {
    read_csv("subject,session,recording,t,ax,ay,az\ns1,1,r7,0,1,2,3\ns1,1,r7,0,4,5,6\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("r7"), std::string::npos);
  }
}

TEST(CycleAnnotations, ParseBoundaries) {
  std::istringstream in("subject,session,recording,boundaries\ns1,1,r1,0 100 210\ns2,1,r1,5 50\n");
  const auto a = read_cycle_annotations(in);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].boundaries, (std::vector<Index>{0, 100, 210}));
  EXPECT_EQ(cycle_stats(a).lengths, (std::vector<Index>{45, 100, 110}));
  std::istringstream bad("subject,session,recording,boundaries\ns1,1,r1,10 5\n");
  EXPECT_THROW(read_cycle_annotations(bad), ParseError);
}

TEST(Synthetic, DeterministicAndSized) {
  SyntheticConfig config;
  config.recording_seconds = 60;
  const auto a = generate_synthetic(config);
  const auto b = generate_synthetic(config);
  ASSERT_EQ(a.size(), 10u * 2 * 2);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].samples, b[i].samples);
  EXPECT_EQ(a[0].subject_id, "s001");
  EXPECT_EQ(a.back().subject_id, "s010");
  EXPECT_EQ(a.back().session_id, "2");
  EXPECT_EQ(a.back().recording_id, "r02");
  for (const auto& rec : a) EXPECT_EQ(segment_frames(resample_linear(rec)).size(), 46u);
}

TEST(Synthetic, ZeroDriftKeepsSessionProfiles) {
  SyntheticConfig config;
  config.cross_day_drift = 0.0;
  for (const auto& per_session : synthetic_profiles(config)) {
    EXPECT_EQ(per_session[0].amplitudes, per_session[1].amplitudes);
    EXPECT_EQ(per_session[0].phases, per_session[1].phases);
  }
  config.cross_day_drift = 0.3;
  const auto drifted = synthetic_profiles(config);
  EXPECT_NE(drifted[0][0].amplitudes, drifted[0][1].amplitudes);
  EXPECT_EQ(drifted[0][0].step_frequency_hz, drifted[0][1].step_frequency_hz);
}

TEST(Synthetic, NoiseLevelAndStepFrequencyRange) {
  SyntheticConfig config;
  config.cross_day_drift = 0.0;
  for (const auto& per_session : synthetic_profiles(config)) {
    EXPECT_GE(per_session[0].step_frequency_hz, 1.6);
    EXPECT_LE(per_session[0].step_frequency_hz, 2.4);
  }
}

TEST(Synthetic, SubjectsDifferInDominantSpectralPeak) {
  SyntheticConfig config;
  config.sessions = 1;
  config.recordings_per_subject_per_session = 1;
  const auto frames = preprocess(generate_synthetic(config));
  // Mean periodogram of each subject's frames on a 0.01 Hz grid.
  std::map<std::string, std::vector<double>> power;  // keyed s001..s010, profile order
  for (const auto& f : frames) {
    auto& p = power[f.source.subject_id];
    p.resize(400, 0.0);
    for (int k = 0; k < 400; ++k) {
      const double hz = 0.3 + 0.01 * k;
      for (Index c = 0; c < 3; ++c) {
        std::complex<double> acc = 0;
        for (Index t = 0; t < kFrameLength; ++t) {
          acc += f.values(t, c) * std::polar(1.0, -2 * std::numbers::pi * hz * static_cast<double>(t) / 100.0);
        }
        p[static_cast<std::size_t>(k)] += std::norm(acc);
      }
    }
  }
  std::vector<int> peaks;
  for (const auto& [subject, p] : power) {
    peaks.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
  }
  ASSERT_EQ(peaks.size(), 10u);
  // The dominant peak sits on a gait-cycle harmonic, up to tempo jitter and wander. A
  // 128-sample frame has a coarse spectrum, so only step frequencies at least 0.3 Hz apart
  // are required to give distinct peaks.
  const auto profiles = synthetic_profiles(config);
  for (std::size_t a = 0; a < peaks.size(); ++a) {
    const double peak = 0.3 + 0.01 * peaks[a];
    const double cycle = profiles[a][0].step_frequency_hz / 2;
    const double h = std::round(peak / cycle);
    EXPECT_GE(h, 1);
    EXPECT_LE(h, 3);
    EXPECT_NEAR(peak, h * cycle, 0.1) << "subject " << a;
    for (std::size_t b = a + 1; b < peaks.size(); ++b) {
      if (std::abs(profiles[a][0].step_frequency_hz - profiles[b][0].step_frequency_hz) >= 0.3) {
        EXPECT_NE(peaks[a], peaks[b]) << a << " vs " << b;
      }
    }
  }
}

TEST(Synthetic, InvalidConfig) {
  SyntheticConfig config;
  config.num_subjects = 0;
  EXPECT_THROW(generate_synthetic(config), InvalidInput);
  config = {};
  config.sessions = 3;
  EXPECT_THROW(generate_synthetic(config), InvalidInput);
  config = {};
  config.cross_day_drift = 1.5;
  EXPECT_THROW(generate_synthetic(config), InvalidInput);
  config = {};
  config.recording_seconds = -1;
  EXPECT_THROW(generate_synthetic(config), InvalidInput);
}

TEST(Container, EmptyRoundTrip) {
  const ModelContainer empty;
  EXPECT_EQ(parse_container(serialize_container(empty)), empty);
}

TEST(Container, ByteLayout) {
  ModelContainer c;
  c.metadata["k"] = "v";
  c.entries.push_back({"w", {2}, {1.0f, -2.0f}});
  const auto bytes = serialize_container(c);
  const std::vector<std::uint8_t> expected{
      'G', 'V', 'F', '1', 1, 0, 0, 0,              // magic, version
      1, 0, 0, 0, 1, 0, 0, 0, 'k', 1, 0, 0, 0, 'v',  // metadata
      1, 0, 0, 0, 1, 0, 0, 0, 'w', 1, 0, 0, 0,     // entry table: name, rank
      2, 0, 0, 0, 0, 0, 0, 0,                      // dims
      0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
  EXPECT_EQ(bytes, expected);
}

TEST(Container, FcnRoundTripIsBitExact) {
  auto model = build_fcn<float>(5, 3);
  const auto c = to_container(model, kClassifierArchitecture);
  const auto path = temp_path("fcn.gvf");
  save_model(c, path);
  const auto back = load_model(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back, c);
  FcnClassifier<float> restored(5);
  load_tensors(restored, back);
  auto p = model.parameters();
  auto q = restored.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i]->value.data(), q[i]->value.data());
}

TEST(Container, RejectsCorruptInput) {
  ModelContainer c;
  c.entries.push_back({"w", {3}, {1, 2, 3}});
  auto bytes = serialize_container(c);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(parse_container(bad_magic), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(parse_container(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(parse_container(trailing), FormatError);
  auto version = bytes;
  version[4] = 2;
  try {
    parse_container(version);
    FAIL() << "expected VersionError";
  } catch (const VersionError& e) {
    EXPECT_EQ(e.found(), 2u);
  }
  ModelContainer dup;
  dup.entries = {{"a", {1}, {1}}, {"a", {1}, {2}}};
  EXPECT_THROW(serialize_container(dup), InvalidInput);
  ModelContainer mismatch;
  mismatch.entries = {{"a", {2}, {1}}};
  EXPECT_THROW(serialize_container(mismatch), InvalidInput);
}

TEST(FeaturesCsv, LayoutAndRoundTrip) {
  Rng rng(1);
  std::vector<FeatureVector> features;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd v(kFeatureDim);
    for (Index d = 0; d < kFeatureDim; ++d) v[d] = uniform(rng, -10, 10);
    features.push_back({{"s001", "1", "r01", i}, v});
  }
  std::ostringstream out;
  write_features_csv({features[0]}, out);
  const auto text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  const auto header = text.substr(0, text.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), ',') + 1, 4 + 128);
  EXPECT_EQ(header.substr(0, 36), "subject,session,recording,frame,f0,f");

  const auto path = temp_path("features.csv");
  export_features_csv(features, path);
  const auto back = load_features_csv(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].source, features[i].source);
    EXPECT_EQ(back[i].values, features[i].values);
  }
}

TEST(FeaturesCsv, RejectsRaggedRows) {
  std::istringstream in("subject,session,recording,frame,f0,f1\ns,1,r,0,1,2\ns,1,r,1,1\n");
  EXPECT_THROW(read_features_csv(in), ParseError);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(FormatReal, ShortestRoundTrip) {
  for (double v : {0.1, -1e-300, 123456.789, 1.0 / 3.0}) EXPECT_EQ(parse_real(format_real(v)), v);
  EXPECT_EQ(format_real(0.5), "0.5");
  EXPECT_THROW(parse_real("1.5x"), ParseError);
}
