#include "gaitverify/data.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

namespace gaitverify {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

double parse_real(std::string_view text, long line, const char* what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError(std::string("cannot parse ") + what + " '" + std::string(text) + "'", line);
  }
  return value;
}

long long parse_integer(std::string_view text, long line, const char* what) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError(std::string("cannot parse ") + what + " '" + std::string(text) + "'", line);
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_real(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw InvalidInput("format_real: value not representable");
  return std::string(buf.data(), ptr);
}

double parse_real(std::string_view text) { return parse_real(text, 0, "number"); }

// ---------------------------------------------------------------------------
// Canonical CSV
// ---------------------------------------------------------------------------

std::vector<RawRecording> read_canonical_csv(std::istream& in) {
  std::string line;
  long line_no = 1;
  if (!next_line(in, line)) throw ParseError("empty file, expected header", line_no);
  if (line != kCanonicalHeader) throw ParseError("expected header '" + std::string(kCanonicalHeader) + "'", line_no);

  struct Builder {
    RawRecording rec;
    std::vector<double> t;
    std::vector<std::array<double, 3>> xyz;
  };
  std::vector<Builder> groups;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;

  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) {
      throw ParseError("expected 7 fields, found " + std::to_string(f.size()), line_no);
    }
    if (f[0].empty() || f[1].empty() || f[2].empty()) throw ParseError("empty identifier field", line_no);
    auto key = std::make_tuple(std::string(f[0]), std::string(f[1]), std::string(f[2]));
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      Builder b;
      b.rec.subject_id = std::get<0>(key);
      b.rec.session_id = std::get<1>(key);
      b.rec.recording_id = std::get<2>(key);
      groups.push_back(std::move(b));
    }
    auto& g = groups[it->second];
    g.t.push_back(parse_real(f[3], line_no, "t"));
    g.xyz.push_back({parse_real(f[4], line_no, "ax"), parse_real(f[5], line_no, "ay"),
                     parse_real(f[6], line_no, "az")});
  }

  std::vector<RawRecording> recordings;
  recordings.reserve(groups.size());
  for (auto& g : groups) {
    const auto n = static_cast<Index>(g.t.size());
    g.rec.timestamps = Eigen::Map<const Eigen::VectorXd>(g.t.data(), n);
    g.rec.samples.resize(n, 3);
    for (Index i = 0; i < n; ++i) {
      for (Index c = 0; c < 3; ++c) g.rec.samples(i, c) = g.xyz[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    }
    validate_recording(g.rec);
    recordings.push_back(std::move(g.rec));
  }
  return recordings;
}

std::vector<RawRecording> load_canonical_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_canonical_csv(in);
}

void write_canonical_csv(const std::vector<RawRecording>& recordings, std::ostream& out) {
  out << kCanonicalHeader << '\n';
  for (const auto& rec : recordings) {
    for (Index i = 0; i < rec.timestamps.size(); ++i) {
      out << rec.subject_id << ',' << rec.session_id << ',' << rec.recording_id << ','
          << format_real(rec.timestamps[i]) << ',' << format_real(rec.samples(i, 0)) << ','
          << format_real(rec.samples(i, 1)) << ',' << format_real(rec.samples(i, 2)) << '\n';
    }
  }
}

void write_canonical_csv(const std::vector<RawRecording>& recordings, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_canonical_csv(recordings, out);
}

// ---------------------------------------------------------------------------
// Cycle annotations
// ---------------------------------------------------------------------------

std::vector<CycleAnnotation> read_cycle_annotations(std::istream& in) {
  std::string line;
  long line_no = 1;
  if (!next_line(in, line) || line != "subject,session,recording,boundaries") {
    throw ParseError("expected header 'subject,session,recording,boundaries'", line_no);
  }
  std::vector<CycleAnnotation> out;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) throw ParseError("expected 4 fields, found " + std::to_string(f.size()), line_no);
    CycleAnnotation a{std::string(f[0]), std::string(f[1]), std::string(f[2]), {}};
    for (auto tok : split(f[3], ' ')) {
      if (tok.empty()) continue;
      a.boundaries.push_back(static_cast<Index>(parse_integer(tok, line_no, "boundary")));
      const auto n = a.boundaries.size();
      if (a.boundaries.back() < 0 || (n > 1 && a.boundaries[n - 1] <= a.boundaries[n - 2])) {
        throw ParseError("boundaries must be non-negative and strictly increasing", line_no);
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<CycleAnnotation> load_cycle_annotations(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_cycle_annotations(in);
}

// ---------------------------------------------------------------------------
// Features CSV
// ---------------------------------------------------------------------------

void write_features_csv(const std::vector<FeatureVector>& features, std::ostream& out) {
  const Index dim = features.empty() ? 0 : features.front().values.size();
  out << "subject,session,recording,frame";
  for (Index j = 0; j < dim; ++j) out << ",f" << j;
  out << '\n';
  for (const auto& fv : features) {
    if (fv.values.size() != dim) throw InvalidInput("export_features_csv: feature vectors differ in dimension");
    out << fv.source.subject_id << ',' << fv.source.session_id << ',' << fv.source.recording_id << ','
        << fv.source.frame_index;
    for (Index j = 0; j < dim; ++j) out << ',' << format_real(fv.values[j]);
    out << '\n';
  }
}

void export_features_csv(const std::vector<FeatureVector>& features, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_features_csv(features, out);
}

std::vector<FeatureVector> read_features_csv(std::istream& in) {
  std::string line;
  long line_no = 1;
  if (!next_line(in, line)) throw ParseError("empty file, expected header", line_no);
  const auto header = split(line, ',');
  if (header.size() < 4 || header[0] != "subject" || header[1] != "session" || header[2] != "recording" ||
      header[3] != "frame") {
    throw ParseError("expected header 'subject,session,recording,frame,f0,...'", line_no);
  }
  const auto dim = static_cast<Index>(header.size() - 4);
  std::vector<FeatureVector> out;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()),
                       line_no);
    }
    FeatureVector fv{{std::string(f[0]), std::string(f[1]), std::string(f[2]),
                      static_cast<Index>(parse_integer(f[3], line_no, "frame"))},
                     Eigen::VectorXd(dim)};
    for (Index j = 0; j < dim; ++j) fv.values[j] = parse_real(f[static_cast<std::size_t>(j + 4)], line_no, "feature");
    out.push_back(std::move(fv));
  }
  return out;
}

std::vector<FeatureVector> load_features_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_features_csv(in);
}

// ---------------------------------------------------------------------------
// Digests
// ---------------------------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

}  // namespace gaitverify
