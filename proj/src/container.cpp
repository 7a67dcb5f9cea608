#include "gaitverify/data.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

namespace gaitverify {

namespace {

template <typename UInt>
void put(std::vector<std::uint8_t>& out, UInt value) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename UInt>
  UInt get() {
    need(sizeof(UInt));
    UInt value = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(UInt(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(UInt);
    return value;
  }

  std::string get_string() {
    const auto len = get<std::uint32_t>();
    need(len);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
    pos_ += len;
    return s;
  }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("container truncated at byte " + std::to_string(pos_));
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::uint64_t element_count(const std::vector<std::uint64_t>& shape) {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

const ContainerEntry* ModelContainer::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::vector<std::uint8_t> serialize_container(const ModelContainer& container) {
  std::set<std::string> names;
  for (const auto& e : container.entries) {
    if (!names.insert(e.name).second) throw InvalidInput("container: duplicate entry name " + e.name);
    if (element_count(e.shape) != e.values.size()) {
      throw InvalidInput("container: entry " + e.name + " payload does not match its shape");
    }
  }

  std::vector<std::uint8_t> out(std::begin(kContainerMagic), std::end(kContainerMagic));
  put<std::uint32_t>(out, kContainerVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(container.metadata.size()));
  for (const auto& [key, value] : container.metadata) {
    put_string(out, key);
    put_string(out, value);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(container.entries.size()));
  for (const auto& e : container.entries) {
    put_string(out, e.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) put<std::uint64_t>(out, d);
  }
  for (const auto& e : container.entries) {
    for (float v : e.values) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

ModelContainer parse_container(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kContainerMagic, 4) != 0) {
    throw FormatError("not a model container (bad magic)");
  }
  Reader r(bytes);
  r.get<std::uint32_t>();  // magic, already checked
  const auto version = r.get<std::uint32_t>();
  if (version != kContainerVersion) throw VersionError(version, kContainerVersion);

  ModelContainer c;
  const auto meta_count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    auto key = r.get_string();
    c.metadata[key] = r.get_string();
  }
  const auto entry_count = r.get<std::uint32_t>();
  std::set<std::string> names;
  for (std::uint32_t i = 0; i < entry_count; ++i) {
    ContainerEntry e;
    e.name = r.get_string();
    if (!names.insert(e.name).second) throw FormatError("duplicate entry name " + e.name);
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) e.shape.push_back(r.get<std::uint64_t>());
    c.entries.push_back(std::move(e));
  }
  for (auto& e : c.entries) {
    const auto n = element_count(e.shape);
    if (n > r.remaining() / 4) throw FormatError("container truncated in payload of " + e.name);
    e.values.resize(n);
    for (auto& v : e.values) v = std::bit_cast<float>(r.get<std::uint32_t>());
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after container payload");
  return c;
}

void save_model(const ModelContainer& container, const std::filesystem::path& path) {
  const auto bytes = serialize_container(container);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

ModelContainer load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_container(bytes);
}

}  // namespace gaitverify
