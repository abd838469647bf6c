#include "pseudoflow/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace pseudoflow {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'P', 'S', 'F', 'W'};
constexpr std::uint16_t kVersion = 1;

std::size_t dtype_size(Checkpoint::DType d) {
  switch (d) {
    case Checkpoint::DType::f32: return 4;
    case Checkpoint::DType::f64: return 8;
    case Checkpoint::DType::u64: return 8;
    case Checkpoint::DType::bytes: return 1;
  }
  return 1;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError(std::string("truncated checkpoint while reading ") + what);
  return v;
}

}  // namespace

void Checkpoint::put(const std::string& name, const Tensor& t) {
  Record r;
  r.dtype = DType::f32;
  r.dims = t.shape();
  r.raw.resize(static_cast<std::size_t>(t.numel()) * 4);
  std::memcpy(r.raw.data(), t.data().data(), r.raw.size());
  records_[name] = std::move(r);
}

void Checkpoint::put(const std::string& name, const Tensor64& t) {
  Record r;
  r.dtype = DType::f64;
  r.dims = t.shape();
  r.raw.resize(static_cast<std::size_t>(t.numel()) * 8);
  std::memcpy(r.raw.data(), t.data().data(), r.raw.size());
  records_[name] = std::move(r);
}

void Checkpoint::put_u64(const std::string& name, const std::vector<std::uint64_t>& v) {
  Record r;
  r.dtype = DType::u64;
  r.dims = {static_cast<std::int64_t>(v.size())};
  r.raw.resize(v.size() * 8);
  if (!v.empty()) std::memcpy(r.raw.data(), v.data(), r.raw.size());
  records_[name] = std::move(r);
}

void Checkpoint::put_bytes(const std::string& name, const std::string& v) {
  Record r;
  r.dtype = DType::bytes;
  r.dims = {static_cast<std::int64_t>(v.size())};
  r.raw.assign(v.begin(), v.end());
  records_[name] = std::move(r);
}

const Checkpoint::Record& Checkpoint::fetch(const std::string& name, DType want) const {
  auto it = records_.find(name);
  if (it == records_.end()) throw FormatError("checkpoint record missing: " + name);
  if (it->second.dtype != want) throw FormatError("checkpoint record has wrong dtype: " + name);
  return it->second;
}

Tensor Checkpoint::get_f32(const std::string& name) const {
  const Record& r = fetch(name, DType::f32);
  Tensor t(r.dims);
  std::memcpy(t.mut().data(), r.raw.data(), r.raw.size());
  return t;
}

Tensor64 Checkpoint::get_f64(const std::string& name) const {
  const Record& r = fetch(name, DType::f64);
  Tensor64 t(r.dims);
  std::memcpy(t.mut().data(), r.raw.data(), r.raw.size());
  return t;
}

std::vector<std::uint64_t> Checkpoint::get_u64(const std::string& name) const {
  const Record& r = fetch(name, DType::u64);
  std::vector<std::uint64_t> v(r.raw.size() / 8);
  if (!v.empty()) std::memcpy(v.data(), r.raw.data(), r.raw.size());
  return v;
}

std::string Checkpoint::get_bytes(const std::string& name) const {
  const Record& r = fetch(name, DType::bytes);
  return std::string(r.raw.begin(), r.raw.end());
}

const Checkpoint::Record& Checkpoint::record(const std::string& name) const {
  auto it = records_.find(name);
  if (it == records_.end()) throw FormatError("checkpoint record missing: " + name);
  return it->second;
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& [k, v] : records_) out.push_back(k);
  return out;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint16_t>(0));  // flags
  write_pod(out, static_cast<std::uint64_t>(records_.size()));
  for (const auto& [name, r] : records_) {
    write_pod(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<std::uint8_t>(r.dtype));
    write_pod(out, static_cast<std::uint8_t>(r.dims.size()));
    for (auto d : r.dims) write_pod(out, static_cast<std::uint64_t>(d));
    out.write(reinterpret_cast<const char*>(r.raw.data()), static_cast<std::streamsize>(r.raw.size()));
  }
  if (!out) throw IoError("checkpoint write failed: " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("not a checkpoint file (bad magic): " + path.string());
  const auto version = read_pod<std::uint16_t>(in, "version");
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + ": " + path.string());
  read_pod<std::uint16_t>(in, "flags");
  const auto count = read_pod<std::uint64_t>(in, "record count");

  Checkpoint ck;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in, "name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw FormatError("truncated checkpoint name: " + path.string());
    Record r;
    r.dtype = static_cast<DType>(read_pod<std::uint8_t>(in, "dtype"));
    const auto ndim = read_pod<std::uint8_t>(in, "rank");
    std::size_t numel = 1;
    for (int d = 0; d < ndim; ++d) {
      const auto dim = read_pod<std::uint64_t>(in, "dimension");
      r.dims.push_back(static_cast<std::int64_t>(dim));
      numel *= dim;
    }
    r.raw.resize(numel * dtype_size(r.dtype));
    if (!r.raw.empty()) {
      in.read(reinterpret_cast<char*>(r.raw.data()), static_cast<std::streamsize>(r.raw.size()));
      if (!in) throw FormatError("truncated checkpoint payload for " + name + ": " + path.string());
    }
    ck.records_[name] = std::move(r);
  }
  return ck;
}

}  // namespace pseudoflow
