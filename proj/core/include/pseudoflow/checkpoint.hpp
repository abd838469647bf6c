#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pseudoflow/tensor.hpp"

namespace pseudoflow {

// Named-tensor container behind the .psfw checkpoint format. Payloads are
// stored raw little-endian, so 32-bit values round-trip bit-exactly.
class Checkpoint {
 public:
  enum class DType : std::uint8_t { f32 = 0, f64 = 1, u64 = 2, bytes = 3 };

  struct Record {
    DType dtype = DType::f32;
    Shape dims;
    std::vector<std::uint8_t> raw;
  };

  void put(const std::string& name, const Tensor& t);
  void put(const std::string& name, const Tensor64& t);
  void put_u64(const std::string& name, const std::vector<std::uint64_t>& v);
  void put_bytes(const std::string& name, const std::string& v);

  bool has(const std::string& name) const { return records_.count(name) > 0; }
  Tensor get_f32(const std::string& name) const;
  Tensor64 get_f64(const std::string& name) const;
  std::vector<std::uint64_t> get_u64(const std::string& name) const;
  std::string get_bytes(const std::string& name) const;

  std::vector<std::string> names() const;
  std::size_t size() const { return records_.size(); }

  // Raw payload access for diffing/tooling.
  const Record& record(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  const Record& fetch(const std::string& name, DType want) const;
  std::map<std::string, Record> records_;
};

}  // namespace pseudoflow
