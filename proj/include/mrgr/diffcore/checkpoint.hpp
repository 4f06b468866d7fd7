#pragma once

// Checkpoint container:
//   bytes 0..5   magic "MRGR1\0"
//   u32 LE       header length L
//   L bytes      UTF-8 JSON header: {"arrays":[{"name":..,"shape":[r,c]}...], "meta":{...}}
//   then         little-endian IEEE-754 float32 arrays, in header order
//
// Values are narrowed to float32 on write; callers that need a bit-exact
// round trip keep their in-memory values float32-representable (see
// round_to_f32).

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mrgr/diffcore/tensor.hpp"

namespace mrgr::diff {

inline constexpr char kCheckpointMagic[6] = {'M', 'R', 'G', 'R', '1', '\0'};

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct CheckpointFile {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray& find(const std::string& name) const;
  void add(std::string name, Shape shape, std::vector<double> values);
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& file);
// Throws std::runtime_error on bad magic, malformed header or truncation.
CheckpointFile read_checkpoint(const std::filesystem::path& path);

// Rounds every element to the nearest float32 value, in place.
void round_to_f32(std::span<double> values);

}  // namespace mrgr::diff
