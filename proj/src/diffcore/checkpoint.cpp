#include "mrgr/diffcore/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mrgr::diff {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

void put_u32(std::ofstream& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.write(b, 4);
}

}  // namespace

const NamedArray& CheckpointFile::find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw std::runtime_error("checkpoint has no array named '" + name + "'");
}

void CheckpointFile::add(std::string name, Shape shape, std::vector<double> values) {
  if (values.size() != shape.size()) {
    throw std::invalid_argument("checkpoint array '" + name + "' size does not match shape");
  }
  arrays.push_back({std::move(name), shape, std::move(values)});
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& file) {
  nlohmann::json header;
  header["arrays"] = nlohmann::json::array();
  for (const auto& a : file.arrays) {
    header["arrays"].push_back({{"name", a.name}, {"shape", {a.shape.rows, a.shape.cols}}});
  }
  header["meta"] = file.meta;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::vector<float> buf;
  for (const auto& a : file.arrays) {
    buf.assign(a.values.begin(), a.values.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

CheckpointFile read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a checkpoint (bad magic): " + path.string());
  }
  std::uint32_t len = 0;
  char lenb[4];
  if (!in.read(lenb, 4)) throw std::runtime_error("truncated checkpoint header: " + path.string());
  std::memcpy(&len, lenb, 4);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) {
    throw std::runtime_error("truncated checkpoint header: " + path.string());
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed checkpoint header in " + path.string() + ": " + e.what());
  }

  CheckpointFile file;
  file.meta = header.value("meta", nlohmann::json::object());
  std::vector<float> buf;
  for (const auto& entry : header.at("arrays")) {
    NamedArray a;
    a.name = entry.at("name").get<std::string>();
    a.shape = {entry.at("shape").at(0).get<std::size_t>(), entry.at("shape").at(1).get<std::size_t>()};
    buf.resize(a.shape.size());
    if (!in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
      throw std::runtime_error("truncated checkpoint: array '" + a.name + "' in " +
                               path.string());
    }
    a.values.assign(buf.begin(), buf.end());
    file.arrays.push_back(std::move(a));
  }
  return file;
}

void round_to_f32(std::span<double> values) {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace mrgr::diff
