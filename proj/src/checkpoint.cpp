#include "cranial/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string_view>

namespace cranial {

namespace {

constexpr std::string_view kMagic = "CRNLCKPT";
constexpr std::uint32_t kVersion = 1;

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
}

template <typename U>
U get_le(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw CheckpointError("checkpoint truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(in[pos + i]) << (8 * i);
  pos += sizeof(U);
  return v;
}

void put_doubles(std::vector<std::uint8_t>& out, const std::vector<double>& values) {
  for (double d : values) put_le(out, std::bit_cast<std::uint64_t>(d));
}

void get_doubles(std::span<const std::uint8_t> in, std::size_t& pos, std::vector<double>& values) {
  for (double& d : values) d = std::bit_cast<double>(get_le<std::uint64_t>(in, pos));
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model& model) {
  const nlohmann::json header = {{"network", to_json(model.config)}, {"seed", model.seed}};
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_le(out, kVersion);
  put_le(out, static_cast<std::uint64_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const ConvKernel& k : model.params) {
    put_doubles(out, k.weights);
    put_doubles(out, k.bias);
  }
  return out;
}

Model deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw CheckpointError("not a model checkpoint (bad magic)");
  }
  std::size_t pos = kMagic.size();
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto len = get_le<std::uint64_t>(bytes, pos);
  if (pos + len > bytes.size()) throw CheckpointError("checkpoint header truncated");
  const std::string text(reinterpret_cast<const char*>(bytes.data() + pos), len);
  pos += len;

  const auto header = nlohmann::json::parse(text);
  Model m = zero_model(network_config_from_json(header.at("network")));
  m.seed = header.at("seed").get<std::uint64_t>();
  for (ConvKernel& k : m.params) {
    get_doubles(bytes, pos, k.weights);
    get_doubles(bytes, pos, k.bias);
  }
  if (pos != bytes.size()) throw CheckpointError("trailing bytes after parameters");
  return m;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace cranial
