#include "mird/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mird {

namespace {

constexpr char kMagic[4] = {'M', 'I', 'R', 'D'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, const std::string& path) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("checkpoint: truncated file " + path);
  return v;
}

ModelMeta read_header(std::ifstream& is, const std::string& path) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw Error("checkpoint: bad magic in " + path);
  const auto version = get<std::uint32_t>(is, path);
  if (version != kVersion)
    throw Error("checkpoint: unsupported version " + std::to_string(version) +
                " in " + path);
  ModelMeta meta;
  meta.d = static_cast<int>(get<std::uint32_t>(is, path));
  meta.d_w = static_cast<int>(get<std::uint32_t>(is, path));
  meta.d_v = static_cast<int>(get<std::uint32_t>(is, path));
  meta.d_a = static_cast<int>(get<std::uint32_t>(is, path));
  meta.vocab = static_cast<int>(get<std::uint32_t>(is, path));
  meta.epsilon = get<double>(is, path);
  return meta;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelMeta& meta,
                     const ParamRegistry& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(meta.d));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(meta.d_w));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(meta.d_v));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(meta.d_a));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(meta.vocab));
  put<double>(os, meta.epsilon);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, p] : params) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.ndim()));
    for (int d : p.shape()) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(p.data().data()),
             static_cast<std::streamsize>(p.data().size() * sizeof(double)));
  }
  if (!os) throw Error("checkpoint: write failure on " + path);
}

ModelMeta load_checkpoint(const std::string& path, ParamRegistry& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("checkpoint: cannot open " + path);
  const ModelMeta meta = read_header(is, path);
  const auto count = get<std::uint32_t>(is, path);
  if (count != params.size())
    throw Error("checkpoint: " + path + " holds " + std::to_string(count) +
                " records, expected " + std::to_string(params.size()));
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = get<std::uint32_t>(is, path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw Error("checkpoint: truncated file " + path);
    auto& [pname, p] = params[k];
    if (name != pname)
      throw Error("checkpoint: record '" + name + "' where '" + pname +
                  "' was expected in " + path);
    const auto ndim = get<std::uint32_t>(is, path);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(get<std::uint32_t>(is, path));
    if (shape != p.shape())
      throw Error("checkpoint: shape " + shape_str(shape) + " for '" + name +
                  "', expected " + shape_str(p.shape()));
    is.read(reinterpret_cast<char*>(p.node()->val.data()),
            static_cast<std::streamsize>(p.data().size() * sizeof(double)));
    if (!is) throw Error("checkpoint: truncated file " + path);
  }
  return meta;
}

ModelMeta peek_checkpoint_meta(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("checkpoint: cannot open " + path);
  return read_header(is, path);
}

}  // namespace mird
