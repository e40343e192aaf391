#include "lrta/nn/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <map>

namespace lrta::nn {

namespace {

constexpr char kMagic[8] = {'L', 'R', 'T', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    std::memcpy(&bits, &v, sizeof(T));
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw LoadError("truncated checkpoint archive " + path.string());
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  T v{};
  if constexpr (std::is_floating_point_v<T>) {
    std::memcpy(&v, &bits, sizeof(T));
  } else {
    v = static_cast<T>(bits);
  }
  return v;
}

}  // namespace

void save_parameters(const std::filesystem::path& path, const ParameterStore& store) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw LoadError("cannot write checkpoint " + path.string());
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, store.size());
  for (const auto& p : store.all()) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint32_t>(os, 2);
    put<std::uint64_t>(os, static_cast<std::uint64_t>(p.value.rows()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(p.value.cols()));
    for (Index i = 0; i < p.value.size(); ++i) put<double>(os, p.value.data()[i]);
  }
  if (!os) throw LoadError("failed writing checkpoint " + path.string());
}

void load_parameters(const std::filesystem::path& path, ParameterStore& store) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("missing checkpoint archive " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw LoadError("not a checkpoint archive: " + path.string());
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kVersion) throw VersioningError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get<std::uint64_t>(is, path);
  std::map<std::string, Tensor> loaded;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = get<std::uint32_t>(is, path);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw LoadError("truncated checkpoint archive " + path.string());
    const auto ndim = get<std::uint32_t>(is, path);
    std::vector<std::uint64_t> dims;
    for (std::uint32_t d = 0; d < ndim; ++d) dims.push_back(get<std::uint64_t>(is, path));
    Index rows = 1, cols = 1;
    if (ndim == 1) {
      cols = static_cast<Index>(dims[0]);
    } else if (ndim == 2) {
      rows = static_cast<Index>(dims[0]);
      cols = static_cast<Index>(dims[1]);
    } else {
      throw VersioningError("parameter '" + name + "' has unsupported rank " + std::to_string(ndim));
    }
    Tensor t(rows, cols);
    for (Index i = 0; i < t.size(); ++i) t.data()[i] = get<double>(is, path);
    loaded.emplace(std::move(name), std::move(t));
  }
  for (auto& p : store.all()) {
    auto it = loaded.find(p.name);
    if (it == loaded.end()) throw VersioningError("checkpoint lacks parameter '" + p.name + "'");
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
      throw VersioningError("parameter '" + p.name + "' shape " + shape_string(it->second) + " in checkpoint, " +
                            shape_string(p.value) + " in model");
    }
    p.value = it->second;
    p.zero_grad();
  }
}

}  // namespace lrta::nn
