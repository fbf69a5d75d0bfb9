#include "subdetector/encoder/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "subdetector/errors.hpp"

namespace subdetector {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'U', 'B', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("truncated checkpoint " + path.string());
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamList& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, params.size());
  for (const grad::TrainableParam* p : params) {
    put<std::uint64_t>(out, p->name.size());
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<std::uint64_t>(out, p->value.rank());
    for (std::size_t d : p->value.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(p->value.data().data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

std::vector<grad::TrainableParam> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw DataError(path.string() + " is not a checkpoint file");
  }
  if (auto v = get<std::uint32_t>(in, path); v != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(v));
  }
  const auto count = get<std::uint64_t>(in, path);
  std::vector<grad::TrainableParam> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = get<std::uint64_t>(in, path);
    if (len > 4096) throw DataError("corrupt checkpoint entry name in " + path.string());
    std::string name(len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(len))) throw DataError("truncated checkpoint " + path.string());
    const auto rank = get<std::uint64_t>(in, path);
    if (rank > 8) throw DataError("corrupt checkpoint rank for '" + name + "'");
    grad::Shape shape(rank);
    for (auto& d : shape) d = get<std::uint64_t>(in, path);
    grad::DenseArray value(shape);
    if (!in.read(reinterpret_cast<char*>(value.data().data()), static_cast<std::streamsize>(value.size() * sizeof(double)))) {
      throw DataError("truncated checkpoint " + path.string());
    }
    out.emplace_back(std::move(name), std::move(value));
  }
  return out;
}

void load_checkpoint(const std::filesystem::path& path, const ParamList& params) {
  std::unordered_map<std::string, grad::TrainableParam> stored;
  for (auto& p : read_checkpoint(path)) stored.emplace(p.name, std::move(p));
  for (grad::TrainableParam* p : params) {
    auto it = stored.find(p->name);
    if (it == stored.end()) throw DataError("checkpoint " + path.string() + " lacks parameter '" + p->name + "'");
    if (it->second.value.shape() != p->value.shape()) {
      throw DataError("checkpoint shape " + grad::shape_string(it->second.value.shape()) + " for '" + p->name +
                      "' does not match " + grad::shape_string(p->value.shape()));
    }
    p->value = it->second.value;
    p->grad = grad::DenseArray(p->value.shape(), 0.0);
  }
}

}  // namespace subdetector
