#include "sdrl/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

namespace sdrl::nn {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'D', 'R', 'L', 'P', 'A', 'R', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(std::istream& in) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw CheckpointError("checkpoint truncated");
    v |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const nlohmann::json& hyperparameters) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(params[i].rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(params[i].cols()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& m = params[i];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_le(out, std::bit_cast<std::uint64_t>(m(r, c)));
    }
  }
  if (!out) throw CheckpointError("write failed on " + path.string());

  std::ofstream side(sidecar_path(path), std::ios::trunc);
  if (!side) throw CheckpointError("cannot write checkpoint sidecar for " + path.string());
  side << hyperparameters.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw CheckpointError("bad checkpoint magic in " + path.string());
  if (get_le<std::uint32_t>(in) != kVersion) throw CheckpointError("unsupported checkpoint version");
  const auto count = get_le<std::uint32_t>(in);

  struct Entry {
    std::string name;
    std::uint64_t rows, cols;
  };
  std::vector<Entry> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint32_t>(in);
    if (len > 4096) throw CheckpointError("implausible tensor name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = get_le<std::uint64_t>(in);
    const auto cols = get_le<std::uint64_t>(in);
    if (!in || rows > (1u << 24) || cols > (1u << 24)) throw CheckpointError("bad shape table");
    table.push_back({std::move(name), rows, cols});
  }

  Checkpoint ck;
  for (const auto& e : table) {
    Matrix m(static_cast<Eigen::Index>(e.rows), static_cast<Eigen::Index>(e.cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = std::bit_cast<double>(get_le<std::uint64_t>(in));
    }
    try {
      ck.params.add(e.name, std::move(m));
    } catch (const std::invalid_argument& err) {
      throw CheckpointError(err.what());
    }
  }

  std::ifstream side(sidecar_path(path));
  if (!side) throw CheckpointError("missing checkpoint sidecar " + sidecar_path(path).string());
  try {
    ck.hyperparameters = nlohmann::json::parse(side);
  } catch (const nlohmann::json::exception& err) {
    throw CheckpointError(std::string("bad checkpoint sidecar: ") + err.what());
  }
  return ck;
}

}  // namespace sdrl::nn
