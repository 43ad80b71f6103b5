#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "headline/error.hpp"
#include "headline/model.hpp"

namespace headline::model {

// Layout: magic, u32 version, u64 config fields, u64 tensor count, then per
// tensor u64 rows, u64 cols and rows*cols f64 values. Integers and doubles
// are little-endian.
namespace {

constexpr std::array<char, 8> kMagic = {'H', 'L', 'G', 'E', 'N', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(U));
}

template <typename T>
T get(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw IoError("checkpoint is truncated");
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParameters& params) {
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  const ModelConfig& c = params.config;
  for (std::uint64_t v : {c.d_model, c.n_heads, c.n_encoder_layers, c.n_decoder_layers, c.d_ff,
                          c.vocab_size, c.max_positions}) {
    put(out, v);
  }
  put(out, c.seed);
  std::uint64_t count = 0;
  params.visit([&count](const std::string&, const Matrix&) { ++count; });
  put(out, count);
  params.visit([&out](const std::string&, const Matrix& m) {
    put(out, static_cast<std::uint64_t>(m.rows()));
    put(out, static_cast<std::uint64_t>(m.cols()));
    for (double v : m.values()) put(out, v);
  });
  if (!out) throw IoError("failed to write checkpoint");
}

ModelParameters read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError("not a model checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig c;
  c.d_model = get<std::uint64_t>(in);
  c.n_heads = get<std::uint64_t>(in);
  c.n_encoder_layers = get<std::uint64_t>(in);
  c.n_decoder_layers = get<std::uint64_t>(in);
  c.d_ff = get<std::uint64_t>(in);
  c.vocab_size = get<std::uint64_t>(in);
  c.max_positions = get<std::uint64_t>(in);
  c.seed = get<std::uint64_t>(in);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint config is invalid: ") + e.what());
  }
  ModelParameters params = init_model(c);
  std::uint64_t expected = 0;
  params.visit([&expected](const std::string&, const Matrix&) { ++expected; });
  if (get<std::uint64_t>(in) != expected) throw IoError("checkpoint tensor count mismatch");
  params.visit([&in](const std::string& name, Matrix& m) {
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows != m.rows() || cols != m.cols()) throw IoError("checkpoint shape mismatch at " + name);
    for (double& v : m.values()) v = get<double>(in);
  });
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("checkpoint has trailing bytes");
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParameters& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, params);
}

ModelParameters load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace headline::model
