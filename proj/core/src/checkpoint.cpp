#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "elicit/encoder.hpp"
#include "elicit/error.hpp"

namespace elicit {
namespace {

constexpr std::array<char, 8> kMagic = {'E', 'L', 'I', 'C', 'I', 'T', 'E', 'M'};
constexpr std::size_t kHeaderBytes = 32;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const unsigned char* bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

void write_model(std::ostream& out, const EncoderModel& model) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, EncoderModel::kFormatVersion);
  put_le<std::uint32_t>(out, model.buckets());
  put_le<std::uint64_t>(out, model.dim());
  put_le<std::uint64_t>(out, model.seed());
  for (double w : model.weights()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(w));
  if (!out) throw ValidationError("failed writing encoder checkpoint");
}

EncoderModel read_model(std::istream& in) {
  std::array<unsigned char, kHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    throw ValidationError("checkpoint truncated: incomplete header");
  }
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    throw ValidationError("not an encoder checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(header.data() + 8);
  if (version != EncoderModel::kFormatVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(EncoderModel::kFormatVersion) + ")");
  }
  const auto buckets = get_le<std::uint32_t>(header.data() + 12);
  const auto dim = get_le<std::uint64_t>(header.data() + 16);
  const auto seed = get_le<std::uint64_t>(header.data() + 24);
  if (buckets == 0 || dim == 0 || dim > (std::uint64_t{1} << 20)) {
    throw ValidationError("checkpoint header has invalid geometry");
  }

  const std::size_t count = static_cast<std::size_t>(buckets) * dim;
  std::vector<unsigned char> raw(count * 8);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw ValidationError("checkpoint truncated: expected " + std::to_string(count) + " weights");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("checkpoint has trailing bytes");
  }
  std::vector<double> weights(count);
  for (std::size_t i = 0; i < count; ++i) {
    weights[i] = std::bit_cast<double>(get_le<std::uint64_t>(raw.data() + 8 * i));
    if (!std::isfinite(weights[i])) throw ValidationError("checkpoint has non-finite weights");
  }
  return EncoderModel(buckets, dim, seed, std::move(weights));
}

void save_model(const EncoderModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_model(out, model);
}

EncoderModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  return read_model(in);
}

}  // namespace elicit
