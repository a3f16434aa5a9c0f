#include "sharplab/model_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "sharplab/error.hpp"

namespace sharplab {

namespace {

constexpr std::array<char, 8> kModelMagic = {'S', 'L', 'M', 'L', 'P', '\0', '\0', '\0'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(T));
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf.data(), buf.size());
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, sizeof(T)> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
    throw LengthError(path.string() + ": truncated model file");
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= std::uint64_t{buf[i]} << (8 * i);
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

Activation activation_from_tag(std::uint8_t tag, const std::filesystem::path& path) {
  if (tag > 3) throw FormatError(path.string() + ": unknown activation tag " + std::to_string(tag));
  return static_cast<Activation>(tag);
}

}  // namespace

void save_model(const Mlp& net, const std::filesystem::path& path) {
  net.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kModelMagic.data(), kModelMagic.size());
  put<std::uint32_t>(out, kModelVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_sizes.size()));
  for (auto n : net.layer_sizes) put<std::uint64_t>(out, n);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(net.hidden_activation));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(net.output_activation));
  put<std::uint16_t>(out, 0);
  for (std::size_t l = 0; l < net.depth(); ++l) {
    for (double v : net.weights[l].values()) put<double>(out, v);
    for (double v : net.biases[l]) put<double>(out, v);
  }
  if (!out) throw IoError("write to " + path.string() + " failed");
}

Mlp load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kModelMagic) {
    throw FormatError(path.string() + ": not a sharplab model file");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kModelVersion) {
    throw FormatError(path.string() + ": unsupported model version " + std::to_string(version));
  }
  const auto count = get<std::uint32_t>(in, path);
  if (count < 2 || count > 4096) throw FormatError(path.string() + ": implausible layer count");
  std::vector<std::size_t> sizes(count);
  for (auto& n : sizes) n = static_cast<std::size_t>(get<std::uint64_t>(in, path));
  const auto hidden = activation_from_tag(get<std::uint8_t>(in, path), path);
  const auto output = activation_from_tag(get<std::uint8_t>(in, path), path);
  get<std::uint16_t>(in, path);
  Mlp net = make_mlp(std::move(sizes), hidden, output);
  for (std::size_t l = 0; l < net.depth(); ++l) {
    for (double& v : net.weights[l].values()) v = get<double>(in, path);
    for (double& v : net.biases[l]) v = get<double>(in, path);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path.string() + ": trailing bytes after model payload");
  }
  return net;
}

nlohmann::json model_metadata(const Mlp& net, const nlohmann::json& extra) {
  nlohmann::json j = {
      {"format", "sharplab-mlp"},
      {"version", kModelVersion},
      {"layer_sizes", net.layer_sizes},
      {"hidden_activation", std::string(to_string(net.hidden_activation))},
      {"output_activation", std::string(to_string(net.output_activation))},
      {"weight_count", net.weight_count()},
      {"parameter_count", net.parameter_count()},
  };
  for (const auto& [key, value] : extra.items()) j[key] = value;
  return j;
}

void save_model_with_metadata(const Mlp& net, const std::filesystem::path& path,
                              const nlohmann::json& extra) {
  save_model(net, path);
  auto sidecar = path;
  sidecar += ".json";
  std::ofstream out(sidecar);
  if (!out) throw IoError("cannot open " + sidecar.string() + " for writing");
  out << model_metadata(net, extra).dump(2) << '\n';
}

}  // namespace sharplab
