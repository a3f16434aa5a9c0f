#include "sharplab/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "sharplab/error.hpp"
#include "sharplab/numkit.hpp"

namespace sharplab {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;
constexpr std::array<char, 8> kCacheMagic = {'S', 'L', 'M', 'N', 'I', 'S', 'T', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void require_header(std::span<const std::uint8_t> bytes, std::size_t header_len, const char* what) {
  if (bytes.size() < header_len) {
    throw LengthError(std::string(what) + ": header needs " + std::to_string(header_len) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
}

void require_payload(std::span<const std::uint8_t> bytes, std::size_t expected, const char* what) {
  if (bytes.size() < expected) {
    throw LengthError(std::string(what) + ": expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
}

// Little-endian binary writer/reader for the cache file.
class Writer {
public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  template <typename T>
  void scalar(T v) {
    std::array<std::uint8_t, sizeof(T)> buf{};
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<std::uint8_t>(bits >> (8 * i));
    bytes(buf.data(), buf.size());
  }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw IoError("write to " + path.string() + " failed");
  }

private:
  std::ofstream out_;
};

class Reader {
public:
  Reader(std::vector<std::uint8_t> data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw LengthError(name_ + ": truncated, expected at least " + std::to_string(pos_ + n) +
                        " bytes, got " + std::to_string(data_.size()));
    }
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T scalar() {
    std::array<std::uint8_t, sizeof(T)> buf{};
    bytes(buf.data(), buf.size());
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= std::uint64_t{buf[i]} << (8 * i);
    T v;
    std::memcpy(&v, &bits, sizeof(T));
    return v;
  }
  bool at_end() const { return pos_ == data_.size(); }

private:
  std::vector<std::uint8_t> data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

Matrix parse_idx_images(std::span<const std::uint8_t> bytes) {
  require_header(bytes, 16, "idx images");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kImageMagic) {
    throw FormatError("idx images: bad magic " + std::to_string(magic) + ", expected 2051");
  }
  const std::size_t n = read_be32(bytes, 4);
  const std::size_t rows = read_be32(bytes, 8);
  const std::size_t cols = read_be32(bytes, 12);
  const std::size_t pixels = rows * cols;
  require_payload(bytes, 16 + n * pixels, "idx images");
  Matrix out(n, pixels);
  auto values = out.values();
  for (std::size_t i = 0; i < n * pixels; ++i) values[i] = bytes[16 + i] / 255.0;
  return out;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  require_header(bytes, 8, "idx labels");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kLabelMagic) {
    throw FormatError("idx labels: bad magic " + std::to_string(magic) + ", expected 2049");
  }
  const std::size_t n = read_be32(bytes, 4);
  require_payload(bytes, 8 + n, "idx labels");
  std::vector<std::uint8_t> labels(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= kNumClasses) {
      throw FormatError("idx labels: label " + std::to_string(labels[i]) + " at index " +
                        std::to_string(i) + " is outside 0-9");
    }
  }
  return labels;
}

std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> buf{};
  int got = 0;
  while ((got = gzread(f, buf.data(), static_cast<unsigned>(buf.size()))) > 0) {
    out.insert(out.end(), buf.begin(), buf.begin() + got);
  }
  const bool failed = got < 0;
  gzclose(f);
  if (failed) throw IoError("decompression of " + path.string() + " failed");
  return out;
}

std::vector<double> downsample_7x7(std::span<const double> image) {
  if (image.size() != kFullSide * kFullSide) {
    throw ShapeError("downsample_7x7: expected 784 pixels, got " + std::to_string(image.size()));
  }
  constexpr std::size_t block = kFullSide / kSmallSide;
  std::vector<double> out(kSmallPixels, 0.0);
  for (std::size_t br = 0; br < kSmallSide; ++br) {
    for (std::size_t bc = 0; bc < kSmallSide; ++bc) {
      double acc = 0.0;
      for (std::size_t r = 0; r < block; ++r)
        for (std::size_t c = 0; c < block; ++c)
          acc += image[(br * block + r) * kFullSide + bc * block + c];
      out[br * kSmallSide + bc] = acc / static_cast<double>(block * block);
    }
  }
  return out;
}

Matrix downsample_images(const Matrix& images) {
  Matrix out(images.rows(), kSmallPixels);
  for (std::size_t i = 0; i < images.rows(); ++i) {
    const auto small = downsample_7x7(images.row(i));
    std::copy(small.begin(), small.end(), out.row(i).begin());
  }
  return out;
}

Matrix one_hot(std::span<const std::uint8_t> labels) {
  Matrix out(labels.size(), kNumClasses);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= kNumClasses) throw ParameterError("one_hot: label outside 0-9");
    out(i, labels[i]) = 1.0;
  }
  return out;
}

Dataset make_split(const Matrix& images, std::span<const std::uint8_t> labels,
                   std::size_t train_size, std::uint64_t seed) {
  const std::size_t n = images.rows();
  if (labels.size() != n) {
    throw ShapeError("make_split: " + std::to_string(n) + " images but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (train_size >= n) {
    throw ParameterError("make_split: train_size " + std::to_string(train_size) +
                         " must be smaller than the example count " + std::to_string(n));
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  rng.shuffle(std::span<std::uint32_t>(order));

  Dataset d;
  d.seed = seed;
  d.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_size));
  d.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(train_size), order.end());

  auto take = [&](const std::vector<std::uint32_t>& idx, Matrix& x, std::vector<std::uint8_t>& y) {
    std::vector<std::size_t> rows(idx.begin(), idx.end());
    x = gather_rows(images, rows);
    y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) y[i] = labels[idx[i]];
  };
  take(d.train_indices, d.train_x, d.train_y);
  take(d.test_indices, d.test_x, d.test_y);
  d.train_y_onehot = one_hot(d.train_y);
  d.test_y_onehot = one_hot(d.test_y);
  return d;
}

Dataset prepare_mnist(const std::filesystem::path& dir, std::size_t train_size, std::uint64_t seed) {
  auto locate = [&](const std::string& stem) {
    for (const auto& candidate : {dir / stem, dir / (stem + ".gz")})
      if (std::filesystem::exists(candidate)) return candidate;
    throw IoError("missing " + stem + " (or .gz) in " + dir.string());
  };
  const auto image_bytes = read_maybe_gzip(locate("train-images-idx3-ubyte"));
  const auto label_bytes = read_maybe_gzip(locate("train-labels-idx1-ubyte"));
  const Matrix images = parse_idx_images(image_bytes);
  const auto labels = parse_idx_labels(label_bytes);
  return make_split(downsample_images(images), labels, train_size, seed);
}

void save_cache(const Dataset& data, const std::filesystem::path& path) {
  Writer w(path);
  w.bytes(kCacheMagic.data(), kCacheMagic.size());
  w.scalar<std::uint32_t>(kCacheVersion);
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(data.train_x.cols()));
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(kNumClasses));
  w.scalar<std::uint32_t>(0);
  w.scalar<std::uint64_t>(data.seed);
  w.scalar<std::uint64_t>(data.train_x.rows());
  w.scalar<std::uint64_t>(data.test_x.rows());
  for (auto i : data.train_indices) w.scalar<std::uint32_t>(i);
  for (auto i : data.test_indices) w.scalar<std::uint32_t>(i);
  w.bytes(data.train_y.data(), data.train_y.size());
  w.bytes(data.test_y.data(), data.test_y.size());
  for (double v : data.train_x.values()) w.scalar<double>(v);
  for (double v : data.test_x.values()) w.scalar<double>(v);
  w.finish(path);
}

Dataset load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(raw), path.string());

  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kCacheMagic) throw FormatError(path.string() + ": not a sharplab dataset cache");
  const auto version = r.scalar<std::uint32_t>();
  if (version != kCacheVersion) {
    throw FormatError(path.string() + ": unsupported cache version " + std::to_string(version));
  }
  const auto dim = r.scalar<std::uint32_t>();
  const auto classes = r.scalar<std::uint32_t>();
  r.scalar<std::uint32_t>();
  if (classes != kNumClasses) throw FormatError(path.string() + ": class count must be 10");

  Dataset d;
  d.seed = r.scalar<std::uint64_t>();
  const auto n_train = r.scalar<std::uint64_t>();
  const auto n_test = r.scalar<std::uint64_t>();
  d.train_indices.resize(n_train);
  d.test_indices.resize(n_test);
  for (auto& i : d.train_indices) i = r.scalar<std::uint32_t>();
  for (auto& i : d.test_indices) i = r.scalar<std::uint32_t>();
  d.train_y.resize(n_train);
  d.test_y.resize(n_test);
  r.bytes(d.train_y.data(), n_train);
  r.bytes(d.test_y.data(), n_test);
  d.train_x = Matrix(n_train, dim);
  d.test_x = Matrix(n_test, dim);
  for (double& v : d.train_x.values()) v = r.scalar<double>();
  for (double& v : d.test_x.values()) v = r.scalar<double>();
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes after payload");
  d.train_y_onehot = one_hot(d.train_y);
  d.test_y_onehot = one_hot(d.test_y);
  return d;
}

void export_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "split,label";
  for (std::size_t p = 0; p < data.train_x.cols(); ++p) out << ",p" << p;
  out << '\n';
  char buf[32];
  auto dump = [&](const char* split, const Matrix& x, const std::vector<std::uint8_t>& y) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      out << split << ',' << int{y[i]};
      for (double v : x.row(i)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
      }
      out << '\n';
    }
  };
  dump("train", data.train_x, data.train_y);
  dump("test", data.test_x, data.test_y);
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace sharplab
