#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "doctest.h"
#include "sharplab/dataset.hpp"
#include "sharplab/error.hpp"
#include "sharplab/numkit.hpp"

using namespace sharplab;
namespace fs = std::filesystem;

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::vector<std::uint8_t> idx_images(std::uint32_t n, const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> out;
  put_be32(out, 2051);
  put_be32(out, n);
  put_be32(out, 28);
  put_be32(out, 28);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> out;
  put_be32(out, 2049);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

fs::path mnist_dir() {
  if (const char* env = std::getenv("SHARPLAB_DATA_DIR")) return env;
  return SHARPLAB_MNIST_DIR;
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sharplab_test_dataset";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("parse_idx_images scales bytes and checks the header") {
  const Matrix zero = parse_idx_images(idx_images(1, std::vector<std::uint8_t>(784, 0)));
  CHECK(zero.rows() == 1);
  CHECK(zero.cols() == 784);
  CHECK(std::all_of(zero.values().begin(), zero.values().end(), [](double v) { return v == 0.0; }));

  std::vector<std::uint8_t> payload(784, 0);
  payload[0] = 255;
  payload[1] = 51;
  const Matrix m = parse_idx_images(idx_images(1, payload));
  CHECK(m(0, 0) == 1.0);
  CHECK(m(0, 1) == 0.2);

  auto bad = idx_images(1, payload);
  bad[3] = 0x01;
  CHECK_THROWS_AS(parse_idx_images(bad), FormatError);

  auto truncated = idx_images(2, payload);
  try {
    parse_idx_images(truncated);
    FAIL("expected LengthError");
  } catch (const LengthError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("expected 1584") != std::string::npos);
    CHECK(msg.find("got 800") != std::string::npos);
  }
}

TEST_CASE("parse_idx_labels") {
  const auto labels = parse_idx_labels(idx_labels({5, 0, 9}));
  CHECK(labels == std::vector<std::uint8_t>{5, 0, 9});
  CHECK_THROWS_AS(parse_idx_labels(idx_labels({1, 10})), FormatError);
  auto wrong_magic = idx_labels({1});
  wrong_magic[3] = 0x03;
  CHECK_THROWS_AS(parse_idx_labels(wrong_magic), FormatError);
  auto truncated = idx_labels({1, 2, 3});
  truncated.pop_back();
  CHECK_THROWS_AS(parse_idx_labels(truncated), LengthError);
}

TEST_CASE("downsample_7x7") {
  const std::vector<double> ones(784, 1.0);
  for (double v : downsample_7x7(ones)) CHECK(v == 1.0);

  std::vector<double> corner(784, 0.0);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) corner[r * 28 + c] = 1.0;
  const auto out = downsample_7x7(corner);
  CHECK(out[0] == 1.0);
  for (std::size_t i = 1; i < 49; ++i) CHECK(out[i] == 0.0);

  CHECK_THROWS_AS(downsample_7x7(std::vector<double>(783, 0.0)), ShapeError);
}

TEST_CASE("downsample_7x7 matches per-block averaging") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> image(784);
    for (double& v : image) v = rng.uniform();
    const auto out = downsample_7x7(image);
    for (int br = 0; br < 7; ++br)
      for (int bc = 0; bc < 7; ++bc) {
        std::array<double, 16> block{};
        int k = 0;
        for (int r = 0; r < 4; ++r)
          for (int c = 0; c < 4; ++c) block[k++] = image[(br * 4 + r) * 28 + bc * 4 + c];
        const double mean = std::accumulate(block.begin(), block.end(), 0.0) / 16.0;
        CHECK(std::abs(out[br * 7 + bc] - mean) <= 1e-15);
        CHECK(out[br * 7 + bc] >= 0.0);
        CHECK(out[br * 7 + bc] <= 1.0);
      }
  }
}

TEST_CASE("make_split partitions deterministically") {
  const std::size_t n = 200;
  Matrix images(n, 49);
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<std::uint8_t>(i % 10);
    images(i, 0) = static_cast<double>(i) / n;
  }
  const Dataset a = make_split(images, labels, 30, 7);
  const Dataset b = make_split(images, labels, 30, 7);
  CHECK(a.train_indices == b.train_indices);
  CHECK(a.test_indices == b.test_indices);
  CHECK(a.train_x.rows() == 30);
  CHECK(a.test_x.rows() == 170);

  std::set<std::uint32_t> all(a.train_indices.begin(), a.train_indices.end());
  for (auto i : a.test_indices) CHECK(all.insert(i).second);
  CHECK(all.size() == n);
  CHECK(*all.rbegin() == n - 1);

  // rows follow their indices
  for (std::size_t r = 0; r < 30; ++r) {
    CHECK(a.train_x(r, 0) == images(a.train_indices[r], 0));
    CHECK(a.train_y[r] == labels[a.train_indices[r]]);
    CHECK(a.train_y_onehot(r, a.train_y[r]) == 1.0);
  }
  const Dataset c = make_split(images, labels, 30, 8);
  CHECK(c.train_indices != a.train_indices);

  CHECK_THROWS_AS(make_split(images, labels, n, 1), ParameterError);
}

TEST_CASE("one_hot rows have a single unit entry") {
  const std::vector<std::uint8_t> labels{0, 3, 9, 3};
  const Matrix m = one_hot(labels);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    int ones = 0;
    for (double v : m.row(r)) {
      sum += v;
      ones += v == 1.0;
    }
    CHECK(sum == 1.0);
    CHECK(ones == 1);
    CHECK(m(r, labels[r]) == 1.0);
  }
}

TEST_CASE("cache round trip is bit-identical") {
  Rng rng(4);
  const std::size_t n = 50;
  std::vector<std::uint8_t> payload(n * 784);
  std::vector<std::uint8_t> raw_labels(n);
  for (auto& b : payload) b = static_cast<std::uint8_t>(rng.uniform_index(256));
  for (auto& l : raw_labels) l = static_cast<std::uint8_t>(rng.uniform_index(10));
  const Matrix images = downsample_images(parse_idx_images(idx_images(n, payload)));
  const auto labels = parse_idx_labels(idx_labels(raw_labels));
  const Dataset data = make_split(images, labels, 12, 99);

  const fs::path path = temp_path("roundtrip.bin");
  save_cache(data, path);
  const Dataset back = load_cache(path);
  CHECK(back.train_x == data.train_x);
  CHECK(back.test_x == data.test_x);
  CHECK(back.train_y == data.train_y);
  CHECK(back.test_y == data.test_y);
  CHECK(back.train_y_onehot == data.train_y_onehot);
  CHECK(back.test_y_onehot == data.test_y_onehot);
  CHECK(back.train_indices == data.train_indices);
  CHECK(back.test_indices == data.test_indices);
  CHECK(back.seed == 99);

  // corrupted magic and trailing garbage are both rejected
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  CHECK_THROWS_AS(load_cache(path), FormatError);
  save_cache(data, path);
  {
    std::ofstream f(path, std::ios::app | std::ios::binary);
    f.put('\0');
  }
  CHECK_THROWS(load_cache(path));
}

TEST_CASE("full MNIST training file") {
  const fs::path dir = mnist_dir();
  REQUIRE_MESSAGE((fs::exists(dir / "train-labels-idx1-ubyte") || fs::exists(dir / "train-labels-idx1-ubyte.gz")),
                  "MNIST files not found in " << dir.string() << "; run tools/fetch_mnist.sh");
  auto find = [&](const std::string& stem) {
    return fs::exists(dir / stem) ? dir / stem : dir / (stem + ".gz");
  };
  const auto labels = parse_idx_labels(read_maybe_gzip(find("train-labels-idx1-ubyte")));
  CHECK(labels.size() == 60000);
  const Matrix images = parse_idx_images(read_maybe_gzip(find("train-images-idx3-ubyte")));
  CHECK(images.rows() == 60000);

  const Dataset data = prepare_mnist(dir, 1000, 0);
  CHECK(data.train_x.rows() == 1000);
  CHECK(data.test_x.rows() == 59000);
  CHECK(data.train_x.cols() == 49);
  for (double v : data.train_x.values()) REQUIRE((v >= 0.0 && v <= 1.0));

  std::vector<std::uint32_t> all(data.train_indices);
  all.insert(all.end(), data.test_indices.begin(), data.test_indices.end());
  std::sort(all.begin(), all.end());
  for (std::uint32_t i = 0; i < all.size(); ++i) REQUIRE(all[i] == i);

  std::array<std::size_t, 10> full{}, split{};
  for (auto l : labels) ++full[l];
  for (auto l : data.train_y) ++split[l];
  for (auto l : data.test_y) ++split[l];
  CHECK(full == split);

  // the downsampled rows agree with the raw file through the recorded indices
  const auto row = downsample_7x7(images.row(data.train_indices[0]));
  for (std::size_t j = 0; j < 49; ++j) CHECK(data.train_x(0, j) == row[j]);
}
