#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sharplab/matrix.hpp"

namespace sharplab {

inline constexpr std::size_t kNumClasses = 10;
inline constexpr std::size_t kFullSide = 28;
inline constexpr std::size_t kSmallSide = 7;
inline constexpr std::size_t kSmallPixels = kSmallSide * kSmallSide;

struct Dataset {
  Matrix train_x;          // n_train×49, values in [0, 1]
  Matrix train_y_onehot;   // n_train×10
  std::vector<std::uint8_t> train_y;
  Matrix test_x;
  Matrix test_y_onehot;
  std::vector<std::uint8_t> test_y;
  /// Row positions of each split in the source file, in split order.
  std::vector<std::uint32_t> train_indices;
  std::vector<std::uint32_t> test_indices;
  std::uint64_t seed = 0;
};

/// IDX3 image file (magic 2051). Returns n×(rows·cols) with bytes scaled by 1/255.
Matrix parse_idx_images(std::span<const std::uint8_t> bytes);
/// IDX1 label file (magic 2049). Labels must be in 0–9.
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

/// Reads a whole file, inflating it first when it is gzip-compressed.
std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path);

/// 28×28 → 7×7 by averaging aligned 4×4 blocks.
std::vector<double> downsample_7x7(std::span<const double> image);
/// Row-wise downsample of an n×784 matrix.
Matrix downsample_images(const Matrix& images);

Matrix one_hot(std::span<const std::uint8_t> labels);

/// Seeded shuffle of all rows; the first `train_size` become the training split.
Dataset make_split(const Matrix& images, std::span<const std::uint8_t> labels,
                   std::size_t train_size, std::uint64_t seed);

/// Loads train-images-idx3-ubyte / train-labels-idx1-ubyte (optionally .gz)
/// from `dir`, downsamples, and splits.
Dataset prepare_mnist(const std::filesystem::path& dir, std::size_t train_size,
                      std::uint64_t seed);

/// Cache file layout (all integers little-endian):
///   bytes 0–7    magic "SLMNIST\0"
///   u32          format version (1)
///   u32          pixel count per example (49)
///   u32          class count (10)
///   u32          reserved, 0
///   u64          split seed
///   u64          n_train
///   u64          n_test
///   u32[n_train] train source indices, then u32[n_test] test source indices
///   u8[n_train]  train labels, then u8[n_test] test labels
///   f64[n_train·49] train pixels row-major, then f64[n_test·49] test pixels
void save_cache(const Dataset& data, const std::filesystem::path& path);
Dataset load_cache(const std::filesystem::path& path);

/// label,p0,…,p48 rows for both splits with a leading `split` column.
void export_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace sharplab
