#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "snn/tensor.hpp"

namespace snn {

enum class Split { train, val, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct Dataset {
  Tensor images;  // [N, 3, H, W]
  std::vector<int> labels;
  int class_count = 0;
  Split split = Split::train;

  std::size_t size() const { return labels.size(); }
  Dataset subset(std::span<const std::size_t> indices) const;
  // Copies samples `indices` into a batch tensor.
  Tensor gather(std::span<const std::size_t> indices) const;
};

// Channel statistics applied to every dataset.
inline constexpr std::array<float, 3> kNormMean{0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kNormStd{0.229f, 0.224f, 0.225f};

// In place, per channel: (x - mean) / std.
void normalize(Tensor& images);
void denormalize(Tensor& images);

// One CIFAR binary file. variant 10: <label><3072 px>; variant 100:
// <coarse><fine><3072 px>, fine label kept. Pixels scaled to [0, 1].
Dataset load_cifar_bin(const std::filesystem::path& path, int variant);
// Standard file names under `dir`: data_batch_{1..5}.bin / test_batch.bin for
// CIFAR-10, train.bin / test.bin for CIFAR-100.
Dataset load_cifar_dir(const std::filesystem::path& dir, int variant, Split split);

// tiny-imagenet-200 layout: wnids.txt, train/<wnid>/images/*, val/images/* with
// val/val_annotations.txt. Images are resized 64 -> 32 bilinearly. Classes are
// numbered in sorted wnid order.
Dataset load_tinyimagenet(const std::filesystem::path& dir, Split split);

// Deterministic class-conditioned Gaussian blobs; each class owns a blob
// position and colour.
Dataset synth_blobs(std::uint64_t seed, int classes, int per_class, int size);

// Seeded shuffle, then the first round(fraction * N) samples form the second
// (validation) part.
std::pair<Dataset, Dataset> train_val_split(const Dataset& data, double fraction,
                                            std::uint64_t seed);
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double fraction, std::uint64_t seed);

// Bilinear resampling of a planar [C, H, W] image, half-pixel centres (the
// align_corners=false convention).
std::vector<float> resize_bilinear(std::span<const float> src, std::size_t channels,
                                   std::size_t in_h, std::size_t in_w, std::size_t out_h,
                                   std::size_t out_w);

// Decodes a JPEG or binary PPM file to planar RGB floats in [0, 1].
struct Image {
  std::size_t height = 0, width = 0;
  std::vector<float> planes;  // [3, H, W]
};
Image read_image(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& image);

}  // namespace snn
