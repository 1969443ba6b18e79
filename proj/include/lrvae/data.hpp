// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lrvae/tensor.hpp"

namespace lrvae::data {

struct Dataset {
    Tensor x;  // [n x D]
    std::optional<std::vector<int>> labels;
    std::string name;
    std::uint64_t seed_of_origin = 0;  // for synthetic data
    std::size_t img_rows = 0;          // 0 when not image-shaped
    std::size_t img_cols = 0;

    std::size_t n() const { return x.rows(); }
    std::size_t dim() const { return x.cols(); }
};

// IDX container: big-endian header, u8 payload.
// magic 0x00000803 = images (3 dims), 0x00000801 = labels (1 dim).
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803u;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801u;

struct IdxHeader {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
};

// Images flattened row-major to D = rows*cols and scaled into [0,1] by 1/255.
// FormatError on a wrong magic (message carries the observed value),
// LengthError when declared and actual payload sizes differ.
Dataset load_idx(const std::string& image_path,
                 const std::optional<std::string>& label_path = std::nullopt);

// IDX writers for fixtures and subset extraction; pixels are clamped to
// [0,1] and quantized to u8.
void save_idx_images(const std::string& path, const Tensor& x, std::size_t rows,
                     std::size_t cols);
void save_idx_labels(const std::string& path, const std::vector<int>& labels);

struct GaussianMixtureSpec {
    std::size_t k = 1;
    std::size_t dim = 2;
    std::vector<std::vector<double>> means;  // k rows of `dim`
    std::vector<double> scales;              // k entries
};

struct PinwheelSpec {
    std::size_t arms = 5;
};

struct SyntheticSpec {
    enum class Kind { gaussian_mixture, pinwheel } kind = Kind::gaussian_mixture;
    GaussianMixtureSpec mixture;
    PinwheelSpec pinwheel;
};

Dataset gen_synthetic(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed);

// Seeded permutation of 0..n-1 (seed mixed with epoch) chunked into batches;
// the final short batch is kept.
std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size,
                                                 std::uint64_t seed, std::uint64_t epoch);

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx);

// Fixed-threshold binarization at 0.5 (the keep-continuous default skips it).
void binarize(Tensor& x, double threshold = 0.5);

// First 90% / last 10% after a seeded shuffle.
struct Split {
    Tensor train;
    Tensor val;
};
Split train_val_split(const Tensor& x, std::uint64_t seed);

}  // namespace lrvae::data
