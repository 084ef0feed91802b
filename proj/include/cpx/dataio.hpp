#pragma once
// IDX ingestion, class partitioning, and synthetic problem generation.

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "cpx/objectives.hpp"

namespace cpx {

/// Images as raw bytes; `pixel` returns the [0,1]-scaled value.
struct IdxImageSet {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols
    std::vector<int> labels;

    [[nodiscard]] std::size_t pixels_per_image() const { return rows * cols; }
    [[nodiscard]] double pixel(std::size_t image, std::size_t offset) const {
        return static_cast<double>(pixels[image * pixels_per_image() + offset]) / 255.0;
    }
    /// Scaled features for a subset of images, in the given order.
    [[nodiscard]] SparseRows features(const std::vector<std::size_t>& which) const;
    [[nodiscard]] SparseRows all_features() const;
};

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

IdxImageSet load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
void write_idx(const IdxImageSet& set, const std::filesystem::path& images, const std::filesystem::path& labels);

/// Sample indices per client: client c receives every sample labelled c, in dataset order.
std::vector<std::vector<std::size_t>> class_partition(const IdxImageSet& data, std::size_t num_clients);

std::vector<SoftmaxObjective> partition_by_class(const IdxImageSet& data, std::size_t num_clients,
                                                 std::size_t batch_size, double regularizer = 0.0);

struct SyntheticLsSpec {
    std::size_t m = 25;
    std::size_t n = 200;
    std::size_t d = 20;
    double noise_std = 0.5;
    std::uint64_t seed = 0;
};

struct SyntheticLs {
    FederatedProblem problem;
    Vector y0;
};

/// A_i ~ N(0,1), y0 ~ N(0,1), b_i = A_i y0 + v_i with v_i ~ N(0, noise_std^2).
/// When `certify` is set the problem carries its global optimum.
SyntheticLs gen_synthetic_ls(const SyntheticLsSpec& spec, bool certify = true);

struct SyntheticSoftmaxSpec {
    std::size_t m = 4;
    std::size_t samples = 40;   // per client
    std::size_t features = 6;
    int classes = 3;
    std::size_t batch = 40;
    double regularizer = 0.1;
    std::uint64_t seed = 0;
};

/// Small softmax problem with client-skewed labels; certified optimum.
FederatedProblem gen_synthetic_softmax(const SyntheticSoftmaxSpec& spec);

}  // namespace cpx
