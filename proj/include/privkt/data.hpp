#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "privkt/tensor.hpp"

namespace privkt {

enum class Provenance { synthetic, idx };

std::string to_string(Provenance p);

struct Dataset {
  Tensor features;                        // n x d
  std::optional<std::vector<int>> labels;  // absent for unlabelled public sets
  int classes = 0;
  Provenance provenance = Provenance::synthetic;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  bool labelled() const { return labels.has_value(); }

  Dataset subset(std::span<const std::size_t> idx, bool keep_labels) const;
  void validate() const;
};

/// M isotropic Gaussian clusters in d dimensions. Centre coordinates are
/// drawn from N(0, 2^2); points from N(centre, spread^2). Labels cycle
/// through the classes, so class sizes differ by at most one.
Dataset gen_blobs(std::size_t n, int classes, std::size_t dim, double spread,
                  std::uint64_t seed);

/// Big-endian IDX pair: images (magic 0x00000803, count, rows, cols, u8
/// pixels scaled to [0,1]) and labels (magic 0x00000801, count, u8).
Dataset load_idx(const std::filesystem::path& images,
                 const std::filesystem::path& labels);

/// Writes features (which must lie in [0,1]) as u8 pixels rounded to the
/// nearest 1/255. image_rows * image_cols must equal the feature width;
/// image_rows = 0 means a single row.
void write_idx(const Dataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels,
               std::size_t image_rows = 0);

// Affine map of all features into [0,1] using global min/max.
Dataset rescale_unit(const Dataset& data);

struct SplitSpec {
  double private_fraction = 0.5;
  std::size_t n_pub = 0;
  std::size_t n_test = 0;  // 0: everything not private or public
  bool strip_public_labels = true;
  bool allow_overlap = false;  // public drawn from the private records
  std::uint64_t seed = 0;
};

struct Splits {
  Dataset private_set;
  Dataset public_set;
  Dataset test_set;
  std::vector<std::size_t> private_idx;
  std::vector<std::size_t> public_idx;
  std::vector<std::size_t> test_idx;
};

Splits split(const Dataset& data, const SplitSpec& spec);

// Throws InputError if the two index sets intersect.
void check_disjoint(std::span<const std::size_t> a,
                    std::span<const std::size_t> b);

/// Per-dimension standardization fitted on one tensor and applied to others.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Tensor& x);
  void apply(Tensor& x) const;
};

// Fits on the private split and applies to all three.
void standardize(Splits& splits);

}  // namespace privkt
