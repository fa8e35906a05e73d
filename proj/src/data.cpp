#include "privkt/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

#include "privkt/error.hpp"

namespace privkt {

std::string to_string(Provenance p) {
  return p == Provenance::idx ? "idx" : "synthetic";
}

Dataset Dataset::subset(std::span<const std::size_t> idx,
                        bool keep_labels) const {
  Dataset out;
  out.features = features.gather_rows(idx);
  out.classes = classes;
  out.provenance = provenance;
  if (keep_labels && labels) {
    std::vector<int> l;
    l.reserve(idx.size());
    for (std::size_t i : idx) l.push_back((*labels)[i]);
    out.labels = std::move(l);
  }
  return out;
}

void Dataset::validate() const {
  if (size() == 0) throw InputError("dataset is empty");
  if (labels) {
    if (labels->size() != size()) {
      throw InputError("label count does not match feature rows");
    }
    for (int y : *labels) {
      if (y < 0 || y >= classes) {
        throw InputError("label " + std::to_string(y) + " outside [0, " +
                         std::to_string(classes) + ")");
      }
    }
  }
}

Dataset gen_blobs(std::size_t n, int classes, std::size_t dim, double spread,
                  std::uint64_t seed) {
  if (classes < 2) throw ConfigError("blobs need at least 2 classes");
  if (n < static_cast<std::size_t>(classes)) {
    throw ConfigError("blobs need n >= number of classes");
  }
  if (dim < 2) throw ConfigError("blobs need dimension >= 2");
  if (!(spread >= 0.0) || !std::isfinite(spread)) {
    throw ConfigError("blob spread must be finite and non-negative");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  Tensor centres(static_cast<std::size_t>(classes), dim);
  for (double& c : centres.values) c = 2.0 * unit(rng);

  Dataset out;
  out.features = Tensor(n, dim);
  out.labels = std::vector<int>(n);
  out.classes = classes;
  out.provenance = Provenance::synthetic;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % static_cast<std::size_t>(classes));
    (*out.labels)[i] = y;
    auto c = centres.row(static_cast<std::size_t>(y));
    auto x = out.features.row(i);
    for (std::size_t k = 0; k < dim; ++k) x[k] = c[k] + spread * unit(rng);
  }
  return out;
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open IDX file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf,
                        std::size_t offset, const std::string& what) {
  if (buf.size() < offset + 4) throw FormatError("truncated IDX header in " + what);
  return (std::uint32_t{buf[offset]} << 24) |
         (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>((v >> 24) & 0xFF),
                              static_cast<char>((v >> 16) & 0xFF),
                              static_cast<char>((v >> 8) & 0xFF),
                              static_cast<char>(v & 0xFF)};
  out.write(b.data(), 4);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images,
                 const std::filesystem::path& labels) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);
  const std::string iname = images.string();
  const std::string lname = labels.string();

  if (read_be32(img, 0, iname) != kImageMagic) {
    throw FormatError("bad image magic in " + iname);
  }
  if (read_be32(lab, 0, lname) != kLabelMagic) {
    throw FormatError("bad label magic in " + lname);
  }
  const std::size_t count = read_be32(img, 4, iname);
  const std::size_t rows = read_be32(img, 8, iname);
  const std::size_t cols = read_be32(img, 12, iname);
  const std::size_t lcount = read_be32(lab, 4, lname);
  if (count != lcount) {
    throw FormatError("image count " + std::to_string(count) +
                      " does not match label count " + std::to_string(lcount));
  }
  const std::size_t pixels = rows * cols;
  if (img.size() != 16 + count * pixels) {
    throw FormatError("image file " + iname + " has wrong payload size");
  }
  if (lab.size() != 8 + count) {
    throw FormatError("label file " + lname + " has wrong payload size");
  }
  if (count == 0 || pixels == 0) throw FormatError("IDX file has no data");

  Dataset out;
  out.provenance = Provenance::idx;
  out.features = Tensor(count, pixels);
  for (std::size_t i = 0; i < count * pixels; ++i) {
    out.features.values[i] = static_cast<double>(img[16 + i]) / 255.0;
  }
  std::vector<int> y(count);
  int max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    y[i] = lab[8 + i];
    max_label = std::max(max_label, y[i]);
  }
  out.labels = std::move(y);
  out.classes = max_label + 1;
  return out;
}

void write_idx(const Dataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels, std::size_t image_rows) {
  if (!data.labels) throw InputError("IDX export needs labels");
  const std::size_t d = data.dim();
  const std::size_t rows = image_rows == 0 ? 1 : image_rows;
  if (d % rows != 0) {
    throw ConfigError("image rows do not divide the feature width");
  }
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw std::runtime_error("cannot write IDX files");
  write_be32(img, kImageMagic);
  write_be32(img, static_cast<std::uint32_t>(data.size()));
  write_be32(img, static_cast<std::uint32_t>(rows));
  write_be32(img, static_cast<std::uint32_t>(d / rows));
  for (double v : data.features.values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InputError("IDX export needs features in [0,1]");
    }
    img.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  write_be32(lab, kLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (int y : *data.labels) {
    if (y < 0 || y > 255) throw InputError("IDX labels must fit in a byte");
    lab.put(static_cast<char>(static_cast<unsigned char>(y)));
  }
}

Dataset rescale_unit(const Dataset& data) {
  Dataset out = data;
  const auto [lo, hi] = std::minmax_element(data.features.values.begin(),
                                            data.features.values.end());
  const double range = *hi - *lo;
  for (double& v : out.features.values) {
    v = range > 0.0 ? (v - *lo) / range : 0.0;
  }
  return out;
}

void check_disjoint(std::span<const std::size_t> a,
                    std::span<const std::size_t> b) {
  std::unordered_set<std::size_t> seen(a.begin(), a.end());
  for (std::size_t i : b) {
    if (seen.count(i)) {
      throw InputError("split index " + std::to_string(i) +
                       " appears in both partitions");
    }
  }
}

Splits split(const Dataset& data, const SplitSpec& spec) {
  data.validate();
  const std::size_t n = data.size();
  if (!(spec.private_fraction >= 0.0 && spec.private_fraction <= 1.0)) {
    throw ConfigError("private fraction must lie in [0, 1]");
  }
  const auto n_priv = static_cast<std::size_t>(
      std::llround(spec.private_fraction * static_cast<double>(n)));
  const std::size_t pool = spec.allow_overlap ? n_priv : n - n_priv;
  if (spec.n_pub > pool) {
    throw ConfigError("public size " + std::to_string(spec.n_pub) +
                      " exceeds the " + std::to_string(pool) +
                      " records available");
  }
  const std::size_t used = n_priv + (spec.allow_overlap ? 0 : spec.n_pub);
  if (spec.n_test > n - used) {
    throw ConfigError("test size exceeds the records left after splitting");
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  Splits out;
  out.private_idx.assign(perm.begin(), perm.begin() + n_priv);
  if (spec.allow_overlap) {
    std::vector<std::size_t> from = out.private_idx;
    std::shuffle(from.begin(), from.end(), rng);
    out.public_idx.assign(from.begin(), from.begin() + spec.n_pub);
    out.test_idx.assign(perm.begin() + n_priv, perm.end());
  } else {
    out.public_idx.assign(perm.begin() + n_priv,
                          perm.begin() + n_priv + spec.n_pub);
    out.test_idx.assign(perm.begin() + n_priv + spec.n_pub, perm.end());
    check_disjoint(out.private_idx, out.public_idx);
  }
  if (spec.n_test > 0) out.test_idx.resize(spec.n_test);
  check_disjoint(out.private_idx, out.test_idx);
  check_disjoint(out.public_idx, out.test_idx);

  out.private_set = data.subset(out.private_idx, true);
  out.public_set = data.subset(out.public_idx, !spec.strip_public_labels);
  out.test_set = data.subset(out.test_idx, true);
  return out;
}

Standardizer Standardizer::fit(const Tensor& x) {
  const std::size_t d = x.cols();
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  const std::size_t n = x.rows();
  if (n == 0) return s;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < d; ++k) s.mean[k] += x.at(r, k);
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < d; ++k) {
      const double c = x.at(r, k) - s.mean[k];
      var[k] += c * c;
    }
  }
  for (std::size_t k = 0; k < d; ++k) {
    const double sd = std::sqrt(var[k] / static_cast<double>(n));
    s.scale[k] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply(Tensor& x) const {
  if (x.rows() == 0) return;
  if (x.cols() != mean.size()) {
    throw ConfigError("standardizer width does not match features");
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t k = 0; k < row.size(); ++k) {
      row[k] = (row[k] - mean[k]) / scale[k];
    }
  }
}

void standardize(Splits& splits) {
  const auto s = Standardizer::fit(splits.private_set.features);
  s.apply(splits.private_set.features);
  s.apply(splits.public_set.features);
  s.apply(splits.test_set.features);
}

}  // namespace privkt
