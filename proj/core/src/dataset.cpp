#include "fedcpu/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace fedcpu {

namespace {

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw std::runtime_error("load_idx: truncated header in " + path);
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

// Marsaglia-Tsang gamma sampler (unit scale).
double sample_gamma(double alpha, StreamRng& rng) {
  if (alpha < 1.0) {
    const double u = rng.uniform();
    return sample_gamma(alpha + 1.0, rng) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 int max_count) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("load_idx: cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("load_idx: cannot open " + labels_path);

  if (read_be_u32(img, images_path) != kImageMagic) {
    throw std::runtime_error("load_idx: bad image magic in " + images_path);
  }
  const std::uint32_t n_img = read_be_u32(img, images_path);
  const std::uint32_t rows = read_be_u32(img, images_path);
  const std::uint32_t cols = read_be_u32(img, images_path);

  if (read_be_u32(lab, labels_path) != kLabelMagic) {
    throw std::runtime_error("load_idx: bad label magic in " + labels_path);
  }
  const std::uint32_t n_lab = read_be_u32(lab, labels_path);
  if (n_img != n_lab) {
    throw std::runtime_error("load_idx: image/label count mismatch");
  }

  int n = static_cast<int>(n_img);
  if (max_count > 0) n = std::min(n, max_count);
  const int dim = static_cast<int>(rows * cols);

  Dataset data;
  data.features.resize(dim, n);
  data.labels.resize(n);
  std::vector<unsigned char> pix(dim);
  for (int i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(pix.data()), dim)) {
      throw std::runtime_error("load_idx: truncated image data in " + images_path);
    }
    for (int j = 0; j < dim; ++j) {
      data.features(j, i) = static_cast<double>(pix[j]) / 255.0;
    }
    char l;
    if (!lab.read(&l, 1)) {
      throw std::runtime_error("load_idx: truncated label data in " + labels_path);
    }
    data.labels[i] = static_cast<unsigned char>(l);
  }
  data.classes = data.labels.size() > 0 ? data.labels.maxCoeff() + 1 : 0;
  return data;
}

Dataset synthetic_blobs(int count, int input_dim, int classes, double noise_std,
                        StreamRng& rng) {
  if (count <= 0 || input_dim <= 0 || classes <= 1) {
    throw std::invalid_argument("synthetic_blobs: bad arguments");
  }
  // class means on the sphere of radius sqrt(input_dim)/2
  Eigen::MatrixXd means(input_dim, classes);
  for (int c = 0; c < classes; ++c) {
    for (int j = 0; j < input_dim; ++j) means(j, c) = rng.normal();
    means.col(c) *= 0.5 * std::sqrt(double(input_dim)) / means.col(c).norm();
  }
  Dataset data;
  data.classes = classes;
  data.features.resize(input_dim, count);
  data.labels.resize(count);
  for (int i = 0; i < count; ++i) {
    const int c = static_cast<int>(rng.below(classes));
    data.labels[i] = c;
    for (int j = 0; j < input_dim; ++j) {
      data.features(j, i) = means(j, c) + noise_std * rng.normal();
    }
  }
  return data;
}

DevicePartition partition_non_iid(const Dataset& data, int devices,
                                  int classes_per_device, double dirichlet_alpha,
                                  StreamRng& rng) {
  if (devices < 1) throw std::invalid_argument("partition_non_iid: devices must be >= 1");
  if (classes_per_device < 1 || classes_per_device > data.classes) {
    throw std::invalid_argument("partition_non_iid: classes_per_device out of range");
  }
  if (dirichlet_alpha <= 0.0) {
    throw std::invalid_argument("partition_non_iid: dirichlet_alpha must be positive");
  }

  const int C = data.classes;
  std::vector<std::vector<int>> by_class(C);
  for (int i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

  // device k works on classes (classes_per_device*k + j) mod C
  std::vector<std::vector<int>> devices_of_class(C);
  for (int k = 0; k < devices; ++k) {
    for (int j = 0; j < classes_per_device; ++j) {
      devices_of_class[(classes_per_device * k + j) % C].push_back(k);
    }
  }

  DevicePartition part;
  part.classes_per_device = classes_per_device;
  part.shards.assign(devices, {});

  for (int c = 0; c < C; ++c) {
    auto& users = devices_of_class[c];
    if (users.empty()) continue;
    auto& pool = by_class[c];
    if (pool.size() < users.size()) {
      throw std::invalid_argument("partition_non_iid: class " + std::to_string(c) +
                                  " has fewer samples than assigned devices");
    }
    // Fisher-Yates
    for (int i = static_cast<int>(pool.size()) - 1; i > 0; --i) {
      std::swap(pool[i], pool[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    }
    // unequal shares: Dirichlet(alpha) across the devices of this class
    std::vector<double> share(users.size());
    double total = 0.0;
    for (auto& s : share) {
      s = sample_gamma(dirichlet_alpha, rng);
      total += s;
    }
    std::vector<int> counts(users.size());
    int assigned = 0;
    for (std::size_t u = 0; u < users.size(); ++u) {
      // at least one sample per (device, class)
      counts[u] = std::max<int>(1, static_cast<int>(std::floor(
                                       share[u] / total * double(pool.size()))));
      assigned += counts[u];
    }
    // repair rounding drift against the pool size
    std::size_t u = 0;
    while (assigned > static_cast<int>(pool.size())) {
      if (counts[u] > 1) {
        --counts[u];
        --assigned;
      }
      u = (u + 1) % users.size();
    }
    int offset = 0;
    for (std::size_t v = 0; v < users.size(); ++v) {
      for (int i = 0; i < counts[v]; ++i) {
        part.shards[users[v]].push_back(pool[offset++]);
      }
    }
  }
  return part;
}

}  // namespace fedcpu
