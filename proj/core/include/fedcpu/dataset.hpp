#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fedcpu/rng.hpp"

namespace fedcpu {

struct Dataset {
  Eigen::MatrixXd features;  // dim x n
  Eigen::VectorXi labels;    // n
  int classes = 0;

  int size() const { return static_cast<int>(labels.size()); }
  int feature_dim() const { return static_cast<int>(features.rows()); }
};

/// Reads IDX-format image + label files (standard magic numbers, big-endian
/// dims). Pixels are scaled to [0, 1]. max_count == 0 loads everything.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 int max_count = 0);

/// Ten-class (or `classes`-class) Gaussian blob mixture: class means drawn
/// on a sphere, isotropic noise around them. The built-in stand-in when no
/// dataset files are configured.
Dataset synthetic_blobs(int count, int input_dim, int classes, double noise_std,
                        StreamRng& rng);

/// Disjoint per-device index lists; every shard draws from exactly
/// classes_per_device classes and sizes vary (Dirichlet split within each
/// class across the devices assigned to it).
struct DevicePartition {
  std::vector<std::vector<int>> shards;
  int classes_per_device = 0;
};

DevicePartition partition_non_iid(const Dataset& data, int devices,
                                  int classes_per_device, double dirichlet_alpha,
                                  StreamRng& rng);

}  // namespace fedcpu
