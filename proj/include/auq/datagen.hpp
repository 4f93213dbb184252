#pragma once
// Synthetic dataset generators, train/test splitting, and feature corruption
// for distribution-shift studies.

#include <Eigen/Core>
#include <cstdint>
#include <utility>

#include "auq/dataset.hpp"

namespace auq {

// Two interleaved half-circles of unit radius (class 0 on the upper arc),
// evenly spaced along the arcs with N(0, noise_sd^2) jitter per coordinate.
Dataset make_two_moons(int n, double noise_sd, std::uint64_t seed);

// Gaussian clusters around the given centers (one row per center), samples
// assigned to centers round-robin so classes stay balanced. Label = center row.
Dataset make_blobs(const Eigen::MatrixXd& centers, int n, double sd,
                   std::uint64_t seed);

// Deterministic shuffled split into n_train / (n - n_train) rows.
std::pair<Dataset, Dataset> split(const Dataset& ds, int n_train,
                                  std::uint64_t seed);

enum class CorruptionKind { GaussianNoise, UniformNoise, FeatureShift };

// Feature perturbation of documented magnitude, increasing with intensity:
//   GaussianNoise  per-cell N(0, (0.1 * intensity)^2)
//   UniformNoise   per-cell U(-0.15 * intensity, +0.15 * intensity)
//   FeatureShift   one seed-fixed unit direction scaled by 0.2 * intensity
struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::GaussianNoise;
  int intensity = 1;  // 1..5
  std::uint64_t seed = 0;
};

// Perturbed copy of ds; targets and labels are untouched.
Dataset corrupt(const Dataset& ds, const CorruptionSpec& spec);

}  // namespace auq
