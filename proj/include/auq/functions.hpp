#pragma once
// Closed-form benchmark functions on fixed domain boxes, plus dense-grid
// search over those boxes.

#include <Eigen/Core>
#include <random>
#include <string>
#include <string_view>

namespace auq {

enum class BenchmarkId {
  Sinusoid1D,    // -sin(5x^2) - x^4 + 0.3x^3 + 2x^2 + 4.1x   on [-2.5, 2.5]
  MultiOptima1D, // sin(x) cos(5x) cos(22x)                   on [0, pi]
  Booth2D,       // (x+2y-7)^2 + (2x+y-5)^2                   on [-10, 10]^2
  LeviN13_2D,    // Levi N.13                                 on [-10, 10]^2
  Ackley,        // a=20, b=0.2, c=2pi                        on [-5, 5]^d
  Griewank,      //                                           on [-5, 5]^d
};

// A benchmark plus its domain box. With `negated` set the evaluated value is
// sign-flipped, which turns the minimization benchmarks into maximization
// objectives whose optimum is 0.
struct Benchmark {
  BenchmarkId id = BenchmarkId::Sinusoid1D;
  bool negated = false;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  std::string name() const;
  double operator()(const Eigen::VectorXd& x) const;
};

// `dim` is only consulted for Ackley/Griewank (default 2); the fixed-dimension
// functions reject any other nonzero value.
Benchmark make_benchmark(BenchmarkId id, int dim = 0, bool negated = false);
Benchmark benchmark_from_name(std::string_view name, int dim = 0,
                              bool negated = false);

// Throws if x has the wrong dimension or any coordinate leaves the box
// (message names the offending coordinate).
double eval_benchmark(const Benchmark& fn, const Eigen::VectorXd& x);

// One value per row of xs.
Eigen::VectorXd eval_benchmark_rows(const Benchmark& fn,
                                    const Eigen::MatrixXd& xs);

// Maximum over the inclusive lattice with `cells_per_dim` equal cells per
// dimension, so cells_per_dim + 1 points per axis including both endpoints.
struct GridMaximum {
  double value = 0.0;
  Eigen::VectorXd argmax;
};
GridMaximum grid_maximum(const Benchmark& fn, int cells_per_dim);

// n points drawn uniformly from the box, one per row.
Eigen::MatrixXd sample_uniform_box(const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper, int n,
                                   std::mt19937_64& rng);

}  // namespace auq
