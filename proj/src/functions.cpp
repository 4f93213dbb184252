#include "auq/functions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace auq {
namespace {

constexpr double kPi = std::numbers::pi;

double sinusoid(double x) {
  return -std::sin(5.0 * x * x) - std::pow(x, 4) + 0.3 * std::pow(x, 3) +
         2.0 * x * x + 4.1 * x;
}

double multi_optima(double x) {
  return std::sin(x) * std::cos(5.0 * x) * std::cos(22.0 * x);
}

double booth(double x, double y) {
  const double a = x + 2.0 * y - 7.0;
  const double b = 2.0 * x + y - 5.0;
  return a * a + b * b;
}

double levi_n13(double x, double y) {
  const double s3x = std::sin(3.0 * kPi * x);
  const double s3y = std::sin(3.0 * kPi * y);
  const double s2y = std::sin(2.0 * kPi * y);
  return s3x * s3x + (x - 1.0) * (x - 1.0) * (1.0 + s3y * s3y) +
         (y - 1.0) * (y - 1.0) * (1.0 + s2y * s2y);
}

double ackley(const Eigen::VectorXd& x) {
  const double a = 20.0, b = 0.2, c = 2.0 * kPi;
  const double n = static_cast<double>(x.size());
  const double rms = std::sqrt(x.squaredNorm() / n);
  const double mean_cos = (c * x.array()).cos().sum() / n;
  return -a * std::exp(-b * rms) - std::exp(mean_cos) + a + std::exp(1.0);
}

double griewank(const Eigen::VectorXd& x) {
  double prod = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
  }
  return 1.0 + x.squaredNorm() / 4000.0 - prod;
}

Eigen::VectorXd constant_vec(int d, double v) {
  return Eigen::VectorXd::Constant(d, v);
}

}  // namespace

std::string Benchmark::name() const {
  switch (id) {
    case BenchmarkId::Sinusoid1D:
      return "sinusoid";
    case BenchmarkId::MultiOptima1D:
      return "multi_optima";
    case BenchmarkId::Booth2D:
      return "booth";
    case BenchmarkId::LeviN13_2D:
      return "levi_n13";
    case BenchmarkId::Ackley:
      return "ackley";
    case BenchmarkId::Griewank:
      return "griewank";
  }
  throw std::invalid_argument("unknown benchmark id");
}

double Benchmark::operator()(const Eigen::VectorXd& x) const {
  return eval_benchmark(*this, x);
}

Benchmark make_benchmark(BenchmarkId id, int dim, bool negated) {
  Benchmark fn;
  fn.id = id;
  fn.negated = negated;
  const auto fixed = [&](int d, double lo, double hi) {
    if (dim != 0 && dim != d) {
      throw std::invalid_argument(fn.name() + " is fixed at dimension " +
                                  std::to_string(d) + ", got " +
                                  std::to_string(dim));
    }
    fn.lower = constant_vec(d, lo);
    fn.upper = constant_vec(d, hi);
  };
  switch (id) {
    case BenchmarkId::Sinusoid1D:
      fixed(1, -2.5, 2.5);
      break;
    case BenchmarkId::MultiOptima1D:
      fixed(1, 0.0, kPi);
      break;
    case BenchmarkId::Booth2D:
    case BenchmarkId::LeviN13_2D:
      fixed(2, -10.0, 10.0);
      break;
    case BenchmarkId::Ackley:
    case BenchmarkId::Griewank: {
      const int d = dim == 0 ? 2 : dim;
      if (d < 1) {
        throw std::invalid_argument("benchmark dimension must be positive");
      }
      fn.lower = constant_vec(d, -5.0);
      fn.upper = constant_vec(d, 5.0);
      break;
    }
  }
  return fn;
}

Benchmark benchmark_from_name(std::string_view name, int dim, bool negated) {
  if (name == "sinusoid") return make_benchmark(BenchmarkId::Sinusoid1D, dim, negated);
  if (name == "multi_optima") return make_benchmark(BenchmarkId::MultiOptima1D, dim, negated);
  if (name == "booth") return make_benchmark(BenchmarkId::Booth2D, dim, negated);
  if (name == "levi_n13") return make_benchmark(BenchmarkId::LeviN13_2D, dim, negated);
  if (name == "ackley") return make_benchmark(BenchmarkId::Ackley, dim, negated);
  if (name == "griewank") return make_benchmark(BenchmarkId::Griewank, dim, negated);
  throw std::invalid_argument("unknown benchmark '" + std::string(name) + "'");
}

double eval_benchmark(const Benchmark& fn, const Eigen::VectorXd& x) {
  if (x.size() != fn.lower.size()) {
    throw std::invalid_argument(fn.name() + " expects dimension " +
                                std::to_string(fn.lower.size()) + ", got " +
                                std::to_string(x.size()));
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= fn.lower[i] && x[i] <= fn.upper[i])) {
      throw std::invalid_argument(
          fn.name() + ": coordinate " + std::to_string(i) + " = " +
          std::to_string(x[i]) + " outside [" + std::to_string(fn.lower[i]) +
          ", " + std::to_string(fn.upper[i]) + "]");
    }
  }
  double v = 0.0;
  switch (fn.id) {
    case BenchmarkId::Sinusoid1D:
      v = sinusoid(x[0]);
      break;
    case BenchmarkId::MultiOptima1D:
      v = multi_optima(x[0]);
      break;
    case BenchmarkId::Booth2D:
      v = booth(x[0], x[1]);
      break;
    case BenchmarkId::LeviN13_2D:
      v = levi_n13(x[0], x[1]);
      break;
    case BenchmarkId::Ackley:
      v = ackley(x);
      break;
    case BenchmarkId::Griewank:
      v = griewank(x);
      break;
  }
  return fn.negated ? -v : v;
}

Eigen::VectorXd eval_benchmark_rows(const Benchmark& fn,
                                    const Eigen::MatrixXd& xs) {
  Eigen::VectorXd out(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    out[i] = eval_benchmark(fn, xs.row(i).transpose());
  }
  return out;
}

GridMaximum grid_maximum(const Benchmark& fn, int cells_per_dim) {
  if (cells_per_dim < 1) {
    throw std::invalid_argument("grid_maximum: need at least one cell");
  }
  const int d = fn.dim();
  double total = 1.0;
  for (int i = 0; i < d; ++i) total *= cells_per_dim + 1;
  if (total > 1e8) {
    throw std::invalid_argument("grid_maximum: lattice too large");
  }

  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd x(d);
  GridMaximum best;
  best.value = -std::numeric_limits<double>::infinity();
  while (true) {
    for (int i = 0; i < d; ++i) {
      x[i] = fn.lower[i] + (fn.upper[i] - fn.lower[i]) *
                               (static_cast<double>(idx[i]) / cells_per_dim);
    }
    const double v = eval_benchmark(fn, x);
    if (v > best.value) {
      best.value = v;
      best.argmax = x;
    }
    int carry = 0;
    while (carry < d) {
      if (++idx[carry] <= cells_per_dim) break;
      idx[carry] = 0;
      ++carry;
    }
    if (carry == d) break;
  }
  return best;
}

Eigen::MatrixXd sample_uniform_box(const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper, int n,
                                   std::mt19937_64& rng) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw std::invalid_argument("sample_uniform_box: bad bounds");
  }
  if ((lower.array() > upper.array()).any()) {
    throw std::invalid_argument("sample_uniform_box: lower exceeds upper");
  }
  if (n < 1) {
    throw std::invalid_argument("sample_uniform_box: need n >= 1");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd out(n, lower.size());
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < lower.size(); ++j) {
      out(i, j) = lower[j] + (upper[j] - lower[j]) * unit(rng);
    }
  }
  return out;
}

}  // namespace auq
