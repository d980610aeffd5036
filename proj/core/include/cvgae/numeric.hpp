#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cvgae {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Row-major double-precision matrix.
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Dense(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Dense identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Dense& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  Dense& operator+=(const Dense& o);
  Dense& operator*=(double s);

  friend bool operator==(const Dense&, const Dense&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Compressed sparse row matrix. Column indices are sorted within a row.
class SparseMatrix {
 public:
  struct Triplet {
    std::uint32_t row;
    std::uint32_t col;
    double value;
  };

  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
               std::vector<std::uint32_t> col_idx, std::vector<double> values);

  // Duplicate coordinates are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::uint32_t> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }

  double at(std::size_t r, std::size_t c) const;
  Dense to_dense() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

Dense spmm(const SparseMatrix& s, const Dense& d);

// a * b. Zero entries of `a` are skipped, which makes bag-of-words feature
// products cheap.
Dense matmul(const Dense& a, const Dense& b);
// a^T * b, skipping zero entries of `a`.
Dense matmul_tn(const Dense& a, const Dense& b);
// a * b^T.
Dense matmul_nt(const Dense& a, const Dense& b);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

// log(sigmoid(x)) evaluated as -log(1 + exp(-x)) without overflow.
double log_sigmoid(double x);
double sigmoid(double x);
// log(1 + exp(x)) without overflow.
double softplus(double x);

// Stream identifiers. Every consumer of randomness draws from its own stream.
enum class Stream : std::uint64_t {
  kWeightInit = 1,
  kReparameterization = 2,
  kSbm = 3,
  kKMeans = 4,
  kPerturbation = 5,
  kClusteringNoise = 6,
  kTestData = 99,
};

// Deterministic generator keyed by (seed, stream id).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);
  RngStream(std::uint64_t seed, Stream stream)
      : RngStream(seed, static_cast<std::uint64_t>(stream)) {}

  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  double normal();                         // N(0, 1)
  bool bernoulli(double p);
  std::uint64_t below(std::uint64_t n);    // uniform in [0, n)

  std::mt19937_64& engine() { return engine_; }

  // Opaque textual engine and distribution state, for checkpoints.
  std::string serialize() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

RngStream rng_stream(std::uint64_t seed, Stream stream);

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Dense> m;
  std::vector<Dense> v;
  std::uint64_t t = 0;

  // Zero moments shaped like `params`.
  static AdamState fresh(const AdamConfig& config, std::span<const Dense* const> params);
};

struct ParamRef {
  std::string_view name;
  Dense* value;
  const Dense* grad;
};

// One bias-corrected Adam step in the ASCENT direction:
// value += lr * m_hat / (sqrt(v_hat) + eps). Throws NonFiniteError naming the
// offending tensor when a gradient entry is not finite; in that case nothing
// is modified.
void adam_step(std::span<const ParamRef> params, AdamState& state);

using ScalarFn = std::function<double(const Dense&)>;

// Max over coordinates of |fd_i - g_i| / max(1, |fd_i|, |g_i|) with central
// differences of step `eps`.
double finite_diff_check(const ScalarFn& f, const Dense& point, const Dense& analytic_grad,
                         double eps);

}  // namespace cvgae
