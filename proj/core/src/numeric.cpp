#include "cvgae/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cvgae {

Dense::Dense(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("Dense: value count " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Dense Dense::identity(std::size_t n) {
  Dense out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

void Dense::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Dense::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Dense& Dense::operator+=(const Dense& o) {
  if (!same_shape(o)) throw DimensionError("Dense +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Dense& Dense::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                           std::vector<std::uint32_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.back() != col_idx_.size() ||
      col_idx_.size() != values_.size()) {
    throw DimensionError("SparseMatrix: inconsistent CSR arrays");
  }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) throw DimensionError("SparseMatrix: triplet out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> row_ptr(rows + 1, 0);
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      values.back() += t.value;
      continue;
    }
    col_idx.push_back(t.col);
    values.push_back(t.value);
    ++row_ptr[t.row + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) row_ptr[r + 1] += row_ptr[r];
  return SparseMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> row_ptr(n + 1);
  std::vector<std::uint32_t> col_idx(n);
  for (std::size_t i = 0; i <= n; ++i) row_ptr[i] = i;
  for (std::size_t i = 0; i < n; ++i) col_idx[i] = static_cast<std::uint32_t>(i);
  return SparseMatrix(n, n, std::move(row_ptr), std::move(col_idx), std::vector<double>(n, 1.0));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
  auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
  auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(c));
  if (it == last || *it != c) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

Dense SparseMatrix::to_dense() const {
  Dense out(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out(r, col_idx_[k]) = values_[k];
  }
  return out;
}

Dense spmm(const SparseMatrix& s, const Dense& d) {
  if (s.cols() != d.rows()) {
    throw DimensionError("spmm: " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                         " times " + std::to_string(d.rows()) + "x" + std::to_string(d.cols()));
  }
  Dense out(s.rows(), d.cols());
  const auto ptr = s.row_ptr();
  const auto idx = s.col_idx();
  const auto val = s.values();
  for (std::size_t r = 0; r < s.rows(); ++r) {
    auto dst = out.row(r);
    for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) {
      const double w = val[k];
      auto src = d.row(idx[k]);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

Dense matmul(const Dense& a, const Dense& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
  Dense out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    auto ai = a.row(i);
    for (std::size_t k = 0; k < ai.size(); ++k) {
      const double w = ai[k];
      if (w == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * bk[c];
    }
  }
  return out;
}

Dense matmul_tn(const Dense& a, const Dense& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_tn: row counts differ");
  Dense out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto ak = a.row(k);
    auto bk = b.row(k);
    for (std::size_t i = 0; i < ak.size(); ++i) {
      const double w = ak[i];
      if (w == 0.0) continue;
      auto dst = out.row(i);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * bk[c];
    }
  }
  return out;
}

Dense matmul_nt(const Dense& a, const Dense& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt: column counts differ");
  Dense out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double log_sigmoid(double x) { return -softplus(-x); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x43564741u};
  engine_.seed(seq);
}

double RngStream::uniform() { return std::generate_canonical<double, 53>(engine_); }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() { return normal_(engine_); }

bool RngStream::bernoulli(double p) { return uniform() < p; }

std::uint64_t RngStream::below(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

std::string RngStream::serialize() const {
  std::ostringstream os;
  os << engine_ << ' ' << normal_;
  return os.str();
}

void RngStream::restore(const std::string& state) {
  std::istringstream is(state);
  is >> engine_ >> normal_;
  if (!is) throw std::runtime_error("RngStream: malformed serialized state");
}

RngStream rng_stream(std::uint64_t seed, Stream stream) { return RngStream(seed, stream); }

AdamState AdamState::fresh(const AdamConfig& config, std::span<const Dense* const> params) {
  AdamState s;
  s.config = config;
  for (const Dense* p : params) {
    s.m.emplace_back(p->rows(), p->cols());
    s.v.emplace_back(p->rows(), p->cols());
  }
  return s;
}

void adam_step(std::span<const ParamRef> params, AdamState& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: state holds " + std::to_string(state.m.size()) +
                         " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& p = params[k];
    if (!p.value->same_shape(*p.grad) || !p.value->same_shape(state.m[k])) {
      throw DimensionError("adam_step: shape mismatch for '" + std::string(p.name) + "'");
    }
    if (!p.grad->all_finite()) {
      throw NonFiniteError("adam_step: non-finite gradient in '" + std::string(p.name) + "'");
    }
  }
  const auto& c = state.config;
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto value = params[k].value->values();
    auto grad = params[k].grad->values();
    auto m = state.m[k].values();
    auto v = state.v[k].values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      value[i] += c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

double finite_diff_check(const ScalarFn& f, const Dense& point, const Dense& analytic_grad,
                         double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_check: eps must be positive");
  if (!point.same_shape(analytic_grad)) throw DimensionError("finite_diff_check: shape mismatch");
  Dense x = point;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x.values()[i];
    x.values()[i] = orig + eps;
    const double up = f(x);
    x.values()[i] = orig - eps;
    const double down = f(x);
    x.values()[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NonFiniteError("finite_diff_check: non-finite evaluation at coordinate " +
                           std::to_string(i));
    }
    const double fd = (up - down) / (2.0 * eps);
    const double g = analytic_grad.values()[i];
    const double denom = std::max({1.0, std::abs(fd), std::abs(g)});
    worst = std::max(worst, std::abs(fd - g) / denom);
  }
  return worst;
}

}  // namespace cvgae
