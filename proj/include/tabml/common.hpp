#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tabml {

enum class ErrorKind {
  invalid_argument,
  parse,
  config,
  io,
  job_failed,
  internal,
};

/// Exception type thrown by every module. The C API maps `kind()` onto
/// status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::invalid_argument, message);
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  /// Rows in `indices` order.
  Matrix select_rows(std::span<const std::size_t> indices) const;
  /// Columns in `indices` order.
  Matrix select_cols(std::span<const std::size_t> indices) const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const Matrix& other) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Seeded generator. Distribution code is written out here rather than
/// taken from <random> so that streams are identical across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  /// Uniform integer in [lo, hi].
  long long between(long long lo, long long hi);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a base seed with labels (dataset, fold, algorithm ...) so that job
/// seeds never depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::string_view> parts);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text, bool* ok = nullptr);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split(std::string_view text, char delimiter);
std::string trim(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view delimiter);

/// RFC-4180 records. Quoted fields may contain delimiters, doubled quotes
/// and line breaks; blank lines are skipped.
std::vector<std::vector<std::string>> parse_csv_records(std::string_view text);
/// Quotes a field only when it needs it.
std::string csv_field(std::string_view field);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

/// Indices that sort `values` descending, ties broken by ascending `names`.
std::vector<std::size_t> rank_descending(std::span<const double> values,
                                         std::span<const std::string> names);

double mean(std::span<const double> values);
double median(std::vector<double> values);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_sd(std::span<const double> values);
double sigmoid(double x);

}  // namespace tabml
