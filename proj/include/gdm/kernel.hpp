#pragma once

// Standardization, kernel evaluation and Gram-matrix centering. Feature maps
// are never materialized; everything goes through kernel values.

#include <charconv>
#include <optional>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>

#include "gdm/error.hpp"
#include "gdm/linalg.hpp"

namespace gdm {

enum class KernelKind { linear, polynomial, gaussian };

struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  int degree = 1;       // polynomial only
  double offset = 0.0;  // polynomial only
  double gamma = 1.0;   // gaussian only

  static KernelSpec linear() { return {}; }

  static KernelSpec polynomial(int degree, double offset) {
    require(degree >= 1, ErrorKind::parameter, "polynomial degree must be >= 1");
    require(std::isfinite(offset), ErrorKind::parameter, "polynomial offset must be finite");
    return {KernelKind::polynomial, degree, offset, 1.0};
  }

  static KernelSpec gaussian(double gamma) {
    require(std::isfinite(gamma) && gamma > 0.0, ErrorKind::parameter, "gaussian gamma must be positive");
    return {KernelKind::gaussian, 1, 0.0, gamma};
  }

  bool operator==(const KernelSpec&) const = default;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  require(res.ec == std::errc{} && res.ptr == text.data() + text.size(), ErrorKind::parameter,
          "bad number '" + std::string(text) + "' for " + std::string(what));
  return v;
}

}  // namespace detail

// Grammar: `linear` | `poly:degree=<int>,offset=<real>` | `rbf:gamma=<real>`.
// Parameters of poly may appear in either order; both are required.
inline KernelSpec parse_kernel(std::string_view text) {
  if (text == "linear") return KernelSpec::linear();
  const auto colon = text.find(':');
  require(colon != std::string_view::npos, ErrorKind::parameter, "unknown kernel spec '" + std::string(text) + "'");
  const std::string_view name = text.substr(0, colon);
  std::string_view rest = text.substr(colon + 1);

  std::optional<double> degree, offset, gamma;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    require(eq != std::string_view::npos, ErrorKind::parameter, "kernel parameter '" + std::string(item) + "' lacks '='");
    const std::string_view key = item.substr(0, eq);
    const double value = detail::parse_double(item.substr(eq + 1), key);
    if (key == "degree") degree = value;
    else if (key == "offset") offset = value;
    else if (key == "gamma") gamma = value;
    else throw Error(ErrorKind::parameter, "unknown kernel parameter '" + std::string(key) + "'");
  }

  if (name == "poly") {
    require(degree && offset && !gamma, ErrorKind::parameter, "poly kernel needs exactly degree and offset");
    require(*degree == std::floor(*degree), ErrorKind::parameter, "polynomial degree must be an integer");
    return KernelSpec::polynomial(static_cast<int>(*degree), *offset);
  }
  if (name == "rbf") {
    require(gamma && !degree && !offset, ErrorKind::parameter, "rbf kernel needs exactly gamma");
    return KernelSpec::gaussian(*gamma);
  }
  throw Error(ErrorKind::parameter, "unknown kernel '" + std::string(name) + "'");
}

inline std::string to_string(const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::polynomial:
      return "poly:degree=" + std::to_string(spec.degree) + ",offset=" + detail::format_double(spec.offset);
    case KernelKind::gaussian: return "rbf:gamma=" + detail::format_double(spec.gamma);
  }
  return "linear";
}

struct StandardizationStats {
  Vector means;
  Vector stds;  // population convention; near-zero entries replaced by 1
};

constexpr double constant_voxel_threshold = 1e-12;

// Rows are voxels, columns samples. Each row is shifted to mean 0 and
// scaled to unit population variance; constant rows become zeros.
inline std::pair<Matrix, StandardizationStats> standardize(const Matrix& x) {
  require(all_finite(x), ErrorKind::invalid_data, "standardize: input contains non-finite entries");
  require(x.cols() >= 2, ErrorKind::insufficient_samples,
          "standardize needs at least 2 samples, got " + std::to_string(x.cols()));
  StandardizationStats stats;
  stats.means = x.rowwise().mean();
  Matrix centered = x.colwise() - stats.means;
  stats.stds = (centered.array().square().rowwise().sum() / static_cast<double>(x.cols())).sqrt().matrix();
  for (Index v = 0; v < stats.stds.size(); ++v)
    if (stats.stds(v) < constant_voxel_threshold) stats.stds(v) = 1.0;
  centered.array().colwise() /= stats.stds.array();
  return {std::move(centered), std::move(stats)};
}

inline Matrix apply_standardization(const Matrix& z, const StandardizationStats& stats) {
  require(z.rows() == stats.means.size(), ErrorKind::dimension,
          "data has " + std::to_string(z.rows()) + " voxels, expected " + std::to_string(stats.means.size()));
  require(all_finite(z), ErrorKind::invalid_data, "data contains non-finite entries");
  Matrix out = z.colwise() - stats.means;
  out.array().colwise() /= stats.stds.array();
  return out;
}

// out[a][b] = k(z_a, x_b) for columns z_a of `z` and x_b of `x`.
inline Matrix kernel_matrix(const Matrix& z, const Matrix& x, const KernelSpec& spec) {
  require(z.rows() == x.rows(), ErrorKind::dimension, "kernel arguments have different voxel counts");
  switch (spec.kind) {
    case KernelKind::linear: return z.transpose() * x;
    case KernelKind::polynomial: {
      Matrix out = z.transpose() * x;
      out.array() += spec.offset;
      return out.array().pow(static_cast<double>(spec.degree)).matrix();
    }
    case KernelKind::gaussian: {
      Matrix out(z.cols(), x.cols());
      for (Index b = 0; b < x.cols(); ++b)
        for (Index a = 0; a < z.cols(); ++a) out(a, b) = std::exp(-spec.gamma * (z.col(a) - x.col(b)).squaredNorm());
      return out;
    }
  }
  throw Error(ErrorKind::parameter, "unknown kernel kind");
}

struct GramMatrix {
  Matrix entries;
  bool centered = false;

  Index size() const noexcept { return entries.rows(); }
};

inline GramMatrix gram(const Matrix& x, const KernelSpec& spec) {
  require(all_finite(x), ErrorKind::invalid_data, "gram: input contains non-finite entries");
  Matrix k = kernel_matrix(x, x, spec);
  const Matrix sym = 0.5 * (k + k.transpose());
  return {sym, false};
}

// H K H with H = I - J/T, written as K - row means - column means + grand mean.
inline GramMatrix center_gram(const GramMatrix& k) {
  require(k.entries.rows() == k.entries.cols(), ErrorKind::dimension, "center_gram needs a square matrix");
  const Index t = k.entries.rows();
  if (t == 0) return {k.entries, true};
  const Vector col_means = k.entries.colwise().mean().transpose();
  const Vector row_means = k.entries.rowwise().mean();
  const double grand = k.entries.mean();
  Matrix out = k.entries;
  out.colwise() -= row_means;
  out.rowwise() -= col_means.transpose();
  out.array() += grand;
  const Matrix sym = 0.5 * (out + out.transpose());
  return {sym, true};
}

// Centers cross-kernel values k(z_a, x_b) by the feature-space mean of the
// training samples, using only the raw (uncentered) training Gram:
//   K_zx + T^-2 J K_xx J - T^-1 J K_xx - T^-1 K_zx J.
inline Matrix center_cross_gram(const Matrix& k_zx, const Matrix& k_xx_raw) {
  require(k_xx_raw.rows() == k_xx_raw.cols(), ErrorKind::dimension, "training Gram must be square");
  require(k_zx.cols() == k_xx_raw.rows(), ErrorKind::dimension,
          "cross Gram has " + std::to_string(k_zx.cols()) + " columns, training Gram has " +
              std::to_string(k_xx_raw.rows()) + " samples");
  const Index t = k_xx_raw.rows();
  if (t == 0) return k_zx;
  const Vector train_col_means = k_xx_raw.colwise().mean().transpose();
  const double grand = k_xx_raw.mean();
  Matrix out = k_zx;
  if (out.rows() == 0) return out;
  const Vector cross_row_means = k_zx.rowwise().mean();
  out.rowwise() -= train_col_means.transpose();
  out.colwise() -= cross_row_means;
  out.array() += grand;
  return out;
}

}  // namespace gdm
