#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aperm/linalg.hpp"

namespace aperm {

/// Homogeneous observations: scalars, l^q vectors, curves on a shared grid,
/// or symmetric operators.
using ItemSet = std::variant<std::vector<double>, std::vector<Eigen::VectorXd>,
                             std::vector<GridCurve>, std::vector<SymOperator>>;

enum class ItemKind { scalar, vector, curve, op };

[[nodiscard]] ItemKind item_kind(const ItemSet& items) noexcept;
[[nodiscard]] std::size_t item_count(const ItemSet& items) noexcept;
[[nodiscard]] const char* to_string(ItemKind kind) noexcept;

/// Optional design coordinates, one entry per item, stored as level names.
struct DesignColumns {
  std::vector<std::string> row;
  std::vector<std::string> col;
  std::vector<std::string> block;

  [[nodiscard]] bool has_row() const noexcept { return !row.empty(); }
  [[nodiscard]] bool has_col() const noexcept { return !col.empty(); }
  [[nodiscard]] bool has_block() const noexcept { return !block.empty(); }
};

struct LabeledSample {
  ItemSet items;
  std::vector<std::string> labels;
  DesignColumns design;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  /// Throws DomainError if lengths disagree or items are inconsistent.
  void validate() const;
};

/// Distinct values in first-appearance order.
[[nodiscard]] std::vector<std::string> distinct_levels(const std::vector<std::string>& values);

/// Level index per entry, matching distinct_levels order.
[[nodiscard]] std::vector<std::size_t> level_indices(const std::vector<std::string>& values,
                                                     const std::vector<std::string>& levels);

/// Items at the given positions, in that order.
[[nodiscard]] ItemSet select_items(const ItemSet& items, const std::vector<std::size_t>& indices);

[[nodiscard]] LabeledSample select(const LabeledSample& sample,
                                   const std::vector<std::size_t>& indices);

// ---------------------------------------------------------------------------
// File formats
//
// Curve CSV:
//   [# rows=<N>]
//   grid[,row][,col][,block],<t_1>,...,<t_G>
//   <label>[,<row>][,<col>][,<block>],<v_1>,...,<v_G>
// A header starting with `vector` instead of `grid` declares plain vectors
// (the header cells after the design columns are then component names).
//
// Scalar CSV:
//   label,value[,row][,col][,block]
//
// Operator file, repeated per operator:
//   operator,<label>,dim=<d>[,row=<r>][,col=<c>][,block=<b>]
//   d lines of d comma-separated reals
// An optional leading `# operators=<N>` line pins the operator count.

struct CurveCsvOptions {
  /// Reject the file unless it has exactly this many data rows.
  std::optional<std::size_t> expected_rows;
};

[[nodiscard]] LabeledSample load_curves(const std::filesystem::path& path,
                                        const CurveCsvOptions& options = {});
[[nodiscard]] LabeledSample parse_curves(std::istream& in, const CurveCsvOptions& options = {});

[[nodiscard]] LabeledSample load_scalars(const std::filesystem::path& path);
[[nodiscard]] LabeledSample parse_scalars(std::istream& in);

[[nodiscard]] LabeledSample load_operators(const std::filesystem::path& path);
[[nodiscard]] LabeledSample parse_operators(std::istream& in);

/// Picks the parser from the first header line.
[[nodiscard]] LabeledSample load_sample(const std::filesystem::path& path);

void write_curves(std::ostream& out, const LabeledSample& sample);
void write_scalars(std::ostream& out, const LabeledSample& sample);
void write_operators(std::ostream& out, const LabeledSample& sample);
void save_sample(const std::filesystem::path& path, const LabeledSample& sample);

// ---------------------------------------------------------------------------
// Transformations and generators

/// Within each cell (label, plus block when present): seeded shuffle,
/// consecutive chunks of group_size curves, centred empirical covariance per
/// chunk. Design columns are carried over from the first curve of each chunk.
[[nodiscard]] LabeledSample curves_to_operators(const LabeledSample& sample,
                                                std::size_t group_size, std::uint64_t seed);

/// Rank-one operators (x - m)(x - m)^T, with m the mean curve of the item's
/// cell (label plus block when present).
[[nodiscard]] LabeledSample curves_to_rank_one_operators(const LabeledSample& sample);

/// n draws mean + Sigma^{1/2} z, z standard normal.
[[nodiscard]] std::vector<GridCurve> simulate_gaussian_curves(const GridCurve& mean,
                                                              const SymOperator& covariance,
                                                              std::size_t n, std::uint64_t seed);

/// Same, reusing a precomputed square root (dimension d x d).
[[nodiscard]] std::vector<GridCurve> simulate_gaussian_curves_sqrt(const GridCurve& mean,
                                                                   const Eigen::MatrixXd& root,
                                                                   std::size_t n,
                                                                   std::uint64_t seed);

/// Uniform grid of `points` abscissae on [lo, hi].
[[nodiscard]] Eigen::VectorXd uniform_grid(std::size_t points, double lo = 0.0, double hi = 1.0);

}  // namespace aperm
