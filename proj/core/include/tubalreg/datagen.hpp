#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tubalreg/dataset.hpp"
#include "tubalreg/tensor.hpp"

namespace tubalreg {

enum class Design { Linear, Hetero, Logistic };
enum class Shape { Cross, Square, T };

/// Gaussian(sd = a), StudentT(df = a), Pareto type I (scale = a, shape = b).
struct NoiseSpec {
  enum class Kind { Gaussian, StudentT, Pareto };
  Kind kind = Kind::Gaussian;
  double a = 1.0;
  double b = 0.0;

  static NoiseSpec gaussian(double sd = 1.0) { return {Kind::Gaussian, sd, 0.0}; }
  static NoiseSpec student_t(double df) { return {Kind::StudentT, df, 0.0}; }
  static NoiseSpec pareto(double scale, double shape) { return {Kind::Pareto, scale, shape}; }
};

std::string format_noise(const NoiseSpec& noise);
/// "gaussian(1)", "t(3)", "pareto(3,2)".
NoiseSpec parse_noise(std::string_view text);
std::string_view to_string(Design design) noexcept;
Design design_from_string(std::string_view text);
std::string_view to_string(Shape shape) noexcept;
Shape shape_from_string(std::string_view text);

struct SimSpec {
  Index n = 100;
  Index d1 = 10;
  Index d2 = 10;
  Index d3 = 3;
  Index r = 2;
  Design design = Design::Linear;
  NoiseSpec noise = NoiseSpec::gaussian();
  double misspec_pm = 0.0;  // percent of class-0 labels flipped to 1
  double corrupt_pn = 0.0;  // percent of predictors contaminated
  double corrupt_pc = 0.0;  // percent of entries replaced within each
  std::optional<Shape> shape;
  std::uint64_t seed = 0;

  /// Throws RankTooLarge / BadParameter naming the offending field.
  void validate() const;
};

/// C1 * C2 with C1 (d1 x r x d3), C2 (r x d2 x d3) standard Gaussian.
Tensor3 gen_lowrank_coef(Index d1, Index d2, Index d3, Index r, std::uint64_t seed);

/// gen_lowrank_coef with every nonzero Fourier-domain singular value set to 1.
Tensor3 gen_logistic_coef(Index d1, Index d2, Index d3, Index r, std::uint64_t seed);

/// Binary d x d mask of the shape, replicated over d3 frontal slices.
Tensor3 gen_shape_coef(Shape shape, Index d, Index d3);

std::vector<double> sample_noise(const NoiseSpec& noise, Index count, std::uint64_t seed);

/// Predictors with i.i.d. N(0,1) entries, responses per the design, then
/// label flips, then predictor corruption.
Dataset gen_dataset(const SimSpec& spec, const Tensor3& b0);

/// The coefficient the spec calls for: a shape mask, the unit-spectrum
/// logistic coefficient, or the plain low-rank product.
Tensor3 gen_coef(const SimSpec& spec);

/// Fresh predictors and responses from the same design, with a disjoint
/// seed; label flips and corruption are not applied.
Dataset gen_test_dataset(const SimSpec& spec, const Tensor3& b0, Index n_test);

/// Bookkeeping of what gen_dataset contaminated (for tests and manifests).
struct Contamination {
  std::vector<Index> flipped;                     // samples whose label went 0 -> 1
  std::vector<Index> corrupted;                   // predictors touched
  std::vector<std::vector<Index>> corrupted_entries;
};
Dataset gen_dataset(const SimSpec& spec, const Tensor3& b0, Contamination* record);

}  // namespace tubalreg
