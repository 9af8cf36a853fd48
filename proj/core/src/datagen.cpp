#include "tubalreg/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "tubalreg/error.hpp"
#include "tubalreg/loss.hpp"
#include "tubalreg/rng.hpp"
#include "tubalreg/tsvd.hpp"

namespace tubalreg {

namespace {

std::string lower_trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Tensor3 gaussian_tensor(Index d1, Index d2, Index d3, CounterRng rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> data(static_cast<std::size_t>(d1 * d2 * d3));
  for (double& v : data) v = normal(rng);
  return Tensor3(d1, d2, d3, std::move(data));
}

// Partial Fisher-Yates: `count` distinct indices from [0, total).
std::vector<Index> sample_without_replacement(Index total, Index count, CounterRng& rng) {
  std::vector<Index> pool(static_cast<std::size_t>(total));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, total - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

Index percent_count(double percent, Index total) {
  return static_cast<Index>(std::ceil(percent * static_cast<double>(total) / 100.0));
}

void check_rank(Index d1, Index d2, Index d3, Index r) {
  require(d1 > 0 && d2 > 0 && d3 > 0, Errc::BadParameter, "dimensions must be positive");
  require(r >= 1, Errc::BadParameter, "r must be >= 1");
  require(r <= std::min(d1, d2), Errc::RankTooLarge,
          "r = " + std::to_string(r) + " exceeds min(d1, d2) = " + std::to_string(std::min(d1, d2)));
}

}  // namespace

std::string format_noise(const NoiseSpec& noise) {
  std::ostringstream os;
  os.precision(17);
  switch (noise.kind) {
    case NoiseSpec::Kind::Gaussian: os << "gaussian(" << noise.a << ")"; break;
    case NoiseSpec::Kind::StudentT: os << "t(" << noise.a << ")"; break;
    case NoiseSpec::Kind::Pareto: os << "pareto(" << noise.a << "," << noise.b << ")"; break;
  }
  return os.str();
}

NoiseSpec parse_noise(std::string_view text) {
  const std::string t = lower_trim(text);
  const auto open = t.find('(');
  const std::string name = lower_trim(std::string_view(t).substr(0, open));
  std::vector<double> args;
  if (open != std::string::npos) {
    if (t.back() != ')') fail(Errc::ParseError, "unterminated noise spec '" + t + "'");
    std::string_view rest = std::string_view(t).substr(open + 1, t.size() - open - 2);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string item = lower_trim(rest.substr(0, comma));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc{} || ptr != item.data() + item.size()) {
        fail(Errc::ParseError, "bad number in noise spec '" + t + "'");
      }
      args.push_back(v);
    }
  }
  auto arg = [&](std::size_t i, double dflt) { return i < args.size() ? args[i] : dflt; };
  if (name == "gaussian" || name == "normal" || name == "n") return NoiseSpec::gaussian(arg(0, 1.0));
  if (name == "t" || name == "student" || name == "studentt") return NoiseSpec::student_t(arg(0, 3.0));
  if (name == "pareto" || name == "par") return NoiseSpec::pareto(arg(0, 3.0), arg(1, 2.0));
  fail(Errc::ParseError, "unknown noise kind '" + name + "'");
}

std::string_view to_string(Design design) noexcept {
  switch (design) {
    case Design::Linear: return "linear";
    case Design::Hetero: return "hetero";
    case Design::Logistic: return "logistic";
  }
  return "unknown";
}

Design design_from_string(std::string_view text) {
  const std::string t = lower_trim(text);
  if (t == "linear") return Design::Linear;
  if (t == "hetero" || t == "heteroscedastic") return Design::Hetero;
  if (t == "logistic") return Design::Logistic;
  fail(Errc::ParseError, "unknown design '" + t + "'");
}

std::string_view to_string(Shape shape) noexcept {
  switch (shape) {
    case Shape::Cross: return "cross";
    case Shape::Square: return "square";
    case Shape::T: return "t";
  }
  return "unknown";
}

Shape shape_from_string(std::string_view text) {
  const std::string t = lower_trim(text);
  if (t == "cross") return Shape::Cross;
  if (t == "square") return Shape::Square;
  if (t == "t") return Shape::T;
  fail(Errc::ParseError, "unknown shape '" + t + "'");
}

void SimSpec::validate() const {
  require(n >= 1, Errc::BadParameter, "n must be >= 1");
  if (shape) {
    require(d1 == d2, Errc::BadParameter, "shape coefficients need d1 == d2");
    require(d1 >= 8, Errc::TooSmall, "shape coefficients need d >= 8");
  } else {
    check_rank(d1, d2, d3, r);
  }
  auto pct = [](double v, const char* name) {
    require(v >= 0.0 && v <= 100.0, Errc::BadParameter,
            std::string(name) + " must be a percentage in [0, 100]");
  };
  pct(misspec_pm, "misspec_pm");
  pct(corrupt_pn, "corrupt_pn");
  pct(corrupt_pc, "corrupt_pc");
  require(design == Design::Logistic || misspec_pm == 0.0, Errc::BadParameter,
          "misspec_pm applies to the logistic design only");
  switch (noise.kind) {
    case NoiseSpec::Kind::Gaussian:
      require(noise.a >= 0.0, Errc::BadParameter, "noise sd must be >= 0");
      break;
    case NoiseSpec::Kind::StudentT:
      require(noise.a > 0.0, Errc::BadParameter, "noise df must be > 0");
      break;
    case NoiseSpec::Kind::Pareto:
      require(noise.a > 0.0 && noise.b > 0.0, Errc::BadParameter,
              "pareto scale and shape must be > 0");
      break;
  }
}

Tensor3 gen_lowrank_coef(Index d1, Index d2, Index d3, Index r, std::uint64_t seed) {
  check_rank(d1, d2, d3, r);
  const CounterRng root(derive_seed(seed, "coef"));
  const Tensor3 c1 = gaussian_tensor(d1, r, d3, root.substream("left"));
  const Tensor3 c2 = gaussian_tensor(r, d2, d3, root.substream("right"));
  return tprod(c1, c2);
}

Tensor3 gen_logistic_coef(Index d1, Index d2, Index d3, Index r, std::uint64_t seed) {
  const Tensor3 b = gen_lowrank_coef(d1, d2, d3, r, seed);
  const SpectralFactors f = spectral_factors(b);
  const double cutoff = 1e-8 * f.sigma.maxCoeff();
  const Eigen::MatrixXd unit = (f.sigma.array() > cutoff).cast<double>().matrix();
  return compose(f, unit);
}

Tensor3 gen_shape_coef(Shape shape, Index d, Index d3) {
  require(d >= 8, Errc::TooSmall, "shape coefficients need d >= 8, got " + std::to_string(d));
  require(d3 >= 1, Errc::BadParameter, "d3 must be >= 1");
  Index w = (d + 9) / 10;
  // Keep the centered stroke symmetric: its width shares the parity of d.
  const Index wc = (d - w) % 2 == 0 ? w : w + 1;
  const Index c0 = (d - wc) / 2;
  const Index a = d / 4;

  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      bool on = false;
      const bool in_box = i >= a && i <= d - 1 - a && j >= a && j <= d - 1 - a;
      switch (shape) {
        case Shape::Cross:
          on = (i >= c0 && i < c0 + wc) || (j >= c0 && j < c0 + wc);
          break;
        case Shape::Square:
          on = in_box && (i < a + w || i > d - 1 - a - w || j < a + w || j > d - 1 - a - w);
          break;
        case Shape::T:
          on = in_box && (i < a + w || (j >= c0 && j < c0 + wc));
          break;
      }
      mask(i, j) = on ? 1.0 : 0.0;
    }
  }
  Tensor3 out(d, d, d3);
  for (Index k = 0; k < d3; ++k) out.slice(k) = mask;
  return out;
}

std::vector<double> sample_noise(const NoiseSpec& noise, Index count, std::uint64_t seed) {
  require(count >= 1, Errc::BadParameter, "noise count must be >= 1");
  CounterRng rng(derive_seed(seed, "noise"));
  std::vector<double> out(static_cast<std::size_t>(count));
  switch (noise.kind) {
    case NoiseSpec::Kind::Gaussian: {
      require(noise.a >= 0.0, Errc::BadParameter, "noise sd must be >= 0");
      std::normal_distribution<double> dist(0.0, 1.0);
      for (double& v : out) v = noise.a * dist(rng);
      break;
    }
    case NoiseSpec::Kind::StudentT: {
      require(noise.a > 0.0, Errc::BadParameter, "noise df must be > 0");
      std::student_t_distribution<double> dist(noise.a);
      for (double& v : out) v = dist(rng);
      break;
    }
    case NoiseSpec::Kind::Pareto: {
      require(noise.a > 0.0 && noise.b > 0.0, Errc::BadParameter,
              "pareto scale and shape must be > 0");
      // Inverse CDF of Pareto type I; 1 - U lies in (0, 1].
      for (double& v : out) v = noise.a * std::pow(1.0 - rng.uniform(), -1.0 / noise.b);
      break;
    }
  }
  return out;
}

Tensor3 gen_coef(const SimSpec& spec) {
  spec.validate();
  if (spec.shape) return gen_shape_coef(*spec.shape, spec.d1, spec.d3);
  if (spec.design == Design::Logistic) {
    return gen_logistic_coef(spec.d1, spec.d2, spec.d3, spec.r, spec.seed);
  }
  return gen_lowrank_coef(spec.d1, spec.d2, spec.d3, spec.r, spec.seed);
}

namespace {

Dataset draw(const SimSpec& spec, const Tensor3& b0, std::uint64_t stream, Index n,
             bool contaminate, Contamination* record) {
  require(b0.d1() == spec.d1 && b0.d2() == spec.d2 && b0.d3() == spec.d3, Errc::DimMismatch,
          "coefficient dims do not match the simulation spec");
  const Index p = spec.d1 * spec.d2 * spec.d3;
  const CounterRng root(stream);

  RowMatrix x(n, p);
  {
    CounterRng rng = root.substream("design");
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < n; ++i) {
      for (Index c = 0; c < p; ++c) x(i, c) = normal(rng);
    }
  }
  const Eigen::VectorXd s = x * b0.vec();
  Eigen::VectorXd y(n);
  if (spec.design == Design::Logistic) {
    CounterRng rng = root.substream("labels");
    for (Index i = 0; i < n; ++i) y(i) = rng.uniform() < sigmoid(s(i)) ? 1.0 : 0.0;
  } else {
    const std::vector<double> eps = sample_noise(spec.noise, n, root.substream("noise").key());
    for (Index i = 0; i < n; ++i) {
      const double scale = spec.design == Design::Hetero ? 1.0 + std::abs(x(i, 0)) : 1.0;
      y(i) = s(i) + scale * eps[static_cast<std::size_t>(i)];
    }
  }

  if (contaminate && spec.misspec_pm > 0.0) {
    CounterRng rng = root.substream("misspec");
    const double prob = spec.misspec_pm / 100.0;
    for (Index i = 0; i < n; ++i) {
      // One draw per sample keeps the flip pattern independent of the labels.
      const double u = rng.uniform();
      if (y(i) == 0.0 && u < prob) {
        y(i) = 1.0;
        if (record) record->flipped.push_back(i);
      }
    }
  }

  if (contaminate && spec.corrupt_pn > 0.0 && spec.corrupt_pc > 0.0) {
    CounterRng rng = root.substream("corrupt");
    const Index rows = percent_count(spec.corrupt_pn, n);
    const Index entries = percent_count(spec.corrupt_pc, p);
    std::vector<Index> chosen = sample_without_replacement(n, rows, rng);
    std::sort(chosen.begin(), chosen.end());
    const std::vector<double> values =
        sample_noise(NoiseSpec::pareto(3.0, 2.0), std::max<Index>(1, rows * entries),
                     root.substream("corrupt-values").key());
    std::size_t next = 0;
    for (Index row : chosen) {
      std::vector<Index> cols = sample_without_replacement(p, entries, rng);
      std::sort(cols.begin(), cols.end());
      for (Index c : cols) x(row, c) = values[next++];
      if (record) {
        record->corrupted.push_back(row);
        record->corrupted_entries.push_back(std::move(cols));
      }
    }
  }
  return Dataset(spec.d1, spec.d2, spec.d3, std::move(x), std::move(y));
}

}  // namespace

Dataset gen_dataset(const SimSpec& spec, const Tensor3& b0, Contamination* record) {
  spec.validate();
  return draw(spec, b0, derive_seed(spec.seed, "dataset"), spec.n, true, record);
}

Dataset gen_dataset(const SimSpec& spec, const Tensor3& b0) {
  return gen_dataset(spec, b0, nullptr);
}

Dataset gen_test_dataset(const SimSpec& spec, const Tensor3& b0, Index n_test) {
  spec.validate();
  require(n_test >= 1, Errc::BadParameter, "n_test must be >= 1");
  return draw(spec, b0, derive_seed(spec.seed, "test"), n_test, false, nullptr);
}

}  // namespace tubalreg
