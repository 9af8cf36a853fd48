#include "tubalreg/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "tubalreg/error.hpp"

namespace tubalreg::io {

namespace {

using nlohmann::json;

constexpr std::array<char, 4> kMagic = {'T', 'B', '3', '1'};

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return r;
  }
  return v;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  v = to_le(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return to_le(v);
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(Errc::IoError, "cannot create directory " + path.parent_path().string());
  }
  std::ofstream os(path, mode | std::ios::trunc);
  if (!os) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(path, mode);
  if (!is) fail(Errc::IoError, "cannot open " + path.string());
  return is;
}

double parse_double(std::string_view s, const fs::path& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(Errc::ParseError, where.string() + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> data_lines(const fs::path& path) {
  std::ifstream is = open_in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

bool is_header(std::string_view line) {
  const auto c = line.find_first_not_of(" \t");
  return c != std::string_view::npos && std::isalpha(static_cast<unsigned char>(line[c])) &&
         line.substr(c, 3) != "inf" && line.substr(c, 3) != "nan";
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os = open_out(tmp, std::ios::out | std::ios::binary);
    os << text;
    if (!os) fail(Errc::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(Errc::IoError, "cannot rename " + tmp.string() + " to " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is = open_in(path, std::ios::in | std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_tb3(const fs::path& path, const Tensor3& t) {
  require(!t.empty(), Errc::BadParameter, "cannot write an empty tensor");
  std::ofstream os = open_out(path, std::ios::out | std::ios::binary);
  os.write(kMagic.data(), kMagic.size());
  put_u64(os, static_cast<std::uint64_t>(t.d1()));
  put_u64(os, static_cast<std::uint64_t>(t.d2()));
  put_u64(os, static_cast<std::uint64_t>(t.d3()));
  for (double v : t.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) fail(Errc::IoError, "write failed: " + path.string());
}

Tensor3 read_tb3(const fs::path& path) {
  std::ifstream is = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) fail(Errc::ParseError, path.string() + ": not a TB31 file");
  const std::uint64_t d1 = get_u64(is);
  const std::uint64_t d2 = get_u64(is);
  const std::uint64_t d3 = get_u64(is);
  if (!is) fail(Errc::ParseError, path.string() + ": truncated header");
  constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 34;
  if (d1 == 0 || d2 == 0 || d3 == 0 || d1 > kMaxEntries / d2 || d1 * d2 > kMaxEntries / d3) {
    fail(Errc::ParseError, path.string() + ": implausible dimensions");
  }
  std::vector<double> data(d1 * d2 * d3);
  for (double& v : data) v = std::bit_cast<double>(get_u64(is));
  if (!is) fail(Errc::ParseError, path.string() + ": truncated data");
  if (is.peek() != std::char_traits<char>::eof()) {
    fail(Errc::ParseError, path.string() + ": trailing bytes");
  }
  return Tensor3(static_cast<Index>(d1), static_cast<Index>(d2), static_cast<Index>(d3),
                 std::move(data));
}

Tensor3 read_csv_matrix(const fs::path& path) {
  const std::vector<std::string> lines = data_lines(path);
  std::vector<std::vector<double>> rows;
  for (const std::string& line : lines) {
    if (rows.empty() && is_header(line)) continue;
    std::vector<double> row;
    for (std::string_view cell : split(line, ',')) row.push_back(parse_double(cell, path));
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(Errc::ParseError, path.string() + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(Errc::ParseError, path.string() + ": no data rows");
  const Index d1 = static_cast<Index>(rows.size());
  const Index d2 = static_cast<Index>(rows.front().size());
  Tensor3 t(d1, d2, 1);
  for (Index i = 0; i < d1; ++i) {
    for (Index j = 0; j < d2; ++j) t(i, j, 0) = rows[i][j];
  }
  return t;
}

void save_dataset(const fs::path& dir, const Dataset& data, DatasetLayout layout) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::IoError, "cannot create directory " + dir.string());
  const Index n = data.n();
  const Index p = data.p();
  json manifest = {{"format", "tubalreg-dataset"}, {"version", 1},  {"n", n},
                   {"d1", data.d1()},             {"d2", data.d2()}, {"d3", data.d3()},
                   {"y", "y.csv"}};
  if (layout == DatasetLayout::Stacked) {
    // Row i of the design is sample i in slice-major order, so the row-major
    // buffer already is the stacked tensor.
    std::vector<double> buf(data.design().data(), data.design().data() + n * p);
    write_tb3(dir / "X.tb3", Tensor3(data.d1(), data.d2(), data.d3() * n, std::move(buf)));
    manifest["layout"] = "stacked";
    manifest["x"] = "X.tb3";
  } else {
    json files = json::array();
    for (Index i = 0; i < n; ++i) {
      const std::string name = "X_" + std::to_string(i) + ".tb3";
      write_tb3(dir / name, data.sample(i));
      files.push_back(name);
    }
    manifest["layout"] = "per_sample";
    manifest["x"] = files;
  }
  std::string y;
  y.reserve(static_cast<std::size_t>(n) * 12 + 2);
  y += "y\n";
  for (Index i = 0; i < n; ++i) y += format_double(data.y()(i)) + "\n";
  write_text(dir / "y.csv", y);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  json m;
  try {
    m = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    fail(Errc::ParseError, (dir / "manifest.json").string() + ": " + e.what());
  }
  try {
    const Index n = m.at("n").get<Index>();
    const Index d1 = m.at("d1").get<Index>();
    const Index d2 = m.at("d2").get<Index>();
    const Index d3 = m.at("d3").get<Index>();
    require(n >= 1 && d1 >= 1 && d2 >= 1 && d3 >= 1, Errc::ParseError,
            "manifest dimensions must be positive");
    const std::string layout = m.value("layout", std::string("stacked"));
    const Index p = d1 * d2 * d3;
    RowMatrix x(n, p);
    if (layout == "stacked") {
      const Tensor3 t = read_tb3(dir / m.value("x", std::string("X.tb3")));
      require(t.d1() == d1 && t.d2() == d2 && t.d3() == d3 * n, Errc::ParseError,
              "X.tb3 dims do not match the manifest");
      std::copy(t.data().begin(), t.data().end(), x.data());
    } else if (layout == "per_sample") {
      const auto& files = m.at("x");
      require(files.is_array() && static_cast<Index>(files.size()) == n, Errc::ParseError,
              "per_sample layout needs n file names");
      for (Index i = 0; i < n; ++i) {
        const Tensor3 t = read_tb3(dir / files[static_cast<std::size_t>(i)].get<std::string>());
        require(t.d1() == d1 && t.d2() == d2 && t.d3() == d3, Errc::ParseError,
                "sample tensor dims do not match the manifest");
        std::copy(t.data().begin(), t.data().end(), x.row(i).data());
      }
    } else {
      fail(Errc::ParseError, "unknown dataset layout '" + layout + "'");
    }
    std::vector<double> y;
    const fs::path ypath = dir / m.value("y", std::string("y.csv"));
    for (const std::string& line : data_lines(ypath)) {
      if (y.empty() && is_header(line)) continue;
      y.push_back(parse_double(line, ypath));
    }
    require(static_cast<Index>(y.size()) == n, Errc::ParseError,
            ypath.string() + " has " + std::to_string(y.size()) + " values, expected " +
                std::to_string(n));
    return Dataset(d1, d2, d3, std::move(x), Eigen::Map<Eigen::VectorXd>(y.data(), n));
  } catch (const json::exception& e) {
    fail(Errc::ParseError, (dir / "manifest.json").string() + ": " + e.what());
  }
}

void write_trace_csv(const fs::path& path, std::span<const IterationRecord> trace) {
  std::string s = "iter,objective,eta,increment_norm,backtracks\n";
  for (const IterationRecord& r : trace) {
    s += std::to_string(r.iter) + "," + format_double(r.objective) + "," + format_double(r.eta) +
         "," + format_double(r.increment) + "," + std::to_string(r.backtracks) + "\n";
  }
  write_text(path, s);
}

std::vector<IterationRecord> read_trace_csv(const fs::path& path) {
  std::vector<IterationRecord> out;
  bool first = true;
  for (const std::string& line : data_lines(path)) {
    if (first && is_header(line)) {
      first = false;
      continue;
    }
    first = false;
    const auto cells = split(line, ',');
    if (cells.size() != 5) fail(Errc::ParseError, path.string() + ": expected 5 columns");
    IterationRecord r;
    r.iter = static_cast<int>(parse_double(cells[0], path));
    r.objective = parse_double(cells[1], path);
    r.eta = parse_double(cells[2], path);
    r.increment = parse_double(cells[3], path);
    r.backtracks = static_cast<int>(parse_double(cells[4], path));
    out.push_back(r);
  }
  return out;
}

void write_cv_csv(const fs::path& path, std::span<const CvRow> rows) {
  std::string s = "lambda,robustification,fold,criterion,mean_criterion,selected\n";
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    for (; j < rows.size() && rows[j].lambda == rows[i].lambda &&
           rows[j].robustification == rows[i].robustification;
         ++j) {
      s += format_double(rows[j].lambda) + "," + format_double(rows[j].robustification) + "," +
           std::to_string(rows[j].fold) + "," + format_double(rows[j].criterion) + "," +
           format_double(rows[j].mean_criterion) + ",0\n";
    }
    s += format_double(rows[i].lambda) + "," + format_double(rows[i].robustification) + ",all," +
         format_double(rows[i].mean_criterion) + "," + format_double(rows[i].mean_criterion) +
         "," + (rows[i].selected ? "1" : "0") + "\n";
    i = j;
  }
  write_text(path, s);
}

void write_pgm(const fs::path& path, const Tensor3& t) {
  require(!t.empty(), Errc::BadParameter, "cannot render an empty tensor");
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(t.d1(), t.d2());
  for (Index k = 0; k < t.d3(); ++k) mean += t.slice(k);
  mean /= static_cast<double>(t.d3());
  const double lo = mean.minCoeff();
  const double hi = mean.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  std::string s = "P5\n" + std::to_string(t.d2()) + " " + std::to_string(t.d1()) + "\n255\n";
  for (Index i = 0; i < t.d1(); ++i) {
    for (Index j = 0; j < t.d2(); ++j) {
      const double v = std::clamp((mean(i, j) - lo) / span, 0.0, 1.0);
      s.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
  }
  write_text(path, s);
}

}  // namespace tubalreg::io
