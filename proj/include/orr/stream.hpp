#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "orr/linalg.hpp"

namespace orr {

struct Example {
  Vec x;
  double y = 0.0;
};

/// Ordered sequence of (x_t, y_t); order is the protocol order.
using Stream = std::vector<Example>;

/// Inputs as rows of a T x n matrix and outcomes as a vector.
inline std::pair<Eigen::MatrixXd, Vec> stream_matrices(const Stream& s, Eigen::Index dim) {
  Eigen::MatrixXd xs(static_cast<Eigen::Index>(s.size()), dim);
  Vec ys(static_cast<Eigen::Index>(s.size()));
  for (std::size_t t = 0; t < s.size(); ++t) {
    detail::require_dim(s[t].x.size(), dim, "stream");
    xs.row(static_cast<Eigen::Index>(t)) = s[t].x.transpose();
    ys(static_cast<Eigen::Index>(t)) = s[t].y;
  }
  return {std::move(xs), std::move(ys)};
}

inline Eigen::Index stream_dim(const Stream& s) {
  if (s.empty()) throw InputError("stream is empty; dimension unknown");
  return s.front().x.size();
}

// Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_cell(std::string_view cell, std::size_t line, std::size_t col) {
  double v = 0.0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) +
                     ": not a finite real: '" + std::string(cell) + "'");
  }
  return v;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(std::move(l));
  return lines;
}

}  // namespace detail

/// Reads a CSV with header "f1,...,fn,y". Blank lines are skipped.
inline Stream parse_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (width == 0 && std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto header = detail::split(line, ',');
    if (header.size() < 2 || header.back() != "y") {
      throw ParseError("line " + std::to_string(lineno) + ": header must be f1,...,fn,y");
    }
    width = header.size();
  }
  if (width == 0) throw ParseError("no header row");

  Stream out;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != width) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                       " cells, got " + std::to_string(cells.size()));
    }
    Example e;
    e.x.resize(static_cast<Eigen::Index>(width - 1));
    for (std::size_t c = 0; c + 1 < width; ++c) {
      e.x(static_cast<Eigen::Index>(c)) = detail::parse_cell(cells[c], lineno, c + 1);
    }
    e.y = detail::parse_cell(cells.back(), lineno, width);
    out.push_back(std::move(e));
  }
  return out;
}

inline Stream load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_csv(in);
}

inline void write_csv(std::ostream& out, const Stream& s) {
  const Eigen::Index n = s.empty() ? 1 : s.front().x.size();
  for (Eigen::Index i = 0; i < n; ++i) out << 'f' << (i + 1) << ',';
  out << "y\n";
  for (const auto& e : s) {
    for (Eigen::Index i = 0; i < e.x.size(); ++i) out << format_double(e.x(i)) << ',';
    out << format_double(e.y) << '\n';
  }
}

/// One row of a precomputed-kernel stream: K(x_i, x_t) for i < t, K(x_t, x_t), y_t.
struct KernelRow {
  Vec k;
  double kxx = 0.0;
  double y = 0.0;
};

/// Precomputed-kernel CSV: no header; row t (1-based) holds t-1 cross-kernel
/// values, then K(x_t,x_t), then y_t, so it has exactly t+1 cells.
inline std::vector<KernelRow> parse_kernel_csv(std::istream& in) {
  std::vector<KernelRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    const std::size_t t = rows.size() + 1;
    if (cells.size() != t + 1) {
      throw ParseError("line " + std::to_string(lineno) + ": kernel row " + std::to_string(t) +
                       " needs " + std::to_string(t + 1) + " cells, got " +
                       std::to_string(cells.size()));
    }
    KernelRow r;
    r.k.resize(static_cast<Eigen::Index>(t - 1));
    for (std::size_t c = 0; c + 1 < t; ++c) {
      r.k(static_cast<Eigen::Index>(c)) = detail::parse_cell(cells[c], lineno, c + 1);
    }
    r.kxx = detail::parse_cell(cells[t - 1], lineno, t);
    r.y = detail::parse_cell(cells[t], lineno, t + 1);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<KernelRow> load_kernel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_kernel_csv(in);
}

/// Full kernel matrix of a precomputed stream.
inline SymMatrix kernel_rows_gram(const std::vector<KernelRow>& rows) {
  const auto t = static_cast<Eigen::Index>(rows.size());
  SymMatrix g(t, t);
  for (Eigen::Index j = 0; j < t; ++j) {
    const auto& r = rows[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < j; ++i) g(i, j) = g(j, i) = r.k(i);
    g(j, j) = r.kxx;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Synthetic streams

/// Portable generator: std::mt19937_64 (bit-exact by the standard), 53-bit
/// uniforms from the top bits, normals by Box-Muller. Standard library
/// distributions are avoided because their output is implementation-defined.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vec normal_vec(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

 private:
  std::mt19937_64 eng_;
  std::optional<double> spare_;
};

struct UniformCube {
  double bound = 1.0;  // each coordinate uniform in [-bound, bound]
};

struct Sphere {
  double radius = 1.0;  // |x|_2 == radius exactly
};

enum class Adversarial { none, constant_x, alternating_sign };

struct SyntheticSpec {
  int n = 1;
  int T = 0;
  std::optional<Vec> theta_star;  // nullopt: drawn from N(0, I)
  double noise_sigma = 0.0;
  std::variant<UniformCube, Sphere> x_dist = UniformCube{};
  Adversarial adversarial = Adversarial::none;
  std::optional<double> y_bound;  // outcomes clamped to [-y_bound, y_bound]
};

struct SyntheticStream {
  Stream stream;
  Vec theta_star;
  double max_norm2 = 0.0;
  double max_norm_inf = 0.0;
  double max_abs_y = 0.0;
};

/// y_t = theta*'x_t + N(0, noise_sigma^2), optionally with an adversarial twist.
inline SyntheticStream generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.n < 1) throw ParamError("synthetic: n must be >= 1");
  if (spec.T < 0) throw ParamError("synthetic: T must be >= 0");
  if (!(spec.noise_sigma >= 0.0)) throw ParamError("synthetic: noise must be >= 0");
  if (spec.y_bound && !(*spec.y_bound > 0.0)) throw ParamError("synthetic: y bound must be > 0");
  std::visit(
      [](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        const double v = [&] {
          if constexpr (std::is_same_v<D, UniformCube>) return d.bound;
          else return d.radius;
        }();
        if (!(v > 0.0) || !std::isfinite(v)) throw ParamError("synthetic: x bound must be > 0");
      },
      spec.x_dist);

  PortableRng rng(seed);
  SyntheticStream out;
  if (spec.theta_star) {
    detail::require_dim(spec.theta_star->size(), spec.n, "synthetic theta");
    out.theta_star = *spec.theta_star;
  } else {
    out.theta_star = rng.normal_vec(spec.n);
  }

  auto draw_x = [&]() -> Vec {
    if (const auto* c = std::get_if<UniformCube>(&spec.x_dist)) {
      Vec x(spec.n);
      for (int i = 0; i < spec.n; ++i) x(i) = rng.uniform(-c->bound, c->bound);
      return x;
    }
    const double r = std::get<Sphere>(spec.x_dist).radius;
    Vec x = rng.normal_vec(spec.n);
    double norm = x.norm();
    while (norm == 0.0) {
      x = rng.normal_vec(spec.n);
      norm = x.norm();
    }
    return x * (r / norm);
  };

  const Vec fixed_x = spec.adversarial == Adversarial::constant_x ? draw_x() : Vec();
  out.stream.reserve(static_cast<std::size_t>(spec.T));
  for (int t = 0; t < spec.T; ++t) {
    Example e;
    e.x = spec.adversarial == Adversarial::constant_x ? fixed_x : draw_x();
    e.y = out.theta_star.dot(e.x) + spec.noise_sigma * rng.normal();
    if (spec.adversarial == Adversarial::alternating_sign && t % 2 == 1) e.y = -e.y;
    if (spec.y_bound) e.y = std::clamp(e.y, -*spec.y_bound, *spec.y_bound);
    out.max_norm2 = std::max(out.max_norm2, e.x.norm());
    out.max_norm_inf = std::max(out.max_norm_inf, e.x.lpNorm<Eigen::Infinity>());
    out.max_abs_y = std::max(out.max_abs_y, std::abs(e.y));
    out.stream.push_back(std::move(e));
  }
  return out;
}

/// Parses "n=5,T=100,noise=0.1,x=cube:1,theta=random,adv=none,ybound=10".
/// theta may also be a ';'-separated vector, e.g. theta=1;-2;0.5.
inline SyntheticSpec parse_synthetic_spec(std::string_view text) {
  SyntheticSpec spec;
  std::string theta = "random";
  for (auto item : detail::split(text, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("synthetic: expected key=value, got '" + std::string(item) + "'");
    const std::string key(detail::trim(item.substr(0, eq)));
    const std::string_view val = detail::trim(item.substr(eq + 1));
    auto num = [&](std::string_view v) {
      try {
        return detail::parse_cell(v, 0, 0);
      } catch (const ParseError&) {
        throw ConfigError("synthetic: bad number for '" + key + "': '" + std::string(v) + "'");
      }
    };
    auto integer = [&](std::string_view v) {
      const double d = num(v);
      if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError("synthetic: '" + key + "' must be an integer");
      return static_cast<int>(d);
    };
    if (key == "n") {
      spec.n = integer(val);
    } else if (key == "T") {
      spec.T = integer(val);
    } else if (key == "noise") {
      spec.noise_sigma = num(val);
    } else if (key == "x") {
      const auto colon = val.find(':');
      const std::string_view kind = val.substr(0, colon);
      const double b = colon == std::string_view::npos ? 1.0 : num(val.substr(colon + 1));
      if (kind == "cube") spec.x_dist = UniformCube{b};
      else if (kind == "sphere") spec.x_dist = Sphere{b};
      else throw ConfigError("synthetic: x must be cube:<X> or sphere:<Z>");
    } else if (key == "theta") {
      theta = std::string(val);
    } else if (key == "adv") {
      if (val == "none") spec.adversarial = Adversarial::none;
      else if (val == "constant_x") spec.adversarial = Adversarial::constant_x;
      else if (val == "alternating_sign") spec.adversarial = Adversarial::alternating_sign;
      else throw ConfigError("synthetic: adv must be none, constant_x or alternating_sign");
    } else if (key == "ybound") {
      spec.y_bound = num(val);
    } else {
      throw ConfigError("synthetic: unknown key '" + key + "'");
    }
  }
  if (theta != "random") {
    const auto parts = detail::split(theta, ';');
    Vec v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      try {
        v(static_cast<Eigen::Index>(i)) = detail::parse_cell(parts[i], 0, i + 1);
      } catch (const ParseError&) {
        throw ConfigError("synthetic: bad theta component '" + std::string(parts[i]) + "'");
      }
    }
    if (v.size() != spec.n) throw ConfigError("synthetic: theta length must equal n");
    spec.theta_star = v;
  }
  return spec;
}

}  // namespace orr
