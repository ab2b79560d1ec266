#pragma once

#include "cgolab/exponent.hpp"
#include "cgolab/fft.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgolab {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// One periodic lattice axis on [-box, box).
struct Axis {
  int pts = 8;
  double box = 1.0;

  double step() const { return 2.0 * box / pts; }
  double coord(int j) const { return -box + j * step(); }
  double dfreq() const { return pi / box; }
  static int signed_index(int k, int n) { return k < n / 2 ? k : k - n; }
  double freq(int k) const { return signed_index(k, pts) * dfreq(); }
  double nyquist() const { return (pts / 2) * dfreq(); }
};

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

/// Spatial lattice: n axes sharing the same box and point count.
struct SpatialGrid {
  int n = 1;
  double box = 1.0;
  int pts = 8;

  Axis axis() const { return {pts, box}; }
  std::size_t size() const {
    std::size_t s = 1;
    for (int i = 0; i < n; ++i) s *= static_cast<std::size_t>(pts);
    return s;
  }
  double dx() const { return axis().step(); }
  double cell() const { return std::pow(dx(), n); }
  std::vector<int> dims() const { return std::vector<int>(static_cast<std::size_t>(n), pts); }
  bool operator==(const SpatialGrid&) const = default;
};

/// Space-time lattice of [-box_time, box_time) x [-box_space, box_space)^n.
struct GridSpec {
  int n = 1;
  double box_time = 1.0;
  double box_space = 1.0;
  int pts_time = 8;
  int pts_space = 8;

  Axis time_axis() const { return {pts_time, box_time}; }
  Axis space_axis() const { return {pts_space, box_space}; }
  SpatialGrid spatial() const { return {n, box_space, pts_space}; }
  std::size_t spatial_size() const { return spatial().size(); }
  std::size_t size() const { return static_cast<std::size_t>(pts_time) * spatial_size(); }
  double dt() const { return time_axis().step(); }
  double dx() const { return space_axis().step(); }
  double cell() const { return dt() * spatial().cell(); }
  std::vector<int> dims() const {
    std::vector<int> d{pts_time};
    for (int i = 0; i < n; ++i) d.push_back(pts_space);
    return d;
  }
  bool operator==(const GridSpec&) const = default;

  /// Throws std::invalid_argument naming the offending field.
  void validate(std::size_t max_points = std::size_t(1) << 26) const {
    if (n < 1 || n > 3) throw std::invalid_argument("n: spatial dimension must be 1, 2 or 3");
    if (!(box_time > 0)) throw std::invalid_argument("box_time: must be positive");
    if (!(box_space > 0)) throw std::invalid_argument("box_space: must be positive");
    if (pts_time < 8 || !is_power_of_two(pts_time))
      throw std::invalid_argument("pts_time: must be a power of two >= 8");
    if (pts_space < 8 || !is_power_of_two(pts_space))
      throw std::invalid_argument("pts_space: must be a power of two >= 8");
    if (size() > max_points) throw std::invalid_argument("pts: grid exceeds the memory budget");
  }
};

/// Shift of the frequency lattice (twisted boundary conditions). Zero means periodic.
struct FreqOffset {
  double tau = 0.0;
  std::array<double, 3> xi{0.0, 0.0, 0.0};
  bool is_zero() const { return tau == 0.0 && xi[0] == 0.0 && xi[1] == 0.0 && xi[2] == 0.0; }
};

enum class Rep { physical, frequency };

/// Complex samples on a GridSpec, row-major in (t, x_1, ..., x_n).
struct Field {
  GridSpec spec;
  Rep rep = Rep::physical;
  std::vector<cplx> data;

  Field() = default;
  explicit Field(const GridSpec& s, Rep r = Rep::physical) : spec(s), rep(r), data(s.size()) {}

  cplx& operator[](std::size_t i) { return data[i]; }
  const cplx& operator[](std::size_t i) const { return data[i]; }
  std::size_t size() const { return data.size(); }
};

/// Complex samples on a SpatialGrid (a time slice, an initial datum, ...).
struct SpatialField {
  SpatialGrid grid;
  std::vector<cplx> data;

  SpatialField() = default;
  explicit SpatialField(const SpatialGrid& g) : grid(g), data(g.size()) {}

  cplx& operator[](std::size_t i) { return data[i]; }
  const cplx& operator[](std::size_t i) const { return data[i]; }
  std::size_t size() const { return data.size(); }
};

// ---------------------------------------------------------------------------------------------
// Lattice iteration

/// Calls f(idx, x) for every spatial point, x pointing at n coordinates.
template <class F>
void for_each_spatial_point(const SpatialGrid& g, F&& f) {
  const Axis ax = g.axis();
  std::array<int, 3> j{0, 0, 0};
  std::array<double, 3> x{ax.coord(0), ax.coord(0), ax.coord(0)};
  const std::size_t total = g.size();
  for (std::size_t idx = 0; idx < total; ++idx) {
    f(idx, x.data());
    for (int a = g.n - 1; a >= 0; --a) {
      if (++j[a] < g.pts) {
        x[a] = ax.coord(j[a]);
        break;
      }
      j[a] = 0;
      x[a] = ax.coord(0);
    }
  }
}

/// Calls f(idx, xi) for every spatial frequency (plus offset).
template <class F>
void for_each_spatial_mode(const SpatialGrid& g, const std::array<double, 3>& off, F&& f) {
  const Axis ax = g.axis();
  std::array<int, 3> k{0, 0, 0};
  std::array<double, 3> xi{off[0], off[1], off[2]};
  const std::size_t total = g.size();
  for (std::size_t idx = 0; idx < total; ++idx) {
    f(idx, xi.data());
    for (int a = g.n - 1; a >= 0; --a) {
      if (++k[a] < g.pts) {
        xi[a] = ax.freq(k[a]) + off[a];
        break;
      }
      k[a] = 0;
      xi[a] = off[a];
    }
  }
}

/// Calls f(idx, t, x) for every space-time point.
template <class F>
void for_each_point(const GridSpec& g, F&& f) {
  const Axis ta = g.time_axis();
  const std::size_t ns = g.spatial_size();
  for (int jt = 0; jt < g.pts_time; ++jt) {
    const double t = ta.coord(jt);
    const std::size_t base = static_cast<std::size_t>(jt) * ns;
    for_each_spatial_point(g.spatial(), [&](std::size_t i, const double* x) { f(base + i, t, x); });
  }
}

/// Calls f(idx, tau, xi) for every space-time frequency (plus offset).
template <class F>
void for_each_mode(const GridSpec& g, const FreqOffset& off, F&& f) {
  const Axis ta = g.time_axis();
  const std::size_t ns = g.spatial_size();
  for (int kt = 0; kt < g.pts_time; ++kt) {
    const double tau = ta.freq(kt) + off.tau;
    const std::size_t base = static_cast<std::size_t>(kt) * ns;
    for_each_spatial_mode(g.spatial(), off.xi,
                          [&](std::size_t i, const double* xi) { f(base + i, tau, xi); });
  }
}

template <class F>
Field sample(const GridSpec& g, F&& f) {
  Field out(g);
  for_each_point(g, [&](std::size_t i, double t, const double* x) { out[i] = f(t, x); });
  return out;
}

template <class F>
SpatialField sample(const SpatialGrid& g, F&& f) {
  SpatialField out(g);
  for_each_spatial_point(g, [&](std::size_t i, const double* x) { out[i] = f(x); });
  return out;
}

inline SpatialField time_slice(const Field& u, int jt) {
  SpatialField s(u.spec.spatial());
  const std::size_t ns = u.spec.spatial_size();
  std::copy_n(u.data.begin() + static_cast<std::ptrdiff_t>(jt * ns), ns, s.data.begin());
  return s;
}

inline void set_time_slice(Field& u, int jt, const SpatialField& s) {
  const std::size_t ns = u.spec.spatial_size();
  std::copy_n(s.data.begin(), ns, u.data.begin() + static_cast<std::ptrdiff_t>(jt * ns));
}

// ---------------------------------------------------------------------------------------------
// Transforms and frequency-diagonal operators

/// Unitary DFT flipping the representation.
inline Field transform(const Field& f, fft::Direction dir) {
  if (f.data.size() != f.spec.size()) throw std::invalid_argument("field size mismatch");
  const Rep want = dir == fft::Direction::forward ? Rep::physical : Rep::frequency;
  if (f.rep != want) throw std::invalid_argument("transform direction does not match representation");
  Field g = f;
  fft::transform_inplace(g.data.data(), g.spec.dims(), 1, dir);
  g.rep = dir == fft::Direction::forward ? Rep::frequency : Rep::physical;
  return g;
}

/// Multiplies by exp(sign * i (off.tau t + off.xi . x)).
inline void modulate(Field& f, const FreqOffset& off, double sign) {
  if (off.is_zero()) return;
  const int n = f.spec.n;
  for_each_point(f.spec, [&](std::size_t i, double t, const double* x) {
    double ph = off.tau * t;
    for (int a = 0; a < n; ++a) ph += off.xi[a] * x[a];
    f[i] *= std::polar(1.0, sign * ph);
  });
}

inline void modulate(SpatialField& f, const std::array<double, 3>& off, double sign) {
  if (off[0] == 0.0 && off[1] == 0.0 && off[2] == 0.0) return;
  const int n = f.grid.n;
  for_each_spatial_point(f.grid, [&](std::size_t i, const double* x) {
    double ph = 0.0;
    for (int a = 0; a < n; ++a) ph += off[a] * x[a];
    f[i] *= std::polar(1.0, sign * ph);
  });
}

/// Applies the Fourier multiplier m(tau, xi) on the (offset) frequency lattice.
template <class Symbol>
Field apply_symbol(const Field& f, const FreqOffset& off, Symbol&& m) {
  if (f.rep != Rep::physical) throw std::invalid_argument("apply_symbol expects a physical field");
  Field g = f;
  modulate(g, off, -1.0);
  fft::transform_inplace(g.data.data(), g.spec.dims(), 1, fft::Direction::forward);
  for_each_mode(g.spec, off, [&](std::size_t i, double tau, const double* xi) { g[i] *= m(tau, xi); });
  fft::transform_inplace(g.data.data(), g.spec.dims(), 1, fft::Direction::inverse);
  modulate(g, off, 1.0);
  return g;
}

/// Applies the spatial Fourier multiplier m(xi) on the (offset) frequency lattice.
template <class Symbol>
SpatialField apply_symbol(const SpatialField& f, const std::array<double, 3>& off, Symbol&& m) {
  SpatialField g = f;
  modulate(g, off, -1.0);
  fft::transform_inplace(g.data.data(), g.grid.dims(), 1, fft::Direction::forward);
  for_each_spatial_mode(g.grid, off, [&](std::size_t i, const double* xi) { g[i] *= m(xi); });
  fft::transform_inplace(g.data.data(), g.grid.dims(), 1, fft::Direction::inverse);
  modulate(g, off, 1.0);
  return g;
}

/// Spectral derivative d^order/d(axis)^order; axis 0 is time, 1..n are space.
inline Field spectral_derivative(const Field& f, int axis, int order, const FreqOffset& off = {}) {
  return apply_symbol(f, off, [&](double tau, const double* xi) {
    const double k = axis == 0 ? tau : xi[axis - 1];
    return std::pow(I * k, order);
  });
}

// ---------------------------------------------------------------------------------------------
// Elementwise helpers

inline double l2(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}
inline double l2(const Field& f) { return l2(f.data); }
inline double l2(const SpatialField& f) { return l2(f.data); }

/// Quadrature L2 norm (lattice sum times cell volume).
inline double quad_l2(const Field& f) { return l2(f) * std::sqrt(f.spec.cell()); }
inline double quad_l2(const SpatialField& f) { return l2(f) * std::sqrt(f.grid.cell()); }

/// sum a * conj(b) (no quadrature weight).
inline cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
  return s;
}

template <class T>
concept SampledField = std::same_as<T, Field> || std::same_as<T, SpatialField>;

template <SampledField FieldT>
FieldT operator*(const FieldT& a, const FieldT& b) {
  FieldT c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
  return c;
}
template <SampledField FieldT>
FieldT operator+(const FieldT& a, const FieldT& b) {
  FieldT c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}
template <SampledField FieldT>
FieldT operator-(const FieldT& a, const FieldT& b) {
  FieldT c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}
template <SampledField FieldT>
FieldT scaled(const FieldT& a, cplx s) {
  FieldT c = a;
  for (auto& z : c.data) z *= s;
  return c;
}

inline bool has_nan(const std::vector<cplx>& v) {
  return std::any_of(v.begin(), v.end(), [](const cplx& z) { return std::isnan(z.real()) || std::isnan(z.imag()); });
}

// ---------------------------------------------------------------------------------------------
// Norms

/// L^r norm of a spatial field with quadrature weight dx^n.
inline double lebesgue_norm(const SpatialField& f, const Exponent& r) {
  if (has_nan(f.data)) throw std::invalid_argument("NaN in field");
  if (r.is_infinite()) {
    double m = 0.0;
    for (const auto& z : f.data) m = std::max(m, std::abs(z));
    return m;
  }
  const double p = r.value();
  double s = 0.0;
  for (const auto& z : f.data) s += std::pow(std::abs(z), p);
  return std::pow(s * f.grid.cell(), 1.0 / p);
}

/// Mixed norm (int (int |u|^r dx)^{q/r} dt)^{1/q}; infinite exponents are lattice maxima.
inline double mixed_norm(const Field& u, const Exponent& q, const Exponent& r) {
  if (u.rep != Rep::physical) throw std::invalid_argument("mixed_norm expects a physical field");
  if (has_nan(u.data)) throw std::invalid_argument("NaN in field");
  const std::size_t ns = u.spec.spatial_size();
  const double cell = u.spec.spatial().cell();
  std::vector<double> inner_norms(static_cast<std::size_t>(u.spec.pts_time));
  for (int jt = 0; jt < u.spec.pts_time; ++jt) {
    const cplx* p = u.data.data() + static_cast<std::size_t>(jt) * ns;
    if (r.is_infinite()) {
      double m = 0.0;
      for (std::size_t i = 0; i < ns; ++i) m = std::max(m, std::abs(p[i]));
      inner_norms[jt] = m;
    } else {
      const double rv = r.value();
      double s = 0.0;
      for (std::size_t i = 0; i < ns; ++i) s += std::pow(std::abs(p[i]), rv);
      inner_norms[jt] = std::pow(s * cell, 1.0 / rv);
    }
  }
  if (q.is_infinite()) return *std::max_element(inner_norms.begin(), inner_norms.end());
  const double qv = q.value();
  double s = 0.0;
  for (double v : inner_norms) s += std::pow(v, qv);
  return std::pow(s * u.spec.dt(), 1.0 / qv);
}

/// Index of the lattice plane nearest to coordinate s along a spatial axis.
inline int nearest_plane(const Axis& ax, double s) {
  const long j = std::lround((s + ax.box) / ax.step());
  return static_cast<int>(((j % ax.pts) + ax.pts) % ax.pts);
}

/// L2 norms over time x each hyperplane {x_axis = const}, for every lattice plane.
/// `axis` is 0-based among the spatial axes.
inline std::vector<double> hyperplane_norms(const Field& u, int axis) {
  if (axis < 0 || axis >= u.spec.n) throw std::invalid_argument("hyperplane axis out of range");
  const int N = u.spec.pts_space;
  std::vector<double> acc(static_cast<std::size_t>(N), 0.0);
  std::size_t stride = 1;
  for (int a = u.spec.n - 1; a > axis; --a) stride *= static_cast<std::size_t>(N);
  for (std::size_t i = 0; i < u.size(); ++i) acc[(i / stride) % N] += std::norm(u[i]);
  const double w = u.spec.dt() * std::pow(u.spec.dx(), u.spec.n - 1);
  for (auto& v : acc) v = std::sqrt(v * w);
  return acc;
}

/// ||u||_{L^2(R x {x_axis = s})}, s snapped to the nearest plane.
inline double hyperplane_norm(const Field& u, int axis, double s) {
  return hyperplane_norms(u, axis)[static_cast<std::size_t>(nearest_plane(u.spec.space_axis(), s))];
}

/// Fraction of sum |u|^2 lying within 10% of the box boundary along any axis (time included
/// for space-time fields).
inline double boundary_mass_fraction(const Field& u) {
  double total = 0.0, edge = 0.0;
  const double bt = 0.9 * u.spec.box_time, bs = 0.9 * u.spec.box_space;
  for_each_point(u.spec, [&](std::size_t i, double t, const double* x) {
    const double m = std::norm(u[i]);
    total += m;
    bool near = std::abs(t) > bt;
    for (int a = 0; a < u.spec.n; ++a) near = near || std::abs(x[a]) > bs;
    if (near) edge += m;
  });
  return total > 0 ? edge / total : 0.0;
}

inline double boundary_mass_fraction(const SpatialField& u) {
  double total = 0.0, edge = 0.0;
  const double bs = 0.9 * u.grid.box;
  for_each_spatial_point(u.grid, [&](std::size_t i, const double* x) {
    const double m = std::norm(u[i]);
    total += m;
    bool near = false;
    for (int a = 0; a < u.grid.n; ++a) near = near || std::abs(x[a]) > bs;
    if (near) edge += m;
  });
  return total > 0 ? edge / total : 0.0;
}

// ---------------------------------------------------------------------------------------------
// Serialization

namespace io_detail {
template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(buf, sizeof(T));
}
template <class T>
T get(std::istream& is) {
  char buf[sizeof(T)];
  if (!is.read(buf, sizeof(T))) throw std::runtime_error("truncated field container");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}
inline constexpr char magic[4] = {'C', 'G', 'L', 'F'};
}  // namespace io_detail

/// Binary container: magic, version, n, pts_time, pts_space, box_time, box_space, rep, then
/// interleaved little-endian re/im doubles.
inline void write_field(std::ostream& os, const Field& f) {
  using namespace io_detail;
  os.write(magic, 4);
  put<std::uint32_t>(os, 1);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.spec.n));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.spec.pts_time));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.spec.pts_space));
  put<double>(os, f.spec.box_time);
  put<double>(os, f.spec.box_space);
  put<std::uint32_t>(os, f.rep == Rep::physical ? 0u : 1u);
  for (const auto& z : f.data) {
    put<double>(os, z.real());
    put<double>(os, z.imag());
  }
}

inline Field read_field(std::istream& is) {
  using namespace io_detail;
  char m[4];
  if (!is.read(m, 4) || std::memcmp(m, magic, 4) != 0) throw std::runtime_error("not a field container");
  if (get<std::uint32_t>(is) != 1) throw std::runtime_error("unsupported field container version");
  GridSpec g;
  g.n = static_cast<int>(get<std::uint32_t>(is));
  g.pts_time = static_cast<int>(get<std::uint32_t>(is));
  g.pts_space = static_cast<int>(get<std::uint32_t>(is));
  g.box_time = get<double>(is);
  g.box_space = get<double>(is);
  // Storage checks only: recorded trajectories have pts_time = slices, not a power of two.
  if (g.n < 1 || g.n > 3 || g.pts_time < 1 || g.pts_space < 1 || !(g.box_time > 0) || !(g.box_space > 0) ||
      g.size() > (std::size_t(1) << 28))
    throw std::runtime_error("field container: invalid header");
  Field f(g, get<std::uint32_t>(is) == 0 ? Rep::physical : Rep::frequency);
  for (auto& z : f.data) {
    const double re = get<double>(is);
    const double im = get<double>(is);
    z = {re, im};
  }
  return f;
}

/// CSV of a spatial slice: x_1..x_n, re, im.
inline void write_slice_csv(std::ostream& os, const SpatialField& s) {
  for (int a = 0; a < s.grid.n; ++a) os << "x" << (a + 1) << ",";
  os << "re,im\n";
  char buf[64];
  for_each_spatial_point(s.grid, [&](std::size_t i, const double* x) {
    for (int a = 0; a < s.grid.n; ++a) {
      std::snprintf(buf, sizeof buf, "%.17g,", x[a]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s[i].real(), s[i].imag());
    os << buf;
  });
}

}  // namespace cgolab
