#include "torusmix/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "torusmix/util.hpp"

namespace torusmix::grid {

GridField sample(int N, const std::function<double(double, double)>& f) {
  GridField g(N);
  util::parallel_rows(N, [&](int row) {
    double x2 = g.cell_x2(row);
    for (int col = 0; col < N; ++col)
      g.at(row, col) = f(g.cell_x1(col), x2);
  });
  return g;
}

double mass(const GridField& f) {
  long double s = 0.0L;
  for (double v : f.values) s += v;
  return (double)(s / f.values.size());
}

double lp_norm(const GridField& f, double p) {
  if (std::isinf(p)) return linf_norm(f);
  long double s = 0.0L;
  if (p == 1.0) {
    for (double v : f.values) s += std::fabs(v);
  } else if (p == 2.0) {
    for (double v : f.values) s += (long double)v * v;
  } else {
    for (double v : f.values) s += std::pow(std::fabs(v), (long double)p);
  }
  s /= f.values.size();
  return p == 1.0 ? (double)s : (double)std::pow(s, 1.0L / p);
}

double linf_norm(const GridField& f) {
  double s = 0.0;
  for (double v : f.values) s = std::max(s, std::fabs(v));
  return s;
}

double l1_distance(const GridField& a, const GridField& b) {
  if (a.N != b.N) throw std::invalid_argument("l1_distance: size mismatch");
  long double s = 0.0L;
  for (size_t i = 0; i < a.values.size(); ++i)
    s += std::fabs(a.values[i] - b.values[i]);
  return (double)(s / a.values.size());
}

double variance(const GridField& f) {
  double mu = mass(f);
  long double s = 0.0L;
  for (double v : f.values) s += (long double)(v - mu) * (v - mu);
  return (double)(s / f.values.size());
}

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t((unsigned char)p[i]) << (8 * i);
  return v;
}

}  // namespace

void write_tmxf(const std::string& path, const GridField& f) {
  std::string buf;
  buf.reserve(12 + f.values.size() * 8);
  buf += "TMXF";
  put_u32(buf, 1u);
  put_u32(buf, (std::uint32_t)f.N);
  for (double v : f.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf.push_back(char((bits >> (8 * i)) & 0xff));
  }
  util::atomic_write(path, buf);
}

GridField read_tmxf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_tmxf: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 12 || buf.compare(0, 4, "TMXF") != 0)
    throw std::runtime_error("read_tmxf: bad magic in " + path);
  std::uint32_t version = get_u32(buf.data() + 4);
  if (version != 1u) throw std::runtime_error("read_tmxf: unsupported version");
  std::uint32_t n = get_u32(buf.data() + 8);
  GridField g((int)n);
  if (buf.size() != 12 + g.values.size() * 8)
    throw std::runtime_error("read_tmxf: truncated payload");
  for (size_t idx = 0; idx < g.values.size(); ++idx) {
    std::uint64_t bits = 0;
    const char* p = buf.data() + 12 + idx * 8;
    for (int i = 0; i < 8; ++i)
      bits |= std::uint64_t((unsigned char)p[i]) << (8 * i);
    std::memcpy(&g.values[idx], &bits, 8);
  }
  return g;
}

void write_csv(const std::string& path, const GridField& f) {
  std::string buf;
  char tmp[32];
  for (int r = 0; r < f.N; ++r) {
    for (int c = 0; c < f.N; ++c) {
      std::snprintf(tmp, sizeof tmp, "%.17g", f.at(r, c));
      buf += tmp;
      buf.push_back(c + 1 == f.N ? '\n' : ',');
    }
  }
  util::atomic_write(path, buf);
}

}  // namespace torusmix::grid
