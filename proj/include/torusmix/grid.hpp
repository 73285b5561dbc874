#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace torusmix::grid {

// Uniform N x N sample array on the torus, row-major, cell-centered:
// value(a, b) sits at ((b+1/2)/N, (a+1/2)/N), row index a along x2.
struct GridField {
  int N = 0;
  std::vector<double> values;

  GridField() = default;
  explicit GridField(int n, double fill = 0.0) : N(n), values(size_t(n) * n, fill) {}

  double& at(int row, int col) { return values[size_t(row) * N + col]; }
  double at(int row, int col) const { return values[size_t(row) * N + col]; }

  double cell_x1(int col) const { return (col + 0.5) / N; }
  double cell_x2(int row) const { return (row + 0.5) / N; }
};

GridField sample(int N, const std::function<double(double, double)>& f);

double mass(const GridField& f);
double lp_norm(const GridField& f, double p);  // p in {1, 2} or infinity
double linf_norm(const GridField& f);
double l1_distance(const GridField& a, const GridField& b);
double variance(const GridField& f);  // ||f - mean||_L2^2

// Binary snapshot format: magic "TMXF", version u32, N u32, then N*N
// little-endian binary64 row-major.
void write_tmxf(const std::string& path, const GridField& f);
GridField read_tmxf(const std::string& path);

void write_csv(const std::string& path, const GridField& f);

}  // namespace torusmix::grid
