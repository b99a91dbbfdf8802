#ifndef METASHAPE_KERNELS_H_
#define METASHAPE_KERNELS_H_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Dense row kernels behind the maxent oracle. Every ISA variant must match
// the scalar reference: element-wise kernels bit for bit, reductions to
// rounding (they sum in a different order).
namespace metashape::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  const char* name;
  void (*add)(const double* x, double* y, size_t n);              // y += x
  void (*axpy)(double a, const double* x, double* y, size_t n);   // y += a x
  void (*scale)(double a, double* y, size_t n);                   // y *= a
  double (*dot)(const double* x, const double* y, size_t n);
  double (*sum_squares)(const double* x, size_t n);
  double (*max)(const double* x, size_t n);  // n > 0
};

const KernelTable& ScalarTable();

// nullptr when the variant is not compiled in or the CPU lacks it.
const KernelTable* Avx2Table();
const KernelTable* NeonTable();

// Every table usable on this machine, scalar first.
std::vector<const KernelTable*> AvailableTables();

// The table used by the library. Picked once from the CPU, overridable with
// METASHAPE_SIMD=scalar|avx2|neon.
const KernelTable& Active();

inline void Add(std::span<const double> x, std::span<double> y) {
  Active().add(x.data(), y.data(), y.size());
}
inline void Axpy(double a, std::span<const double> x, std::span<double> y) {
  Active().axpy(a, x.data(), y.data(), y.size());
}
inline void Scale(double a, std::span<double> y) {
  Active().scale(a, y.data(), y.size());
}
inline double Dot(std::span<const double> x, std::span<const double> y) {
  return Active().dot(x.data(), y.data(), x.size());
}
inline double SumSquares(std::span<const double> x) {
  return Active().sum_squares(x.data(), x.size());
}
inline double Max(std::span<const double> x) {
  return Active().max(x.data(), x.size());
}

}  // namespace metashape::kernels

#endif  // METASHAPE_KERNELS_H_
