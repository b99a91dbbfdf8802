#include "metashape/kernels.h"

namespace metashape::kernels {

namespace {

void AddScalar(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += x[i];
}

void AxpyScalar(double a, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void ScaleScalar(double a, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] *= a;
}

double DotScalar(const double* x, const double* y, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double SumSquaresScalar(const double* x, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double MaxScalar(const double* x, size_t n) {
  double m = x[0];
  for (size_t i = 1; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

}  // namespace

const KernelTable& ScalarTable() {
  static const KernelTable table{Isa::kScalar, "scalar", AddScalar,
                                 AxpyScalar,   ScaleScalar, DotScalar,
                                 SumSquaresScalar, MaxScalar};
  return table;
}

}  // namespace metashape::kernels
