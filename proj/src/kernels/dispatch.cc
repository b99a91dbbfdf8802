#include <cstdlib>
#include <string_view>

#include "metashape/kernels.h"

namespace metashape::kernels {

std::vector<const KernelTable*> AvailableTables() {
  std::vector<const KernelTable*> out{&ScalarTable()};
  if (const KernelTable* t = Avx2Table()) out.push_back(t);
  if (const KernelTable* t = NeonTable()) out.push_back(t);
  return out;
}

namespace {

const KernelTable& Choose() {
  const char* env = std::getenv("METASHAPE_SIMD");
  const std::string_view want = env == nullptr ? "auto" : env;
  if (want == "scalar") return ScalarTable();
  if (want == "avx2" && Avx2Table() != nullptr) return *Avx2Table();
  if (want == "neon" && NeonTable() != nullptr) return *NeonTable();
  if (const KernelTable* t = Avx2Table()) return *t;
  if (const KernelTable* t = NeonTable()) return *t;
  return ScalarTable();
}

}  // namespace

const KernelTable& Active() {
  static const KernelTable& table = Choose();
  return table;
}

}  // namespace metashape::kernels
