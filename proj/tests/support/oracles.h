#ifndef METASHAPE_TESTS_SUPPORT_ORACLES_H_
#define METASHAPE_TESTS_SUPPORT_ORACLES_H_

// Independent re-evaluations of the statistics definitions, computed from
// raw rows rather than from the library's count tables.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "generators.h"

namespace metashape::testing::oracle {

struct Recount {
  size_t n = 0;
  size_t num_labels = 0;
  std::vector<double> cls;
  std::map<std::string, double> tok;
  std::map<std::string, std::vector<double>> joint;
};

inline Recount CountRows(const std::vector<RawRow>& rows, size_t num_labels) {
  Recount r;
  r.n = rows.size();
  r.num_labels = num_labels;
  r.cls.assign(num_labels, 0.0);
  for (const auto& row : rows) {
    std::set<std::string> distinct(row.tokens.begin(), row.tokens.end());
    std::set<LabelId> labels(row.labels.begin(), row.labels.end());
    for (LabelId y : labels) r.cls[y] += 1;
    for (const auto& t : distinct) {
      r.tok[t] += 1;
      auto& j = r.joint[t];
      j.resize(num_labels, 0.0);
      for (LabelId y : labels) j[y] += 1;
    }
  }
  return r;
}

inline double Pmi(const Recount& c, LabelId y, const std::string& m, double alpha) {
  const double V = static_cast<double>(c.tok.size());
  const double Y = static_cast<double>(c.num_labels);
  const double D = static_cast<double>(c.n) + alpha * Y * V;
  auto it = c.joint.find(m);
  const double joint = it == c.joint.end() ? 0.0 : it->second[y];
  const double tok = it == c.joint.end() ? 0.0 : c.tok.at(m);
  const double pj = (joint + alpha) / D;
  const double py = (c.cls[y] + alpha * V) / D;
  const double pm = (tok + alpha * Y) / D;
  if (pj == 0.0 || py == 0.0 || pm == 0.0 || D == 0.0) {
    return -std::numeric_limits<double>::infinity();
  }
  return std::log(pj / (py * pm)) / std::log(2.0);
}

inline std::vector<double> ClassGivenToken(const Recount& c, const std::string& m,
                                           double alpha) {
  const size_t k = c.num_labels;
  std::vector<double> r(k, 0.0);
  if (c.joint.count(m) == 0) return std::vector<double>(k, 1.0 / k);
  double total = 0.0;
  for (size_t y = 0; y < k; ++y) {
    const double p = Pmi(c, static_cast<LabelId>(y), m, alpha);
    const double f = c.n == 0 ? 0.0 : c.cls[y] / static_cast<double>(c.n);
    r[y] = std::isinf(p) ? 0.0 : std::pow(2.0, p) * f;
    total += r[y];
  }
  if (total == 0.0) return std::vector<double>(k, 1.0 / k);
  for (double& x : r) x /= total;
  return r;
}

inline double Entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0) h -= x * std::log(x) / std::log(2.0);
  }
  return h;
}

inline double Kl(const std::vector<double>& p, std::vector<double> q) {
  bool smooth = false;
  for (size_t i = 0; i < p.size(); ++i) smooth |= p[i] > 0 && q[i] == 0;
  if (smooth) {
    double s = 0.0;
    for (double& x : q) s += (x += 1e-9);
    for (double& x : q) x /= s;
  }
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) kl += p[i] * std::log(p[i] / q[i]) / std::log(2.0);
  }
  return std::max(kl, 0.0);
}

// Unit key used by the brute-force subset search.
struct Unit {
  std::string text;
  double h = 0.0;
  double count = 0.0;
};

inline bool KeyLess(const Unit& a, const Unit& b) {
  if (a.h != b.h) return a.h < b.h;
  if (a.count != b.count) return a.count > b.count;
  return a.text < b.text;
}

// Among all size-min(n,|units|) subsets, the one whose sorted key sequence is
// smallest; returned sorted.
inline std::vector<Unit> BestSubset(const std::vector<Unit>& units, size_t n) {
  const size_t k = std::min(n, units.size());
  std::vector<Unit> best;
  bool have = false;
  std::vector<bool> pick(units.size(), false);
  std::fill(pick.begin(), pick.begin() + k, true);
  auto seq_less = [](const std::vector<Unit>& a, const std::vector<Unit>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), KeyLess);
  };
  do {
    std::vector<Unit> s;
    for (size_t i = 0; i < units.size(); ++i) {
      if (pick[i]) s.push_back(units[i]);
    }
    std::sort(s.begin(), s.end(), KeyLess);
    if (!have || seq_less(s, best)) {
      best = s;
      have = true;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

// Micro P/R/F1 recomputed from label sets.
struct Micro {
  double tp = 0, pred = 0, gold = 0;
  double P() const { return pred == 0 ? 0 : tp / pred; }
  double R() const { return gold == 0 ? 0 : tp / gold; }
  double F1() const { return P() + R() == 0 ? 0 : 2 * P() * R() / (P() + R()); }
};

}  // namespace metashape::testing::oracle

#endif  // METASHAPE_TESTS_SUPPORT_ORACLES_H_
