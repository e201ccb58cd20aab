#include "r4style/solver.hpp"

#include <cmath>
#include <numeric>

namespace r4style {

RowSplit split_rows(Eigen::Index k, double test_fraction, std::uint64_t seed) {
  if (k < 2) throw ValidationError("need at least 2 rows to split into train and test");
  if (!(test_fraction > 0 && test_fraction < 1)) throw ValidationError("test fraction must lie in (0, 1)");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(perm.begin(), perm.end());
  auto n_test = static_cast<Eigen::Index>(std::llround(static_cast<double>(k) * test_fraction));
  n_test = std::clamp<Eigen::Index>(n_test, 1, k - 1);

  RowSplit split;
  split.test.assign(perm.begin(), perm.begin() + n_test);
  split.train.assign(perm.begin() + n_test, perm.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

Eigen::Index choose_rank(const SweepResult& sweep, double rel_tol) {
  if (sweep.points.empty()) throw ValidationError("empty sweep");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : sweep.points) best = std::min(best, p.test_mse);
  for (const auto& p : sweep.points)
    if (p.test_mse <= best + rel_tol * std::abs(best)) return p.rank;
  return sweep.points.back().rank;
}

}  // namespace r4style
