#include "triblock/grid.hpp"

#include <numeric>

#include "triblock/error.hpp"

namespace triblock {

double Grid::sum() const {
  // pairwise accumulation keeps mass sums stable on large grids
  std::vector<double> buf(v);
  std::size_t len = buf.size();
  if (len == 0) return 0.0;
  while (len > 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) buf[k] = buf[2 * k] + buf[2 * k + 1];
    if (len % 2 == 1) {
      buf[half] = buf[len - 1];
      len = half + 1;
    } else {
      len = half;
    }
  }
  return buf[0];
}

double dot(const Grid& a, const Grid& b) {
  if (a.n != b.n) fail(ErrorKind::invalid_input, "grid size mismatch");
  Grid prod(a.n);
  for (std::size_t k = 0; k < a.v.size(); ++k) prod.v[k] = a.v[k] * b.v[k];
  return prod.sum() / static_cast<double>(a.v.size());
}

}  // namespace triblock
