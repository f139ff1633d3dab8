#include "gapest/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace gapest::quad {

Result integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol) {
  if (!(b > a)) return {};
  Result r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 15, rel_tol, &r.error);
  return r;
}

}  // namespace gapest::quad
