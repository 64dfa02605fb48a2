#pragma once
// Test-only quadrature oracle: adaptive Simpson, independent of the GL4
// composite rule used by the library.
#include <cmath>
#include <functional>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b)
{
    double c = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int depth = 24)
{
    double c = 0.5 * (a + b);
    double whole = simpson(f, a, b);
    double left = simpson(f, a, c), right = simpson(f, c, b);
    if(depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, c, tol / 2, depth - 1)
         + adaptive_simpson(f, c, b, tol / 2, depth - 1);
}

} // namespace oracle
