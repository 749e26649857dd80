#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qtomo {

using Complex = std::complex<double>;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Mat4c = Eigen::Matrix4cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Version stamped into every file this library writes.
inline constexpr int kSchemaVersion = 1;

/// Highest operator degree handled by the moment algebra and solvers.
inline constexpr int kMaxOrder = 8;

// Error hierarchy. Everything thrown by the library derives from Error so the
// CLI can map it to exit code 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidArgument : Error {
    using Error::Error;
};
struct MissingData : Error {
    using Error::Error;
};
struct SingularConfiguration : Error {
    using Error::Error;
};
struct DataQualityError : Error {
    using Error::Error;
};
struct InternalConsistencyError : Error {
    using Error::Error;
};

/// A value with its (bootstrap) standard error; the error is 0 for exact sources.
struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

/// Wrap an angle into [0, 2pi).
inline double wrap_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0) t += kTwoPi;
    if (t >= kTwoPi) t -= kTwoPi;
    return t;
}

/// Smallest distance between two angles on the circle.
inline double angle_distance(double a, double b) {
    double d = std::fabs(wrap_angle(a) - wrap_angle(b));
    return std::min(d, kTwoPi - d);
}

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

inline double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

/// Short decimal rendering used in check names ("0.7854").
std::string format_number(double x, int digits = 4);

}  // namespace qtomo
