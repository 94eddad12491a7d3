#include "jmmle/distributions.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "jmmle/errors.hpp"

namespace jmmle {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double normal_quantile(double prob) {
    require(prob > 0.0 && prob < 1.0, ErrorKind::InvalidArgument,
            "normal quantile needs 0 < p < 1, got " + std::to_string(prob));
    return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

double normal_upper_quantile(double tail) {
    require(tail > 0.0 && tail < 1.0, ErrorKind::InvalidArgument,
            "normal tail quantile needs 0 < p < 1, got " + std::to_string(tail));
    return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>(), tail));
}

double chi_squared_quantile(double df, double prob) {
    require(df > 0.0, ErrorKind::InvalidArgument, "chi-square needs df > 0");
    require(prob > 0.0 && prob < 1.0, ErrorKind::InvalidArgument, "chi-square quantile needs 0 < p < 1");
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), prob);
}

double chi_squared_cdf(double df, double x) {
    require(df > 0.0, ErrorKind::InvalidArgument, "chi-square needs df > 0");
    if (x <= 0.0) return 0.0;
    return boost::math::cdf(boost::math::chi_squared_distribution<double>(df), x);
}

}  // namespace jmmle
