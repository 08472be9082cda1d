#include "markup/stats.hpp"

#include <algorithm>
#include <cmath>

#include "markup/errors.hpp"

namespace markup::stats {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// AS 241, PPND16.
double normal_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0)) throw InvalidParams("normal_quantile needs p in (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                    3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                  4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                  2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                  5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

double mean(std::span<const double> xs) {
    double sum = 0.0;
    for (double v : xs) sum += v;
    return sum / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    const double mu = mean(xs);
    double ss = 0.0;
    for (double v : xs) ss += (v - mu) * (v - mu);
    return ss / static_cast<double>(xs.size() - 1);
}

double sample_sd(std::span<const double> xs) { return std::sqrt(sample_variance(xs)); }

namespace {

double poly(const double* c, int n, double x) {
    double value = c[0];
    double xn = 1.0;
    for (int i = 1; i < n; ++i) {
        xn *= x;
        value += c[i] * xn;
    }
    return value;
}

}  // namespace

ShapiroWilkResult shapiro_wilk(std::span<const double> sample) {
    const auto n = static_cast<int>(sample.size());
    if (n < 3 || n > 5000)
        throw SizeOutOfRange("shapiro_wilk supports 3 <= n <= 5000, got " + std::to_string(n));

    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    if (!(x.back() - x.front() > 0.0)) throw ConstantSeries("shapiro_wilk needs a non-constant series");

    // Expected normal order statistics via Blom scores, then Royston's
    // polynomial corrections to the two outermost coefficients.
    std::vector<double> m(n), a(n);
    double ssq_m = 0.0;
    for (int i = 0; i < n; ++i) {
        m[i] = normal_quantile((i + 1 - 0.375) / (n + 0.25));
        ssq_m += m[i] * m[i];
    }

    static const double c1[6] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static const double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};

    if (n == 3) {
        a[0] = -std::sqrt(0.5);
        a[1] = 0.0;
        a[2] = std::sqrt(0.5);
    } else {
        const double rsn = 1.0 / std::sqrt(static_cast<double>(n));
        const double norm = std::sqrt(ssq_m);
        const double an = m[n - 1] / norm + poly(c1, 6, rsn);
        if (n > 5) {
            const double an1 = m[n - 2] / norm + poly(c2, 6, rsn);
            const double phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                               (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
            const double root_phi = std::sqrt(phi);
            for (int i = 2; i < n - 2; ++i) a[i] = m[i] / root_phi;
            a[n - 1] = an;
            a[n - 2] = an1;
            a[0] = -an;
            a[1] = -an1;
        } else {
            const double phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
            const double root_phi = std::sqrt(phi);
            for (int i = 1; i < n - 1; ++i) a[i] = m[i] / root_phi;
            a[n - 1] = an;
            a[0] = -an;
        }
    }

    const double xbar = mean(x);
    double sax = 0.0, ssx = 0.0;
    for (int i = 0; i < n; ++i) {
        sax += a[i] * x[i];
        ssx += (x[i] - xbar) * (x[i] - xbar);
    }
    if (!(ssx > 0.0)) throw ConstantSeries("shapiro_wilk needs a non-constant series");
    const double w = sax * sax / ssx;
    const double w1 = std::max(1.0 - w, 1e-99);

    ShapiroWilkResult out;
    out.w = w;
    if (n == 3) {
        // Exact small-sample law.
        const double pi6 = 6.0 / std::acos(-1.0);
        const double stqr = std::asin(std::sqrt(0.75));
        out.p_value = std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0);
        return out;
    }

    static const double c3[4] = {0.5440, -0.39978, 0.025054, -6.714e-4};
    static const double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static const double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static const double c6[3] = {-0.4803, -0.082676, 0.0030302};
    static const double gc[2] = {-2.273, 0.459};

    double z;
    if (n <= 11) {
        const double an = static_cast<double>(n);
        const double gamma = poly(gc, 2, an);
        const double y = std::log(w1);
        if (y >= gamma) {
            out.p_value = 1e-19;
            return out;
        }
        const double v = -std::log(gamma - y);
        z = (v - poly(c3, 4, an)) / std::exp(poly(c4, 4, an));
    } else {
        const double log_n = std::log(static_cast<double>(n));
        z = (std::log(w1) - poly(c5, 4, log_n)) / std::exp(poly(c6, 3, log_n));
    }
    out.p_value = normal_cdf(-z);
    return out;
}

std::vector<std::pair<double, double>> qq_points(std::span<const double> sample) {
    const auto n = static_cast<int>(sample.size());
    if (n < 3) throw InsufficientData("qq_points needs at least 3 observations");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    std::vector<std::pair<double, double>> pairs(n);
    for (int i = 0; i < n; ++i)
        pairs[i] = {normal_quantile((i + 1 - 0.375) / (n + 0.25)), x[i]};
    return pairs;
}

namespace {

// Median of x[lo, hi) for sorted x.
double median_of(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
    const std::size_t len = hi - lo;
    const std::size_t mid = lo + len / 2;
    return len % 2 == 1 ? x[mid] : 0.5 * (x[mid - 1] + x[mid]);
}

}  // namespace

BoxplotStats boxplot_stats(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 5) throw InsufficientData("boxplot_stats needs at least 5 observations");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());

    BoxplotStats out;
    out.median = median_of(x, 0, n);
    const std::size_t half = n / 2;
    // Tukey hinges: odd n includes the median in both halves.
    out.q1 = median_of(x, 0, n % 2 == 1 ? half + 1 : half);
    out.q3 = median_of(x, half, n);
    out.iqr = out.q3 - out.q1;

    const double lo_fence = out.q1 - 1.5 * out.iqr;
    const double hi_fence = out.q3 + 1.5 * out.iqr;
    out.whisker_lo = x.back();
    out.whisker_hi = x.front();
    for (double v : x) {
        if (v >= lo_fence && v <= hi_fence) {
            out.whisker_lo = std::min(out.whisker_lo, v);
            out.whisker_hi = std::max(out.whisker_hi, v);
        } else {
            out.outliers.push_back(v);
        }
    }
    return out;
}

}  // namespace markup::stats
