#include "anomap/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "anomap/error.hpp"

namespace anomap {

const std::array<std::string, 16>& FeatureVector::names() {
    static const std::array<std::string, 16> kNames = {
        "energy",   "minimum",  "maximum",    "p10",      "p90",     "mean",
        "median",   "iqr",      "range",      "mad",      "robust_mad", "variance",
        "skewness", "kurtosis", "entropy",    "uniformity"};
    return kNames;
}

double percentile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("percentile_sorted: empty sample");
    if (sorted.size() == 1) return sorted[0];
    double rank = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(rank);
    lo = std::min(lo, sorted.size() - 2);
    double frac = rank - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

FeatureVector first_order_stats(const Tensor& residue, int bins) {
    const std::size_t n = residue.size();
    if (n == 0) throw std::invalid_argument("first_order_stats: empty residue");
    if (bins < 1) throw std::invalid_argument("first_order_stats: bins must be >= 1");
    const double dn = static_cast<double>(n);

    std::vector<double> sorted = residue.data;
    std::sort(sorted.begin(), sorted.end());

    double sum = 0.0, energy = 0.0;
    for (double x : residue.data) {
        sum += x;
        energy += x * x;
    }
    const double mean = sum / dn;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
    for (double x : residue.data) {
        double d = x - mean;
        double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        mad += std::abs(d);
    }
    m2 /= dn;
    m3 /= dn;
    m4 /= dn;
    mad /= dn;

    const double p10 = percentile_sorted(sorted, 0.10);
    const double p90 = percentile_sorted(sorted, 0.90);

    // Robust spread: values inside [p10, p90], deviations from that subset's
    // own mean. Empty subset (possible for tiny n) contributes 0.
    double rsum = 0.0;
    std::size_t rcount = 0;
    for (double x : residue.data) {
        if (x >= p10 && x <= p90) {
            rsum += x;
            ++rcount;
        }
    }
    double robust_mad = 0.0;
    if (rcount > 0) {
        double rmean = rsum / static_cast<double>(rcount);
        for (double x : residue.data)
            if (x >= p10 && x <= p90) robust_mad += std::abs(x - rmean);
        robust_mad /= static_cast<double>(rcount);
    }

    double skew = 0.0, kurt = 0.0;
    if (m2 > 0.0) {
        skew = m3 / std::pow(m2, 1.5);
        kurt = m4 / (m2 * m2);
    }

    std::vector<double> p(static_cast<std::size_t>(bins), 0.0);
    for (double x : residue.data) {
        double c = std::clamp(x, 0.0, 1.0);
        int b = std::min(bins - 1, static_cast<int>(c * bins));
        p[static_cast<std::size_t>(b)] += 1.0;
    }
    double entropy = 0.0, uniformity = 0.0;
    for (double& pi : p) {
        pi /= dn;
        if (pi > 0.0) entropy -= pi * std::log(pi);
        uniformity += pi * pi;
    }

    FeatureVector f;
    f.v = {energy,
           sorted.front(),
           sorted.back(),
           p10,
           p90,
           mean,
           percentile_sorted(sorted, 0.50),
           percentile_sorted(sorted, 0.75) - percentile_sorted(sorted, 0.25),
           sorted.back() - sorted.front(),
           mad,
           robust_mad,
           m2,
           skew,
           kurt,
           entropy,
           uniformity};
    return f;
}

FeatureStats compute_feature_stats(const std::vector<FeatureVector>& train) {
    if (train.empty()) throw std::invalid_argument("compute_feature_stats: no training vectors");
    FeatureStats s;
    const double n = static_cast<double>(train.size());
    for (const FeatureVector& f : train)
        for (int d = 0; d < FeatureVector::kDim; ++d) s.mean[static_cast<std::size_t>(d)] += f[d];
    for (double& m : s.mean) m /= n;
    for (const FeatureVector& f : train)
        for (int d = 0; d < FeatureVector::kDim; ++d) {
            double dev = f[d] - s.mean[static_cast<std::size_t>(d)];
            s.sd[static_cast<std::size_t>(d)] += dev * dev;
        }
    for (int d = 0; d < FeatureVector::kDim; ++d) {
        auto i = static_cast<std::size_t>(d);
        s.sd[i] = std::sqrt(s.sd[i] / n);
        // Near-zero spread would explode after division; center only.
        s.degenerate[i] = s.sd[i] < 1e-12;
    }
    return s;
}

FeatureVector standardize(const FeatureVector& f, const FeatureStats& s) {
    FeatureVector out;
    for (int d = 0; d < FeatureVector::kDim; ++d) {
        auto i = static_cast<std::size_t>(d);
        double c = f[d] - s.mean[i];
        out[d] = s.degenerate[i] ? c : c / s.sd[i];
    }
    return out;
}

std::vector<FeatureVector> standardize(const std::vector<FeatureVector>& fs,
                                       const FeatureStats& s) {
    std::vector<FeatureVector> out;
    out.reserve(fs.size());
    for (const FeatureVector& f : fs) out.push_back(standardize(f, s));
    return out;
}

void write_feature_csv(const std::string& path, const std::vector<FeatureRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "image_id,patch_id";
    for (const std::string& name : FeatureVector::names()) out << ',' << name;
    out << '\n';
    out.precision(17);
    for (const FeatureRow& r : rows) {
        out << r.image_id << ',' << r.patch_id;
        for (int d = 0; d < FeatureVector::kDim; ++d) out << ',' << r.features[d];
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace anomap
