#include "rap/scoring.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rap {

ScoreReport score_scene(const SplatScene& scene, const MlpWeights& weights, const FeatureParams& params,
                        int histogram_bins) {
    auto t0 = std::chrono::steady_clock::now();
    ScoreReport report;
    report.method = "rap";
    FeatureMatrix features = compute_features(scene, params, &report.degenerate_neighbors);
    report.scores = mlp_forward(features, weights);
    report.histogram = score_histogram(report.scores, histogram_bins);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::vector<float> opacity_score(const SplatScene& scene) {
    return activate(scene).opacity;
}

namespace {

std::size_t retention_count(std::size_t n, double retention) {
    if (!(retention > 0.0) || retention > 1.0)
        throw invalid_argument("retention must be in (0, 1], got " + std::to_string(retention));
    // ceil with a tolerance so 0.4 * 1000 keeps 400, not 401.
    double raw = retention * static_cast<double>(n);
    auto kept = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::min(n, std::max<std::size_t>(n > 0 ? 1 : 0, kept));
}

}  // namespace

std::vector<bool> keep_mask_by_ratio(const std::vector<float>& scores, double retention) {
    std::size_t n = scores.size();
    std::size_t kept = retention_count(n, retention);
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    });
    std::vector<bool> mask(n, false);
    for (std::size_t i = 0; i < kept; ++i) mask[order[i]] = true;
    return mask;
}

SplatScene prune_by_ratio(const SplatScene& scene, const std::vector<float>& scores, double retention) {
    if (scores.size() != scene.count) throw invalid_argument("prune_by_ratio: score length mismatch");
    return select(scene, keep_mask_by_ratio(scores, retention));
}

std::vector<bool> keep_mask_by_threshold(const std::vector<float>& scores, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw invalid_argument("threshold must be in [0, 1]");
    std::vector<bool> mask(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) mask[i] = scores[i] >= tau;
    return mask;
}

SplatScene prune_by_threshold(const SplatScene& scene, const std::vector<float>& scores, double tau) {
    if (scores.size() != scene.count) throw invalid_argument("prune_by_threshold: score length mismatch");
    return select(scene, keep_mask_by_threshold(scores, tau));
}

std::vector<std::int64_t> score_histogram(const std::vector<float>& scores, int bins) {
    if (bins < 2) throw invalid_argument("score_histogram: need at least 2 bins");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(bins), 0);
    for (float s : scores) {
        int b = static_cast<int>(static_cast<double>(s) * bins);
        b = std::min(std::max(b, 0), bins - 1);
        counts[static_cast<std::size_t>(b)] += 1;
    }
    return counts;
}

std::optional<PruneDirective> in_loop_schedule(std::int64_t iteration, std::int64_t period,
                                               double drop_fraction) {
    if (iteration < 0) throw invalid_argument("in_loop_schedule: negative iteration");
    if (period <= 0) throw invalid_argument("in_loop_schedule: period must be positive");
    if (!(drop_fraction > 0.0 && drop_fraction < 1.0))
        throw invalid_argument("in_loop_schedule: drop fraction must be in (0, 1)");
    if (iteration > 0 && iteration % period == 0) return PruneDirective{drop_fraction};
    return std::nullopt;
}

void validate_curve(const RdCurve& curve, const std::string& context) {
    if (curve.points.size() < 2) throw invalid_argument(context + ": curve needs at least 2 points");
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (!(curve.points[i].rate > 0.0) || !std::isfinite(curve.points[i].psnr))
            throw invalid_argument(context + ": invalid point " + std::to_string(i));
        if (i > 0 && !(curve.points[i].rate > curve.points[i - 1].rate))
            throw invalid_argument(context + ": rates must be strictly increasing");
    }
}

namespace {

// Least-squares cubic fit of y over centered x, solved by Gaussian
// elimination on the normal equations in long double.
struct Cubic {
    long double c[4] = {0, 0, 0, 0};
    long double x0 = 0;

    long double eval(long double x) const {
        long double t = x - x0;
        return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
    }

    // Integral over [a, b].
    long double integral(long double a, long double b) const {
        auto anti = [&](long double x) {
            long double t = x - x0;
            return t * (c[0] + t * (c[1] / 2 + t * (c[2] / 3 + t * c[3] / 4)));
        };
        return anti(b) - anti(a);
    }
};

Cubic fit_cubic(const std::vector<double>& xs, const std::vector<double>& ys, double x0) {
    std::size_t n = xs.size();
    long double sx[7] = {0, 0, 0, 0, 0, 0, 0};
    long double sy[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        long double t = static_cast<long double>(xs[i]) - x0;
        long double p = 1.0L;
        long double y = ys[i];
        for (int k = 0; k < 7; ++k) {
            sx[k] += p;
            if (k < 4) sy[k] += y * p;
            p *= t;
        }
    }
    long double a[4][5];
    for (int r = 0; r < 4; ++r) {
        for (int cidx = 0; cidx < 4; ++cidx) a[r][cidx] = sx[r + cidx];
        a[r][4] = sy[r];
    }
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(static_cast<double>(a[r][col])) > std::abs(static_cast<double>(a[piv][col]))) piv = r;
        for (int k = 0; k < 5; ++k) std::swap(a[col][k], a[piv][k]);
        if (a[col][col] == 0.0L) throw eval_error("bd_rate: singular curve fit");
        for (int r = 0; r < 4; ++r) {
            if (r == col) continue;
            long double f = a[r][col] / a[col][col];
            for (int k = col; k < 5; ++k) a[r][k] -= f * a[col][k];
        }
    }
    Cubic cfit;
    cfit.x0 = x0;
    for (int k = 0; k < 4; ++k) cfit.c[k] = a[k][4] / a[k][k];
    return cfit;
}

}  // namespace

double bd_rate(const RdCurve& test, const RdCurve& anchor) {
    validate_curve(test, "bd_rate test curve");
    validate_curve(anchor, "bd_rate anchor curve");
    if (test.points.size() < 4 || anchor.points.size() < 4)
        throw invalid_argument("bd_rate: each curve needs at least 4 points");

    auto extract = [](const RdCurve& c, std::vector<double>& xs, std::vector<double>& ys) {
        for (const RdPoint& p : c.points) {
            xs.push_back(p.psnr);
            ys.push_back(std::log10(p.rate));
        }
    };
    std::vector<double> xt, yt, xa, ya;
    extract(test, xt, yt);
    extract(anchor, xa, ya);

    double lo = std::max(*std::min_element(xt.begin(), xt.end()), *std::min_element(xa.begin(), xa.end()));
    double hi = std::min(*std::max_element(xt.begin(), xt.end()), *std::max_element(xa.begin(), xa.end()));
    if (!(hi > lo)) throw eval_error("bd_rate: curves have no overlapping PSNR range");

    double x0 = 0.5 * (lo + hi);
    Cubic ft = fit_cubic(xt, yt, x0);
    Cubic fa = fit_cubic(xa, ya, x0);
    long double delta = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (static_cast<long double>(hi) - lo);
    return 100.0 * (std::pow(10.0, static_cast<double>(delta)) - 1.0);
}

void save_curve_csv(const RdCurve& curve, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << "rate,psnr\n";
    char buf[80];
    for (const RdPoint& p : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", p.rate, p.psnr);
        f << buf;
    }
    if (!f) throw io_error("write failed: " + path);
}

RdCurve load_curve_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open file: " + path);
    RdCurve curve;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (first && line.rfind("rate", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        std::istringstream ls(line);
        std::string a, b;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b))
            throw format_error("bad curve row in " + path + ": " + line);
        RdPoint p;
        try {
            p.rate = std::stod(a);
            p.psnr = std::stod(b);
        } catch (const std::exception&) {
            throw format_error("bad curve row in " + path + ": " + line);
        }
        curve.points.push_back(p);
    }
    validate_curve(curve, path);
    return curve;
}

namespace {

void write_raps_header(std::ofstream& f, std::uint64_t n) {
    f.write("RAPS", 4);
    std::uint32_t version = 1;
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&n), 8);
}

}  // namespace

void save_scores(const std::vector<float>& scores, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    write_raps_header(f, scores.size());
    f.write(reinterpret_cast<const char*>(scores.data()), static_cast<std::streamsize>(scores.size() * 4));
    if (!f) throw io_error("write failed: " + path);
}

std::vector<float> load_scores(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open file: " + path);
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t n = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&n), 8);
    if (!f || std::memcmp(magic, "RAPS", 4) != 0) throw format_error("not a RAPS score file: " + path);
    if (version != 1) throw format_error("unsupported score file version: " + path);
    std::vector<float> scores(n);
    f.read(reinterpret_cast<char*>(scores.data()), static_cast<std::streamsize>(n * 4));
    if (!f) throw format_error("score file truncated: " + path);
    return scores;
}

}  // namespace rap
