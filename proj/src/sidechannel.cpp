#include "chypnosim/sidechannel.hpp"

#include "chypnosim/errors.hpp"
#include "chypnosim/parallel.hpp"
#include "chypnosim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace chypnosim {

void LeakageModel::validate() const {
    const std::size_t m = points();
    if (m < 100)
        throw ConfigError("leakage.points", "need at least 100 frequency points");
    if (baseline.size() != m)
        throw ConfigError("leakage.baseline", "length differs from the frequency grid");
    if (bit_signatures.size() != kLeakBits || bumps.size() != kLeakBits)
        throw ConfigError("leakage.bit_signatures", "need one signature per leaked bit");
    for (std::size_t j = 0; j < kLeakBits; ++j) {
        if (bit_signatures[j].size() != m)
            throw ConfigError("leakage.bit_signatures", "signature length differs from grid");
        const bool has_bump = std::any_of(bumps[j].begin(), bumps[j].end(),
                                          [](const Bump &b) { return b.amplitude > 0; });
        if (!has_bump)
            throw ConfigError("leakage.bumps", "bit " + std::to_string(j) + " has no bump");
    }
    if (!(noise_sigma >= 0))
        throw ConfigError("leakage.noise_sigma", "must be >= 0");
    if (!support.empty()) {
        if (support.size() != kLeakBits)
            throw ConfigError("leakage.support", "need one range per leaked bit");
        for (std::size_t j = 0; j < kLeakBits; ++j) {
            const auto [lo, hi] = support[j];
            if (lo > hi || hi > m)
                throw ConfigError("leakage.support", "range outside the grid");
            for (std::size_t i = 0; i < m; ++i)
                if ((i < lo || i >= hi) && bit_signatures[j][i] != 0.0)
                    throw ConfigError("leakage.support", "signature non-zero outside its range");
        }
    }
}

LeakageModel LeakageModel::make_default(std::uint64_t seed, const LeakageParams &lp) {
    if (lp.points < 100)
        throw ConfigError("leakage.points", "need at least 100 frequency points");
    if (lp.bumps_per_bit < 1)
        throw ConfigError("leakage.bumps_per_bit", "must be >= 1");
    if (!(lp.amplitude > 0) || !(lp.width > 0))
        throw ConfigError("leakage.amplitude", "bump amplitude and width must be > 0");
    if (!(lp.f_hi > lp.f_lo))
        throw ConfigError("leakage.f_hi", "must exceed f_lo");

    LeakageModel m;
    const std::size_t n = lp.points;
    const double span = static_cast<double>(n - 1);
    m.noise_sigma = lp.noise_sigma;
    m.freq_grid.resize(n);
    m.baseline.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / span;
        m.freq_grid[i] = lp.f_lo + (lp.f_hi - lp.f_lo) * x;
        m.baseline[i] = -0.8 + 0.3 * std::sin(2 * std::numbers::pi * 1.5 * x) +
                        0.1 * std::cos(2 * std::numbers::pi * 4.0 * x);
    }

    auto gen = make_stream(seed, streams::leakage_model, 0);
    const double margin = 3 * lp.width;
    std::uniform_real_distribution<double> where(margin, span - margin);
    std::vector<double> taken;
    m.bumps.resize(kLeakBits);
    m.bit_signatures.assign(kLeakBits, std::vector<double>(n, 0.0));
    m.support.assign(kLeakBits, {n, 0});
    const double reach = 5 * lp.width;
    for (std::size_t j = 0; j < kLeakBits; ++j) {
        for (std::size_t b = 0; b < lp.bumps_per_bit; ++b) {
            double c = 0;
            int attempts = 0;
            do {
                if (++attempts > 100000)
                    throw ConfigError("leakage.min_separation",
                                      "cannot place bumps that far apart on this grid");
                c = where(gen);
            } while (std::any_of(taken.begin(), taken.end(), [&](double t) {
                return std::abs(t - c) < lp.min_separation;
            }));
            taken.push_back(c);
            m.bumps[j].push_back({c, lp.width, lp.amplitude});
            const auto lo = static_cast<std::size_t>(std::max(0.0, std::ceil(c - reach)));
            const auto hi = static_cast<std::size_t>(std::min(span, std::floor(c + reach)));
            m.support[j].first = std::min(m.support[j].first, lo);
            m.support[j].second = std::max(m.support[j].second, hi + 1);
            for (std::size_t i = lo; i <= hi; ++i) {
                const double z = (static_cast<double>(i) - c) / lp.width;
                m.bit_signatures[j][i] += lp.amplitude * std::exp(-0.5 * z * z);
            }
        }
    }
    return m;
}

std::vector<double> synthesize_trace(const LeakageModel &m, BitMask bits, unsigned n_avg,
                                     std::mt19937_64 &rng) {
    if (n_avg < 1)
        throw PreconditionError("n_avg must be >= 1");
    std::vector<double> t = m.baseline;
    const bool sparse = m.support.size() == kLeakBits;
    for (std::size_t j = 0; j < kLeakBits; ++j) {
        if (!((bits >> j) & 1u))
            continue;
        const std::size_t lo = sparse ? m.support[j].first : 0;
        const std::size_t hi = sparse ? m.support[j].second : t.size();
        for (std::size_t i = lo; i < hi; ++i)
            t[i] += m.bit_signatures[j][i];
    }
    if (m.noise_sigma > 0) {
        std::normal_distribution<double> noise(0.0, m.noise_sigma / std::sqrt(double(n_avg)));
        for (auto &x : t)
            x += noise(rng);
    }
    return t;
}

TraceSet::TraceSet(std::size_t points, unsigned n_avg) : points_(points), n_avg_(n_avg) {
    if (n_avg < 1)
        throw PreconditionError("n_avg must be >= 1");
}

void TraceSet::add(std::span<const double> trace, BitMask labels) {
    if (trace.size() != points_)
        throw PreconditionError("trace length differs from the set");
    traces_.insert(traces_.end(), trace.begin(), trace.end());
    labels_.push_back(labels & ((1u << kLeakBits) - 1));
}

namespace {

BitMask draw_labels(std::mt19937_64 &gen) {
    return static_cast<BitMask>(gen() & ((1u << kLeakBits) - 1));
}

std::vector<double> profiling_trace(const LeakageModel &m, unsigned n_avg, std::uint64_t seed,
                                    std::size_t i, BitMask &labels) {
    auto gen = make_stream(seed, streams::profiling_trace, i);
    labels = draw_labels(gen);
    return synthesize_trace(m, labels, n_avg, gen);
}

struct ClassMoments {
    std::vector<double> mu0, mu1, var0, var1;
};

ClassMoments moments(const TraceSet &ts, std::size_t bit) {
    if (bit >= kLeakBits)
        throw RangeError("bit index out of range");
    const std::size_t m = ts.points();
    ClassMoments c{std::vector<double>(m), std::vector<double>(m), std::vector<double>(m),
                   std::vector<double>(m)};
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < ts.size(); ++i)
        n1 += ts.label(i, bit);
    const std::size_t n0 = ts.size() - n1;
    if (n0 == 0 || n1 == 0)
        throw PreconditionError("both classes must be non-empty for bit " + std::to_string(bit));
    for (std::size_t i = 0; i < ts.size(); ++i) {
        auto &mu = ts.label(i, bit) ? c.mu1 : c.mu0;
        const auto r = ts.row(i);
        for (std::size_t f = 0; f < m; ++f)
            mu[f] += r[f];
    }
    for (std::size_t f = 0; f < m; ++f) {
        c.mu0[f] /= double(n0);
        c.mu1[f] /= double(n1);
    }
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const bool one = ts.label(i, bit);
        auto &var = one ? c.var1 : c.var0;
        const auto &mu = one ? c.mu1 : c.mu0;
        const auto r = ts.row(i);
        for (std::size_t f = 0; f < m; ++f) {
            const double d = r[f] - mu[f];
            var[f] += d * d;
        }
    }
    for (std::size_t f = 0; f < m; ++f) {
        c.var0[f] /= double(n0);
        c.var1[f] /= double(n1);
    }
    return c;
}

double snr_value(double mu0, double mu1, double var0, double var1) {
    const double d = mu0 - mu1;
    return d * d / (0.5 * (var0 + var1) + SnrCurve::epsilon);
}

} // namespace

TraceSet TraceSet::synthesize(const LeakageModel &m, std::size_t n, unsigned n_avg,
                              std::uint64_t seed) {
    TraceSet ts(m.points(), n_avg);
    std::vector<std::vector<double>> rows(n);
    std::vector<BitMask> labels(n);
    parallel_for(n, [&](std::size_t i) { rows[i] = profiling_trace(m, n_avg, seed, i, labels[i]); });
    for (std::size_t i = 0; i < n; ++i)
        ts.add(rows[i], labels[i]);
    return ts;
}

SnrCurve compute_snr(const TraceSet &ts, std::size_t bit) {
    const auto c = moments(ts, bit);
    SnrCurve s;
    s.values.resize(ts.points());
    for (std::size_t f = 0; f < ts.points(); ++f)
        s.values[f] = snr_value(c.mu0[f], c.mu1[f], c.var0[f], c.var1[f]);
    return s;
}

std::vector<double> difference_of_means(const TraceSet &ts, std::size_t bit) {
    const auto c = moments(ts, bit);
    std::vector<double> dm(ts.points());
    for (std::size_t f = 0; f < dm.size(); ++f)
        dm[f] = c.mu0[f] - c.mu1[f];
    return dm;
}

std::vector<std::size_t> select_pois(const SnrCurve &s, double alpha, std::size_t d_min,
                                     std::size_t k) {
    if (k < 1 || d_min < 1)
        throw PreconditionError("select_pois needs k >= 1 and d_min >= 1");
    const auto &v = s.values;
    if (v.empty())
        return {};
    const double peak = *std::max_element(v.begin(), v.end());
    if (!(peak > 0))
        return {};
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const bool left = i == 0 || v[i] >= v[i - 1];
        const bool right = i + 1 == v.size() || v[i] >= v[i + 1];
        if (left && right && v[i] >= alpha * peak)
            cand.push_back(i);
    }
    // Descending SNR; ties go to the lower index.
    std::stable_sort(cand.begin(), cand.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    std::vector<std::size_t> out;
    for (auto c : cand) {
        if (out.size() == k)
            break;
        const bool clear = std::all_of(out.begin(), out.end(), [&](std::size_t o) {
            return (c > o ? c - o : o - c) >= d_min;
        });
        if (clear)
            out.push_back(c);
    }
    return out;
}

const char *to_string(ClassifierKind k) {
    return k == ClassifierKind::GaussianLda ? "lda" : "stumps";
}

std::optional<ClassifierKind> parse_classifier(const std::string &name) {
    if (name == "lda" || name == "gaussian_lda" || name == "GAUSSIAN_LDA")
        return ClassifierKind::GaussianLda;
    if (name == "stumps" || name == "rf" || name == "stump_ensemble" || name == "STUMP_ENSEMBLE")
        return ClassifierKind::StumpEnsemble;
    return std::nullopt;
}

Template build_template_from_columns(std::span<const double> values,
                                     const std::vector<bool> &labels, std::size_t bit,
                                     const std::vector<std::size_t> &pois, ClassifierKind kind,
                                     const TemplateOptions &opt) {
    const std::size_t k = pois.size();
    if (k == 0)
        throw PreconditionError("template needs at least one POI");
    const std::size_t n = labels.size();
    if (values.size() != n * k)
        throw PreconditionError("column block does not match labels x POIs");
    std::size_t n1 = std::count(labels.begin(), labels.end(), true);
    const std::size_t n0 = n - n1;
    if (n0 == 0 || n1 == 0)
        throw PreconditionError("both classes must be non-empty for bit " + std::to_string(bit));

    Template t;
    t.bit = bit;
    t.kind = kind;
    t.pois = pois;
    t.mu0.assign(k, 0.0);
    t.mu1.assign(k, 0.0);
    t.var.assign(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto &mu = labels[i] ? t.mu1 : t.mu0;
        for (std::size_t p = 0; p < k; ++p)
            mu[p] += values[i * k + p];
    }
    for (std::size_t p = 0; p < k; ++p) {
        t.mu0[p] /= double(n0);
        t.mu1[p] /= double(n1);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto &mu = labels[i] ? t.mu1 : t.mu0;
        for (std::size_t p = 0; p < k; ++p) {
            const double d = values[i * k + p] - mu[p];
            t.var[p] += d * d;
        }
    }
    for (auto &v : t.var)
        v = std::max(v / double(n), SnrCurve::epsilon);

    if (kind == ClassifierKind::StumpEnsemble) {
        if (opt.n_stumps < 1)
            throw PreconditionError("stump ensemble needs at least one stump");
        auto gen = make_stream(opt.seed, streams::stump, bit);
        std::uniform_int_distribution<std::size_t> pick_poi(0, k - 1);
        // Multiply-shift index draws, two per engine output; bias below 2^-32 * n.
        std::uint64_t spare = 0;
        bool have_spare = false;
        const auto pick_row = [&] {
            std::uint64_t half;
            if (have_spare) {
                half = spare;
            } else {
                const std::uint64_t x = gen();
                half = x >> 32;
                spare = x & 0xffffffffULL;
            }
            have_spare = !have_spare;
            return static_cast<std::size_t>((half * static_cast<std::uint64_t>(n)) >> 32);
        };
        if (n >= (std::size_t{1} << 32))
            throw PreconditionError("training set too large for the stump sampler");
        std::vector<double> column(n);
        std::vector<std::uint8_t> cls(n);
        for (std::size_t i = 0; i < n; ++i)
            cls[i] = labels[i];
        for (std::size_t s = 0; s < opt.n_stumps; ++s) {
            const std::size_t p = pick_poi(gen);
            for (std::size_t i = 0; i < n; ++i)
                column[i] = values[i * k + p];
            double sum[2] = {0, 0};
            std::size_t cnt[2] = {0, 0};
            for (std::size_t r = 0; r < n; ++r) {
                const std::size_t i = pick_row();
                sum[cls[i]] += column[i];
                ++cnt[cls[i]];
            }
            const double m0 = cnt[0] ? sum[0] / double(cnt[0]) : t.mu0[p];
            const double m1 = cnt[1] ? sum[1] / double(cnt[1]) : t.mu1[p];
            t.stumps.push_back({p, 0.5 * (m0 + m1), m1 > m0});
        }
    }
    return t;
}

Template build_template(const TraceSet &ts, std::size_t bit, const std::vector<std::size_t> &pois,
                        ClassifierKind kind, const TemplateOptions &opt) {
    if (bit >= kLeakBits)
        throw RangeError("bit index out of range");
    for (auto p : pois)
        if (p >= ts.points())
            throw RangeError("POI outside the trace");
    std::vector<double> cols(ts.size() * pois.size());
    std::vector<bool> labels(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        labels[i] = ts.label(i, bit);
        const auto r = ts.row(i);
        for (std::size_t p = 0; p < pois.size(); ++p)
            cols[i * pois.size() + p] = r[pois[p]];
    }
    return build_template_from_columns(cols, labels, bit, pois, kind, opt);
}

double lda_discriminant(const Template &t, std::span<const double> trace) {
    double s = 0.0;
    for (std::size_t p = 0; p < t.pois.size(); ++p) {
        const double x = trace[t.pois[p]];
        s += (t.mu1[p] - t.mu0[p]) * (x - 0.5 * (t.mu0[p] + t.mu1[p])) / t.var[p];
    }
    return s;
}

BitGuess classify_bit(const Template &t, std::span<const double> trace) {
    for (auto p : t.pois)
        if (p >= trace.size())
            throw PreconditionError("trace shorter than the template's POIs");
    if (t.kind == ClassifierKind::GaussianLda) {
        const double llr = lda_discriminant(t, trace);
        return {llr > 0, 1.0 / (1.0 + std::exp(-std::abs(llr)))};
    }
    std::size_t ones = 0;
    for (const auto &s : t.stumps) {
        const double x = trace[t.pois[s.poi]];
        const bool vote = s.above_is_one ? x > s.threshold : x < s.threshold;
        ones += vote;
    }
    const std::size_t total = t.stumps.size();
    const std::size_t zeros = total - ones;
    return {ones > zeros, double(std::max(ones, zeros)) / double(total)};
}

std::uint8_t recover_key_byte(const std::array<std::uint8_t, 3> &shares) {
    return static_cast<std::uint8_t>(shares[0] ^ shares[1] ^ shares[2]);
}

namespace {

/// Streaming per-class sums, shifted by a reference trace for stability.
struct StreamStats {
    explicit StreamStats(std::size_t m)
        : sum(m), sumsq(m), sum1(kLeakBits, std::vector<double>(m)),
          sumsq1(kLeakBits, std::vector<double>(m)) {}
    std::size_t n = 0;
    std::array<std::size_t, kLeakBits> n1{};
    std::vector<double> sum, sumsq;
    std::vector<std::vector<double>> sum1, sumsq1;

    void add(const std::vector<double> &y, BitMask labels) {
        ++n;
        for (std::size_t f = 0; f < y.size(); ++f) {
            sum[f] += y[f];
            sumsq[f] += y[f] * y[f];
        }
        for (std::size_t j = 0; j < kLeakBits; ++j) {
            if (!((labels >> j) & 1u))
                continue;
            ++n1[j];
            auto &s = sum1[j];
            auto &q = sumsq1[j];
            for (std::size_t f = 0; f < y.size(); ++f) {
                s[f] += y[f];
                q[f] += y[f] * y[f];
            }
        }
    }
    void merge(const StreamStats &o) {
        n += o.n;
        for (std::size_t f = 0; f < sum.size(); ++f) {
            sum[f] += o.sum[f];
            sumsq[f] += o.sumsq[f];
        }
        for (std::size_t j = 0; j < kLeakBits; ++j) {
            n1[j] += o.n1[j];
            for (std::size_t f = 0; f < sum.size(); ++f) {
                sum1[j][f] += o.sum1[j][f];
                sumsq1[j][f] += o.sumsq1[j][f];
            }
        }
    }
    std::vector<double> snr(std::size_t j) const {
        const double c1 = double(n1[j]);
        const double c0 = double(n - n1[j]);
        std::vector<double> out(sum.size());
        for (std::size_t f = 0; f < sum.size(); ++f) {
            const double m1 = sum1[j][f] / c1;
            const double m0 = (sum[f] - sum1[j][f]) / c0;
            const double v1 = std::max(0.0, sumsq1[j][f] / c1 - m1 * m1);
            const double v0 = std::max(0.0, (sumsq[f] - sumsq1[j][f]) / c0 - m0 * m0);
            out[f] = snr_value(m0, m1, v0, v1);
        }
        return out;
    }
};

} // namespace

std::vector<AttackReport> run_attack_multi(const LeakageModel &m,
                                           const std::array<std::uint8_t, 3> &shares,
                                           std::size_t n_p, unsigned n_avg,
                                           const std::vector<ClassifierKind> &kinds,
                                           std::uint64_t seed, const AttackOptions &opt) {
    if (n_p < 100)
        throw PreconditionError("n_p must be >= 100");
    if (n_avg < 1)
        throw PreconditionError("n_avg must be >= 1");
    m.validate();
    const std::size_t M = m.points();

    // Pass over the profiling set: per-class moments for every bit, plus a
    // compact copy of each trace for template training.
    BitMask ref_labels = 0;
    const auto ref = profiling_trace(m, n_avg, seed, 0, ref_labels);
    std::vector<float> store(n_p * M);
    std::vector<BitMask> labels(n_p);
    const std::size_t chunks = std::min<std::size_t>(64, n_p);
    std::vector<StreamStats> partial(chunks, StreamStats(M));
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t lo = n_p * c / chunks, hi = n_p * (c + 1) / chunks;
        std::vector<double> y(M);
        for (std::size_t i = lo; i < hi; ++i) {
            const auto t = profiling_trace(m, n_avg, seed, i, labels[i]);
            for (std::size_t f = 0; f < M; ++f) {
                y[f] = t[f] - ref[f];
                store[i * M + f] = static_cast<float>(t[f]);
            }
            partial[c].add(y, labels[i]);
        }
    });
    StreamStats stats(M);
    for (const auto &p : partial)
        stats.merge(p);
    partial.clear();
    for (std::size_t j = 0; j < kLeakBits; ++j)
        if (stats.n1[j] == 0 || stats.n1[j] == n_p)
            throw PreconditionError("profiling set has a single class for bit " +
                                    std::to_string(j));

    std::vector<std::vector<double>> snr(kLeakBits);
    std::vector<std::vector<std::size_t>> pois(kLeakBits);
    for (std::size_t j = 0; j < kLeakBits; ++j) {
        snr[j] = stats.snr(j);
        pois[j] = select_pois({snr[j]}, opt.alpha, opt.d_min, opt.k);
        if (pois[j].empty()) {
            const auto it = std::max_element(snr[j].begin(), snr[j].end());
            pois[j].push_back(static_cast<std::size_t>(it - snr[j].begin()));
        }
    }

    BitMask secret = 0;
    for (std::size_t s = 0; s < 3; ++s)
        secret |= BitMask(shares[s]) << (8 * s);
    auto agen = make_stream(seed, streams::attack_trace, 0);
    const auto attack = synthesize_trace(m, secret, n_avg, agen);

    std::vector<std::vector<BitGuess>> guesses(kinds.size(), std::vector<BitGuess>(kLeakBits));
    parallel_for(kLeakBits, [&](std::size_t j) {
        const auto &pj = pois[j];
        std::vector<double> cols(n_p * pj.size());
        std::vector<bool> lab(n_p);
        for (std::size_t i = 0; i < n_p; ++i) {
            lab[i] = (labels[i] >> j) & 1u;
            for (std::size_t p = 0; p < pj.size(); ++p)
                cols[i * pj.size() + p] = store[i * M + pj[p]];
        }
        for (std::size_t q = 0; q < kinds.size(); ++q) {
            const auto t = build_template_from_columns(cols, lab, j, pj, kinds[q],
                                                       {opt.n_stumps, seed});
            guesses[q][j] = classify_bit(t, attack);
        }
    });

    std::vector<AttackReport> out;
    for (std::size_t q = 0; q < kinds.size(); ++q) {
        AttackReport r;
        r.n_p = n_p;
        r.n_avg = n_avg;
        r.classifier = kinds[q];
        std::array<std::uint8_t, 3> rec{};
        r.all_bits_correct = true;
        for (std::size_t j = 0; j < kLeakBits; ++j) {
            const auto &g = guesses[q][j];
            const bool truth = (secret >> j) & 1u;
            r.bits.push_back({j, g.bit, truth, g.score});
            r.all_bits_correct = r.all_bits_correct && g.bit == truth;
            if (g.bit)
                rec[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
        }
        r.recovered_byte = recover_key_byte(rec);
        r.true_byte = recover_key_byte(shares);
        r.correct = r.recovered_byte == r.true_byte;
        if (opt.keep_snr)
            r.snr = snr;
        out.push_back(std::move(r));
    }
    return out;
}

AttackReport run_attack(const LeakageModel &m, const std::array<std::uint8_t, 3> &shares,
                        std::size_t n_p, unsigned n_avg, ClassifierKind kind, std::uint64_t seed,
                        const AttackOptions &opt) {
    return run_attack_multi(m, shares, n_p, n_avg, {kind}, seed, opt).front();
}

} // namespace chypnosim
