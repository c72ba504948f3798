#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace chypnosim {

/// Bits leaked per trace: 3 shares x 8 bits, index = share * 8 + bit (LSB first).
inline constexpr std::size_t kLeakBits = 24;
using BitMask = std::uint32_t;

struct Bump {
    double center; // grid index
    double width;  // grid steps
    double amplitude; // radians
};

struct LeakageParams {
    std::size_t points = 1001;
    double f_lo = 100e6;
    double f_hi = 1e9;
    std::size_t bumps_per_bit = 2;
    double amplitude = 5e-3;
    double width = 3.0;
    double noise_sigma = 15e-3;
    /// Minimum distance between any two bump centers, in grid steps.
    double min_separation = 12.0;
};

/// Phase response of the power-delivery network: a smooth baseline plus one
/// sparse signature per stored bit, observed through Gaussian noise.
struct LeakageModel {
    std::vector<double> freq_grid;
    std::vector<double> baseline;
    std::vector<std::vector<double>> bit_signatures; // kLeakBits x M
    std::vector<std::vector<Bump>> bumps;
    double noise_sigma = 0.0;
    /// Optional [lo, hi) index range of each signature's non-zero entries;
    /// empty means dense.
    std::vector<std::pair<std::size_t, std::size_t>> support;

    std::size_t points() const { return freq_grid.size(); }
    void validate() const;

    static LeakageModel make_default(std::uint64_t seed, const LeakageParams &params = {});
};

std::vector<double> synthesize_trace(const LeakageModel &m, BitMask bits, unsigned n_avg,
                                     std::mt19937_64 &rng);

class TraceSet {
public:
    TraceSet(std::size_t points, unsigned n_avg);

    void add(std::span<const double> trace, BitMask labels);
    std::size_t size() const { return labels_.size(); }
    std::size_t points() const { return points_; }
    unsigned n_avg() const { return n_avg_; }
    std::span<const double> row(std::size_t i) const {
        return {traces_.data() + i * points_, points_};
    }
    BitMask labels(std::size_t i) const { return labels_[i]; }
    bool label(std::size_t i, std::size_t bit) const { return (labels_[i] >> bit) & 1u; }

    /// Profiling set of n traces with uniformly random labels.
    static TraceSet synthesize(const LeakageModel &m, std::size_t n, unsigned n_avg,
                               std::uint64_t seed);

private:
    std::size_t points_;
    unsigned n_avg_;
    std::vector<double> traces_;
    std::vector<BitMask> labels_;
};

struct SnrCurve {
    static constexpr double epsilon = 1e-8;
    std::vector<double> values;
};

/// Two-class SNR per point; population variances. Throws PreconditionError if
/// one class is empty.
SnrCurve compute_snr(const TraceSet &ts, std::size_t bit);
/// mu0 - mu1 per point.
std::vector<double> difference_of_means(const TraceSet &ts, std::size_t bit);

std::vector<std::size_t> select_pois(const SnrCurve &s, double alpha = 0.3,
                                     std::size_t d_min = 10, std::size_t k = 5);

enum class ClassifierKind { GaussianLda, StumpEnsemble };
const char *to_string(ClassifierKind k);
std::optional<ClassifierKind> parse_classifier(const std::string &name);

struct Stump {
    std::size_t poi; // position in Template::pois
    double threshold;
    bool above_is_one;
};

struct Template {
    std::size_t bit = 0;
    ClassifierKind kind = ClassifierKind::GaussianLda;
    std::vector<std::size_t> pois;
    std::vector<double> mu0, mu1, var;
    std::vector<Stump> stumps;
};

struct TemplateOptions {
    std::size_t n_stumps = 101;
    std::uint64_t seed = 0;
};

Template build_template(const TraceSet &ts, std::size_t bit, const std::vector<std::size_t> &pois,
                        ClassifierKind kind, const TemplateOptions &opt = {});

/// Training data already reduced to POI columns: row-major n x pois.size().
Template build_template_from_columns(std::span<const double> values,
                                     const std::vector<bool> &labels, std::size_t bit,
                                     const std::vector<std::size_t> &pois, ClassifierKind kind,
                                     const TemplateOptions &opt = {});

/// Linear discriminant; positive favours bit 1.
double lda_discriminant(const Template &t, std::span<const double> trace);

struct BitGuess {
    bool bit;
    double score; // confidence in [0.5, 1]; exactly 0.5 on ties (bit 0)
};
BitGuess classify_bit(const Template &t, std::span<const double> trace);

std::uint8_t recover_key_byte(const std::array<std::uint8_t, 3> &shares);

struct AttackOptions {
    double alpha = 0.3;
    std::size_t d_min = 10;
    std::size_t k = 5;
    std::size_t n_stumps = 101;
    bool keep_snr = false;
};

struct BitReport {
    std::size_t index;
    bool prediction;
    bool truth;
    double score;
};

struct AttackReport {
    std::size_t n_p = 0;
    unsigned n_avg = 0;
    ClassifierKind classifier = ClassifierKind::GaussianLda;
    std::vector<BitReport> bits;
    std::uint8_t recovered_byte = 0;
    std::uint8_t true_byte = 0;
    bool correct = false;
    bool all_bits_correct = false;
    std::vector<std::vector<double>> snr; // per bit, when requested
};

/// Profiles n_p random traces, then attacks one averaged trace of the shares,
/// once per classifier kind (sharing the profiling set).
std::vector<AttackReport> run_attack_multi(const LeakageModel &m,
                                           const std::array<std::uint8_t, 3> &shares,
                                           std::size_t n_p, unsigned n_avg,
                                           const std::vector<ClassifierKind> &kinds,
                                           std::uint64_t seed, const AttackOptions &opt = {});

AttackReport run_attack(const LeakageModel &m, const std::array<std::uint8_t, 3> &shares,
                        std::size_t n_p, unsigned n_avg, ClassifierKind kind, std::uint64_t seed,
                        const AttackOptions &opt = {});

} // namespace chypnosim
