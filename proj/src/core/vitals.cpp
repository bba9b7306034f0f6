#include "core/vitals.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "core/rng.hpp"

namespace heartsim::vitals {

const char* to_string(Quality q) {
    switch (q) {
        case Quality::Good: return "Good";
        case Quality::NoContact: return "NoContact";
        case Quality::Unstable: return "Unstable";
    }
    return "?";
}

std::optional<std::string> validate_profile(const VitalsProfile& p) {
    if (!(p.target_bpm > 0.0)) return "target_bpm must be positive";
    if (!(p.spo2_ratio_r > 0.0) || p.spo2_ratio_r > 3.4)
        return "spo2_ratio_r must be in (0, 3.4]";
    if (p.dc_red <= 0 || p.dc_ir <= 0) return "dc baselines must be positive";
    if (p.ac_amplitude < 0 || p.noise_amplitude < 0)
        return "amplitudes must be non-negative";
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// SampleFifo

SampleFifo::SampleFifo(size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

void SampleFifo::push(const PpgSample& s) {
    if (entries_.size() == capacity_) {
        entries_.pop_front();  // oldest out first
        ++overflow_count_;
    }
    entries_.push_back(s);
}

std::optional<PpgSample> SampleFifo::pop() {
    if (entries_.empty()) return std::nullopt;
    PpgSample s = entries_.front();
    entries_.pop_front();
    return s;
}

std::vector<PpgSample> SampleFifo::drain() {
    std::vector<PpgSample> out(entries_.begin(), entries_.end());
    entries_.clear();
    return out;
}

// ---------------------------------------------------------------------------
// Synthesis

namespace {

// Raised cosine centered on each scheduled beat; first beat one period in.
// Overlapping pulses (possible above 200 bpm) take the max, not the sum, so
// the envelope never exceeds dc + ac.
double pulse_value(double t_ms, double period_ms) {
    constexpr double half_width = PpgSynthesizer::kPulseWidthMs / 2.0;
    const long m0 = std::lround(t_ms / period_ms);
    double best = 0.0;
    for (long m = m0 - 1; m <= m0 + 1; ++m) {
        if (m < 1) continue;
        const double d = std::abs(t_ms - static_cast<double>(m) * period_ms);
        if (d <= half_width)
            best = std::max(best, 0.5 * (1.0 + std::cos(std::numbers::pi * d / half_width)));
    }
    return best;
}

uint16_t clamp_adc(double v) {
    const long r = std::lround(v);
    if (r < 0) return 0;
    if (r > kAdcMax) return kAdcMax;
    return static_cast<uint16_t>(r);
}

}  // namespace

PpgSynthesizer::PpgSynthesizer(const VitalsProfile& profile, int sample_hz, uint64_t seed,
                               int64_t start_ms)
    : profile_(profile),
      sample_hz_(sample_hz),
      start_ms_(start_ms),
      period_ms_(60000.0 / profile.target_bpm),
      rng_(make_rng(seed, "ppg-noise")) {
    if (auto err = validate_profile(profile)) throw std::invalid_argument("ppg: " + *err);
    if (sample_hz < 25) throw std::invalid_argument("ppg: sample_hz must be >= 25");
    // AC_red/DC_red = R * AC_ir/DC_ir
    ac_red_ = profile.spo2_ratio_r * profile.ac_amplitude *
              (static_cast<double>(profile.dc_red) / profile.dc_ir);
}

int64_t PpgSynthesizer::next_t_ms() const {
    return start_ms_ + k_ * 1000 / sample_hz_;
}

PpgSample PpgSynthesizer::next() {
    const int64_t t = next_t_ms();
    const double local = static_cast<double>(t - start_ms_);
    double red = profile_.dc_red;
    double ir = profile_.dc_ir;
    if (profile_.contact) {
        const double p = pulse_value(local, period_ms_);
        red += ac_red_ * p;
        ir += profile_.ac_amplitude * p;
    }
    if (profile_.noise_amplitude > 0) {
        red += uniform_int(rng_, -profile_.noise_amplitude, profile_.noise_amplitude);
        ir += uniform_int(rng_, -profile_.noise_amplitude, profile_.noise_amplitude);
    }
    ++k_;
    return PpgSample{t, clamp_adc(red), clamp_adc(ir)};
}

std::vector<PpgSample> synthesize_ppg(const VitalsProfile& profile, int64_t duration_ms,
                                      int sample_hz, uint64_t seed) {
    if (duration_ms <= 0) throw std::invalid_argument("ppg: duration_ms must be positive");
    PpgSynthesizer synth(profile, sample_hz, seed);
    const int64_t n = duration_ms * sample_hz / 1000;
    std::vector<PpgSample> out;
    out.reserve(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) out.push_back(synth.next());
    return out;
}

// ---------------------------------------------------------------------------
// Detection

std::vector<int64_t> detect_beats(std::span<const PpgSample> samples,
                                  const BeatDetectorParams& params) {
    std::vector<int64_t> beats;
    if (samples.size() < 2) return beats;
    if (samples.back().t_ms - samples.front().t_ms < 2000) return beats;

    size_t win_begin = 0;
    double win_sum = 0.0;
    std::deque<size_t> maxq;  // indices into samples, ir values decreasing

    bool armed = false;
    double peak_v = 0.0;
    int64_t peak_t = 0;

    for (size_t i = 0; i < samples.size(); ++i) {
        const double v = samples[i].ir;
        win_sum += v;
        while (!maxq.empty() && samples[maxq.back()].ir <= v) maxq.pop_back();
        maxq.push_back(i);
        while (samples[i].t_ms - samples[win_begin].t_ms >= params.baseline_window_ms) {
            win_sum -= samples[win_begin].ir;
            if (maxq.front() == win_begin) maxq.pop_front();
            ++win_begin;
        }
        const double baseline = win_sum / static_cast<double>(i - win_begin + 1);
        const double excursion = samples[maxq.front()].ir - baseline;
        const double threshold =
            baseline + std::max(0.5 * excursion, static_cast<double>(params.min_excursion));

        if (v >= threshold) {
            if (!armed || v > peak_v) {
                peak_v = v;
                peak_t = samples[i].t_ms;
            }
            armed = true;
        } else if (armed) {
            // beats are recorded on the downward crossing, so a pulse cut
            // off mid-rise at stream end never counts
            armed = false;
            if (beats.empty() || peak_t - beats.back() >= params.refractory_ms)
                beats.push_back(peak_t);
        }
    }
    return beats;
}

std::optional<int> compute_bpm(std::span<const int64_t> beats, int64_t window_ms) {
    if (window_ms < 5000) throw std::invalid_argument("compute_bpm: window_ms must be >= 5000");
    if (beats.size() < 3) return std::nullopt;

    const int64_t cutoff = beats.back() - window_ms;
    size_t first = 0;
    while (first < beats.size() && beats[first] < cutoff) ++first;
    const size_t n = beats.size() - first;
    if (n < 3) return std::nullopt;

    double sum = 0.0;
    for (size_t i = first + 1; i < beats.size(); ++i)
        sum += static_cast<double>(beats[i] - beats[i - 1]);
    const double mean = sum / static_cast<double>(n - 1);
    if (mean <= 0.0) return std::nullopt;

    double var = 0.0;
    for (size_t i = first + 1; i < beats.size(); ++i) {
        const double d = static_cast<double>(beats[i] - beats[i - 1]) - mean;
        var += d * d;
    }
    var /= static_cast<double>(n - 1);
    if (std::sqrt(var) / mean > 0.25) return std::nullopt;

    return static_cast<int>(std::lround(60000.0 / mean));
}

int spo2_from_ratio(double r) {
    const long v = std::lround(kSpo2Intercept - kSpo2Slope * r);
    return static_cast<int>(std::clamp(v, 0L, 100L));
}

std::optional<int> compute_spo2(std::span<const PpgSample> samples, int64_t window_ms) {
    if (samples.empty()) return std::nullopt;
    const int64_t cutoff = samples.back().t_ms - window_ms;

    double sum_red = 0.0, sum_ir = 0.0;
    int min_red = std::numeric_limits<int>::max(), max_red = 0;
    int min_ir = std::numeric_limits<int>::max(), max_ir = 0;
    size_t n = 0;
    for (const auto& s : samples) {
        if (s.t_ms <= cutoff) continue;
        sum_red += s.red;
        sum_ir += s.ir;
        min_red = std::min<int>(min_red, s.red);
        max_red = std::max<int>(max_red, s.red);
        min_ir = std::min<int>(min_ir, s.ir);
        max_ir = std::max<int>(max_ir, s.ir);
        ++n;
    }
    if (n == 0) return std::nullopt;

    const double dc_red = sum_red / static_cast<double>(n);
    const double dc_ir = sum_ir / static_cast<double>(n);
    const double ac_red = max_red - min_red;
    const double ac_ir = max_ir - min_ir;
    if (dc_red <= 0.0 || dc_ir <= 0.0 || ac_red <= 0.0 || ac_ir <= 0.0) return std::nullopt;

    const double r = (ac_red / dc_red) / (ac_ir / dc_ir);
    return spo2_from_ratio(r);
}

// ---------------------------------------------------------------------------
// CSV

void write_ppg_csv(std::ostream& out, std::span<const PpgSample> samples) {
    out << "t_ms,red,ir\n";
    for (const auto& s : samples)
        out << s.t_ms << ',' << s.red << ',' << s.ir << '\n';
}

std::vector<PpgSample> read_ppg_csv(std::istream& in) {
    std::vector<PpgSample> out;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("ppg csv: empty input");
    if (line != "t_ms,red,ir") throw std::runtime_error("ppg csv: bad header: " + line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        int64_t t;
        long red, ir;
        char c1, c2;
        if (!(row >> t >> c1 >> red >> c2 >> ir) || c1 != ',' || c2 != ',' || red < 0 ||
            red > kAdcMax || ir < 0 || ir > kAdcMax)
            throw std::runtime_error("ppg csv: bad row: " + line);
        out.push_back({t, static_cast<uint16_t>(red), static_cast<uint16_t>(ir)});
    }
    return out;
}

}  // namespace heartsim::vitals
