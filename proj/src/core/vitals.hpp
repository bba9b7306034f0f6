#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace heartsim::vitals {

constexpr int kAdcMax = 65535;  // 16-bit converter

// One two-channel sample: red 660 nm and IR 940 nm ADC counts.
struct PpgSample {
    int64_t t_ms = 0;
    uint16_t red = 0;
    uint16_t ir = 0;

    friend bool operator==(const PpgSample&, const PpgSample&) = default;
};

enum class Quality { Good, NoContact, Unstable };

const char* to_string(Quality q);

// bpm/spo2_pct are meaningful only when quality == Good.
struct VitalsReading {
    int64_t t_ms = 0;
    int bpm = 0;
    int spo2_pct = 0;
    Quality quality = Quality::NoContact;
};

// Generator knobs. target_bpm is the ground truth a detector must recover;
// spo2_ratio_r is encoded into the red/IR amplitude ratio exactly as
// R = (AC_red/DC_red)/(AC_ir/DC_ir).
struct VitalsProfile {
    double target_bpm = 75.0;
    double spo2_ratio_r = 0.52;
    int dc_red = 30000;
    int dc_ir = 30000;
    int ac_amplitude = 2000;   // IR-channel pulse height, ADC counts
    int noise_amplitude = 20;  // uniform +/- counts, per channel
    bool contact = true;
};

// Hard limits only (bpm > 0, 0 < R <= 3.4, non-negative amplitudes, nonzero
// DC). ADC headroom is not checked here: the generator clamps instead.
std::optional<std::string> validate_profile(const VitalsProfile& p);

// Fixed-capacity buffer between sensor and controller. Pop order equals
// push order; pushing into a full buffer drops the oldest entry and
// increments the overflow counter.
class SampleFifo {
  public:
    explicit SampleFifo(size_t capacity = 16);

    void push(const PpgSample& s);
    std::optional<PpgSample> pop();
    std::vector<PpgSample> drain();

    size_t size() const { return entries_.size(); }
    size_t capacity() const { return capacity_; }
    uint64_t overflow_count() const { return overflow_count_; }

  private:
    size_t capacity_;
    std::deque<PpgSample> entries_;
    uint64_t overflow_count_ = 0;
};

// Incremental waveform generator: raised-cosine pulses of fixed 300 ms width
// on a DC baseline, plus seeded uniform noise. Sample k is emitted at
// start_ms + k*1000/sample_hz.
class PpgSynthesizer {
  public:
    PpgSynthesizer(const VitalsProfile& profile, int sample_hz, uint64_t seed,
                   int64_t start_ms = 0);

    PpgSample next();
    int64_t next_t_ms() const;

    static constexpr double kPulseWidthMs = 300.0;

  private:
    VitalsProfile profile_;
    int sample_hz_;
    int64_t start_ms_;
    int64_t k_ = 0;
    double period_ms_;
    double ac_red_;  // derived so the R encoding holds exactly
    std::mt19937 rng_;
};

// Returns duration_ms*sample_hz/1000 samples. Throws std::invalid_argument
// on an invalid profile, sample_hz < 25 or duration_ms <= 0.
std::vector<PpgSample> synthesize_ppg(const VitalsProfile& profile, int64_t duration_ms,
                                      int sample_hz, uint64_t seed);

struct BeatDetectorParams {
    int64_t baseline_window_ms = 1000;
    int64_t refractory_ms = 250;  // caps detection at 240 bpm
    int min_excursion = 100;      // counts above baseline before arming
};

// Moving-baseline threshold crossing on the IR channel. Returns peak
// timestamps; degenerate input (flat, or under 2 s of samples) returns an
// empty list.
std::vector<int64_t> detect_beats(std::span<const PpgSample> samples,
                                  const BeatDetectorParams& params = {});

// Mean inter-beat interval over the trailing window, rounded to whole bpm.
// nullopt = Unstable: fewer than 3 beats in window, or interval coefficient
// of variation above 0.25. window_ms must be >= 5000.
std::optional<int> compute_bpm(std::span<const int64_t> beats, int64_t window_ms);

// Standard two-wavelength calibration line, kept in one place so it can be
// swapped: SpO2 = 110 - 25*R, clamped to [0, 100].
constexpr double kSpo2Intercept = 110.0;
constexpr double kSpo2Slope = 25.0;

int spo2_from_ratio(double r);

// Ratio-of-ratios over the trailing window: AC = peak-to-trough, DC = mean,
// per channel. nullopt = NoContact (zero DC or flat channel). The caller is
// responsible for only asking over windows with at least 2 detected beats.
std::optional<int> compute_spo2(std::span<const PpgSample> samples, int64_t window_ms);

// CSV form `t_ms,red,ir` with a header row, decimal integers.
void write_ppg_csv(std::ostream& out, std::span<const PpgSample> samples);
std::vector<PpgSample> read_ppg_csv(std::istream& in);  // throws on malformed rows

}  // namespace heartsim::vitals
