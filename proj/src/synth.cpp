#include "fedchain/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fedchain/errors.hpp"
#include "fedchain/rng.hpp"
#include "fedchain/sha256.hpp"

namespace fedchain {

namespace {

struct SensorModel {
    double base;
    double amp;    // total drift over a full life; 0 = flat sensor
    double shape;  // drift follows progress^shape
    double noise;
};

// Baselines sit near the magnitudes of the usual turbofan channels; the
// flat ones (s1, s5, s6, s10, s16, s18, s19) stay exactly constant so
// zero-variance normalization gets exercised.
constexpr std::array<SensorModel, 21> kSensors = {{
    {518.67, 0.0, 1.0, 0.0},    // s1
    {642.0, 8.0, 1.2, 0.9},     // s2
    {1585.0, 45.0, 1.4, 5.0},   // s3
    {1400.0, 40.0, 1.1, 4.5},   // s4
    {14.62, 0.0, 1.0, 0.0},     // s5
    {21.61, 0.0, 1.0, 0.0},     // s6
    {554.0, -12.0, 1.0, 1.4},   // s7
    {2388.0, 3.0, 2.0, 0.45},   // s8
    {9050.0, 60.0, 1.6, 8.0},   // s9
    {1.30, 0.0, 1.0, 0.0},      // s10
    {47.3, 2.2, 1.0, 0.30},     // s11
    {522.0, -10.0, 1.3, 1.2},   // s12
    {2388.0, 3.5, 1.8, 0.45},   // s13
    {8130.0, 55.0, 1.5, 7.0},   // s14
    {8.44, 0.5, 1.1, 0.06},     // s15
    {0.03, 0.0, 1.0, 0.0},      // s16
    {392.0, 8.0, 1.2, 1.3},     // s17
    {2388.0, 0.0, 1.0, 0.0},    // s18
    {100.0, 0.0, 1.0, 0.0},     // s19
    {38.9, -2.2, 1.0, 0.28},    // s20
    {23.3, -1.3, 1.4, 0.17},    // s21
}};

// Six (altitude, mach, throttle) regimes for the multi-condition subsets.
constexpr std::array<std::array<double, 3>, 6> kRegimes = {{
    {0.0, 0.0, 100.0},
    {10.0, 0.25, 100.0},
    {20.0, 0.70, 100.0},
    {25.0, 0.62, 60.0},
    {35.0, 0.84, 100.0},
    {42.0, 0.84, 40.0},
}};

struct UnitTraits {
    int life;
    int fault_mode;
    std::array<double, 21> offset;  // per-engine manufacturing variation
};

UnitTraits draw_unit(Rng& rng, const SynthProfile& profile) {
    UnitTraits traits;
    traits.life = profile.life_min +
                  static_cast<int>(uniform_u64(
                      rng, static_cast<std::uint64_t>(profile.life_max - profile.life_min + 1)));
    traits.fault_mode =
        profile.fault_modes > 1 && uniform_real(rng, 0.0, 1.0) < 0.5 ? 1 : 0;
    for (std::size_t j = 0; j < traits.offset.size(); ++j) {
        traits.offset[j] = kSensors[j].noise * 1.5 * normal(rng);
    }
    return traits;
}

void write_row(std::FILE* out, int unit, int cycle, const std::array<double, 3>& settings,
               const std::array<double, 21>& sensors) {
    std::fprintf(out, "%d %d %.4f %.4f %.1f", unit, cycle, settings[0], settings[1],
                 settings[2]);
    for (double v : sensors) {
        std::fprintf(out, " %.2f", v);
    }
    std::fprintf(out, "\n");
}

void emit_unit(std::FILE* out, Rng& rng, const SynthProfile& profile, int unit_id,
               const UnitTraits& traits, int last_cycle) {
    for (int t = 1; t <= last_cycle; ++t) {
        const double progress = static_cast<double>(t) / traits.life;

        std::array<double, 3> settings{};
        double regime_shift = 0.0;
        if (profile.op_regimes > 1) {
            const auto r = uniform_u64(rng, static_cast<std::uint64_t>(profile.op_regimes));
            settings = kRegimes[static_cast<std::size_t>(r)];
            settings[0] += normal(rng) * 0.002;
            settings[1] += normal(rng) * 0.0005;
            regime_shift = static_cast<double>(r);
        } else {
            settings = {normal(rng) * 0.0015, normal(rng) * 0.0003, 100.0};
        }

        std::array<double, 21> sensors{};
        for (std::size_t j = 0; j < sensors.size(); ++j) {
            const SensorModel& m = kSensors[j];
            double amp = m.amp;
            if (traits.fault_mode == 1 && j % 3 == 0) {
                amp *= 1.6;  // second fault mode degrades a sensor subset faster
            }
            double v = m.base + traits.offset[j] + amp * std::pow(progress, m.shape);
            if (m.noise > 0.0) {
                v += profile.noise_scale * m.noise * normal(rng);
                v += regime_shift * m.noise * 4.0;  // regime changes shift the baseline
            }
            sensors[j] = v;
        }
        write_row(out, unit_id, t, settings, sensors);
    }
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_out(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "w"));
    if (!f) {
        throw Error("cannot write " + path.string());
    }
    return f;
}

}  // namespace

SynthProfile synth_profile(const std::string& subset) {
    if (subset == "FD001") return SynthProfile{100, 100, 150, 300, 1, 1, 1.0};
    if (subset == "FD002") return SynthProfile{260, 259, 150, 300, 6, 1, 1.2};
    if (subset == "FD003") return SynthProfile{100, 100, 150, 340, 1, 2, 1.0};
    if (subset == "FD004") return SynthProfile{248, 249, 150, 340, 6, 2, 1.2};
    throw InvalidArgumentError("unknown subset " + subset + " (expected FD001..FD004)");
}

void write_synth_cmapss(const std::filesystem::path& dir, const std::string& subset,
                        std::uint64_t seed) {
    const SynthProfile profile = synth_profile(subset);
    std::filesystem::create_directories(dir);

    {
        FilePtr out = open_out(dir / ("train_" + subset + ".txt"));
        for (int unit = 1; unit <= profile.train_units; ++unit) {
            Rng rng(derive_seed(seed, "synth-train:" + subset, static_cast<std::uint64_t>(unit)));
            const UnitTraits traits = draw_unit(rng, profile);
            emit_unit(out.get(), rng, profile, unit, traits, traits.life);
        }
    }

    FilePtr test_out = open_out(dir / ("test_" + subset + ".txt"));
    FilePtr rul_out = open_out(dir / ("RUL_" + subset + ".txt"));
    for (int unit = 1; unit <= profile.test_units; ++unit) {
        Rng rng(derive_seed(seed, "synth-test:" + subset, static_cast<std::uint64_t>(unit)));
        const UnitTraits traits = draw_unit(rng, profile);
        const double cut_frac = uniform_real(rng, 0.45, 0.95);
        int cut = static_cast<int>(std::lround(cut_frac * traits.life));
        cut = std::max(5, std::min(cut, traits.life - 1));
        emit_unit(test_out.get(), rng, profile, unit, traits, cut);
        std::fprintf(rul_out.get(), "%d\n", traits.life - cut);
    }
}

}  // namespace fedchain
