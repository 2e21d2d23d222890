#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace fedchain {

// Writes a deterministic turbofan-degradation fixture in the standard
// 26-column CMAPSS text layout: train_<subset>.txt (full run-to-failure
// trajectories), test_<subset>.txt (truncated trajectories) and
// RUL_<subset>.txt (remaining cycles per test unit, in unit order).
//
// Subsets mirror the real family: FD001/FD003 run one operating regime,
// FD002/FD004 jump between six; FD003/FD004 mix two fault modes.
void write_synth_cmapss(const std::filesystem::path& dir, const std::string& subset,
                        std::uint64_t seed);

struct SynthProfile {
    int train_units = 0;
    int test_units = 0;
    int life_min = 0;
    int life_max = 0;  // inclusive
    int op_regimes = 1;
    int fault_modes = 1;
    double noise_scale = 1.0;
};

SynthProfile synth_profile(const std::string& subset);

}  // namespace fedchain
