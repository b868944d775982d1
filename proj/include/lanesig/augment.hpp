#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lanesig/drive.hpp"

namespace lanesig::augment {

// How many variants of each kind to synthesize and with which magnitude
// caps. Per-variant magnitudes are drawn uniformly from (0, cap] so the
// dataset contains a spread of deviations.
struct AugmentPlan {
    int n_scale = 10;
    double scale_sigma_max_frac = 0.7;
    int n_jitter = 10;
    double jitter_sigma_max_frac = 0.1;
    int n_warp = 5;
    int warp_sections_min = 3;
    int warp_sections_max = 8;
    double warp_speed_frac = 0.2;
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
};

// Multiplies every sample by c = |N(1, sigma_frac * M)| where M is the
// largest |sample| of the input. Labels unchanged. sigma_frac in [0, 0.7].
Drive scale(const Drive& d, std::uint64_t seed, double sigma_frac);

// Adds N(0, sigma_frac * M) to every sample (one draw per sample, in
// order). Labels and length unchanged. sigma_frac in [0, 0.1].
Drive jitter(const Drive& d, std::uint64_t seed, double sigma_frac);

// One section of a time warp: `len` input samples resampled at rate ratio
// `ratio`, yielding round(len / ratio) output samples.
struct WarpSection {
    std::size_t len = 0;
    double ratio = 1.0;
};

// Deterministic warp core: resamples each section by linear interpolation at
// source positions u_j = min(j * ratio, len - 1) and remaps every lane-switch
// index S inside section k to out_offset_k + round((S - in_offset_k) /
// ratio_k). Sections shorter than 2 samples are copied unchanged. Exposed so
// tests can drive hand-picked section plans.
Drive warp_with_plan(const Drive& d, const std::vector<WarpSection>& sections);

// Seeded warp: splits the drive into n_sections contiguous sections at
// uniformly drawn cut points (draw order: the n_sections-1 cuts, then one
// rate ratio per section, uniform in [1-speed_frac, 1+speed_frac]).
// speed_frac in [0, 0.2].
Drive time_warp(const Drive& d, std::uint64_t seed, int n_sections, double speed_frac);

// Expands every input drive into (1+n_scale)(1+n_jitter)(1+n_warp) variants:
// originals, scaled copies, jittered copies of each of those, then warped
// copies of each of those. Every variant's seed derives deterministically
// from (plan.seed, input index, stage, variant indices), so regeneration is
// exact and order-independent.
std::vector<Drive> augment_dataset(const std::vector<Drive>& drives, const AugmentPlan& plan);

// Streaming variant: calls sink(source_index, variant) instead of collecting.
void augment_dataset_each(const std::vector<Drive>& drives, const AugmentPlan& plan,
                          const std::function<void(std::size_t, Drive&&)>& sink);

}  // namespace lanesig::augment
