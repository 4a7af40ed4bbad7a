#ifndef SPLITINFER_METRICS_HPP
#define SPLITINFER_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "splitinfer/network.hpp"
#include "splitinfer/splitexec.hpp"

namespace splitinfer {

// Smoothing added before normalizing images into distributions,
// relative to each image's shifted range so the divergence is scale
// invariant. The resulting numbers are reproducible within this repo;
// absolute values are not comparable across KL pipelines.
constexpr double kKlEpsilon = 1e-7;

// KL(x || x_hat) between two images: both are shifted to min 0,
// smoothed with epsilon times their range, normalized to sum 1.
// Original goes first. Constant images become uniform.
double kl_divergence_image(const Vector& x, const Vector& x_hat);

struct SweepRow {
    double p = 0.0;
    double mean_accuracy = 0.0;
    double std_dev = 0.0;
    double max_acc = 0.0;
    double min_acc = 0.0;
    std::size_t trials = 0;
    bool has_std = false; // false on the deterministic p = 0 row
};

// Accuracy under dropping-activation masks at each probability in
// p_list, `trials` independent mask streams per row over the full test
// set. p = 0 is the plain evaluate() row with no std. Deterministic in
// rng_seed; per-trial seeds derive from (rng_seed, trial, p index).
std::vector<SweepRow> drop_sweep(const MlpModel& model, const Dataset& test,
                                 const std::vector<double>& p_list, std::size_t trials,
                                 std::uint64_t rng_seed, std::size_t cut = 1);

// Table-style CSV: p,mean_accuracy,std,max,min (std printed as NA on
// the p = 0 row).
std::string sweep_csv(const std::vector<SweepRow>& rows);

} // namespace splitinfer

#endif
