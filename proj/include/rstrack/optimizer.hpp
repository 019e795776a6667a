#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "rstrack/tdd.hpp"

namespace rstrack {

// Sidelobe statistics of the current score map plus the recent peak history.
struct EnergyStats {
    double y_max = 0.0;
    double mu_s = 0.0;
    double sigma_s = 0.0;
    double mu_t = 0.0;
    double sigma_t = 0.0;
    int history_capacity = 5;        // H
    std::deque<double> history;      // at most H most recent peak scores
    double min_sigma = 1e-6;

    void push_peak(double y);        // keeps the H most recent
};

// epsilon = ((y_max - mu_s)/sigma_s) * ((y_max - mu_t)/sigma_t), sigmas floored.
double energy_from_stats(const EnergyStats& stats);

// Fills the spatial stats from the map sidelobe (cells outside an 11x11 window
// centered on the peak) and the temporal stats from the peak history, then
// returns the product above. The history must be non-empty.
double spatiotemporal_energy(const ScoreMap& smap, EnergyStats& stats);

struct UpdateController {
    double kappa = 0.8;          // gate ratio
    double epsilon0 = 0.0;       // baseline energy
    int check_period = 10;       // frames
    double min_sigma = 1e-6;
    double epsilon_floor = 1e-6;
    bool bootstrapped = false;   // epsilon0 captured
};

// alpha_s = (g.g)/(g.Lambda g); a capped default of 1 when the curvature along
// g degenerates (g.Lambda g <= 1e-12 g.g).
double steepest_step(const std::vector<double>& gradient,
                     const std::function<std::vector<double>(const std::vector<double>&)>&
                         curvature_apply);

// alpha = min(1/epsilon, alpha_s); requires epsilon > 0.
double adaptive_rate(double epsilon, double alpha_s);

// True iff t is a check frame, epsilon is positive, and epsilon >= kappa*epsilon0.
bool should_update(long frame_index, double epsilon, const UpdateController& controller);

// Value + flattened gradient of one loss term.
struct LossBundle {
    double value = 0.0;
    std::vector<double> grad;
};

// L = L_rs + mu * L_td; gradients concatenated per parameter partition
// (rotation-scale block first, discrimination block scaled by mu).
LossBundle combined_loss(const LossBundle& rs, const LossBundle& td, double mu);

}  // namespace rstrack
