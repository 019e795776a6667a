#include "rstrack/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rstrack {

void EnergyStats::push_peak(double y) {
    history.push_back(y);
    while (int(history.size()) > history_capacity) history.pop_front();
}

double energy_from_stats(const EnergyStats& stats) {
    double spatial = (stats.y_max - stats.mu_s) / std::max(stats.sigma_s, stats.min_sigma);
    double temporal = (stats.y_max - stats.mu_t) / std::max(stats.sigma_t, stats.min_sigma);
    return spatial * temporal;
}

double spatiotemporal_energy(const ScoreMap& smap, EnergyStats& stats) {
    if (stats.history.empty())
        throw std::invalid_argument("spatiotemporal_energy: empty peak history");
    if (smap.scores.empty())
        throw std::invalid_argument("spatiotemporal_energy: empty score map");

    stats.y_max = smap.peak.value;
    SidelobeStats side = sidelobe_stats(smap.scores, smap.peak.row, smap.peak.col, 11, 11);
    stats.mu_s = side.mean;
    stats.sigma_s = side.stddev;

    double sum = 0.0, sum_sq = 0.0;
    for (double y : stats.history) {
        sum += y;
        sum_sq += y * y;
    }
    double n = double(stats.history.size());
    stats.mu_t = sum / n;
    double var = sum_sq / n - stats.mu_t * stats.mu_t;
    stats.sigma_t = var > 0.0 ? std::sqrt(var) : 0.0;
    return energy_from_stats(stats);
}

double steepest_step(const std::vector<double>& gradient,
                     const std::function<std::vector<double>(const std::vector<double>&)>&
                         curvature_apply) {
    double gg = 0.0;
    for (double g : gradient) gg += g * g;
    std::vector<double> lg = curvature_apply(gradient);
    if (lg.size() != gradient.size())
        throw std::invalid_argument("steepest_step: curvature output size mismatch");
    double glg = 0.0;
    for (std::size_t i = 0; i < gradient.size(); ++i) glg += gradient[i] * lg[i];
    if (glg <= 1e-12 * gg) return 1.0;
    return gg / glg;
}

double adaptive_rate(double epsilon, double alpha_s) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("adaptive_rate: energy must be positive (gate must reject)");
    return std::min(1.0 / epsilon, alpha_s);
}

bool should_update(long frame_index, double epsilon, const UpdateController& controller) {
    if (controller.check_period < 1)
        throw std::invalid_argument("should_update: check_period must be >= 1");
    if (frame_index % controller.check_period != 0) return false;
    if (!(epsilon > 0.0)) return false;
    return epsilon >= controller.kappa * controller.epsilon0;
}

LossBundle combined_loss(const LossBundle& rs, const LossBundle& td, double mu) {
    LossBundle out;
    out.value = rs.value + mu * td.value;
    out.grad.reserve(rs.grad.size() + td.grad.size());
    out.grad.insert(out.grad.end(), rs.grad.begin(), rs.grad.end());
    for (double g : td.grad) out.grad.push_back(mu * g);
    return out;
}

}  // namespace rstrack
