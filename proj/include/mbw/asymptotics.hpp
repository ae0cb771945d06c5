#pragma once

#include <map>
#include <string>
#include <vector>

#include "mbw/barannikov.hpp"

namespace mbw {

enum class PredictionKind { Zero, Pair };

struct SpectralPrediction {
    int point_id = 0;
    int degree = 0;
    PredictionKind kind = PredictionKind::Zero;
    double coefficient = 0.0;  // multiplies h/pi
    double activation = 0.0;   // 2 (f(upper) - f(lower))
    double kappa = 1.0;
    int partner_id = -1;

    /// kappa^2 * coefficient * (h/pi) * exp(-activation/h), or 0.
    double eval(double h) const;
};

struct PredictionSet {
    std::vector<std::vector<SpectralPrediction>> per_degree;  // ascending eval order
    double h_min = 0.0;
    double h_max = 0.0;

    /// Predicted values in degree p at h, ascending.
    std::vector<double> eval_sorted(int p, double h) const;
    /// Nonzero predictions in degree p, ascending by activation (descending size).
    std::vector<SpectralPrediction> nonzero(int p) const;
    int count(int p) const;
};

/// |neg eigs(upper)| / |neg eigs(lower)| * sqrt(|det lower| / |det upper|).
double prefactor_coefficient(const CriticalPoint& lower, const CriticalPoint& upper);

/// pi/h * A(h)^2 with A(h) from the interaction-matrix formula; equals
/// prefactor_coefficient for every h up to rounding.
double prefactor_from_amplitude(const CriticalPoint& lower, const CriticalPoint& upper, double h);

struct PredictOptions {
    std::map<int, double> kappa;  // keyed by upper point id
    double eig_floor = 0.0;       // absolute floor for h_min; 0 disables
};

PredictionSet predict_spectrum(const BarannikovComplex& bc, const PredictOptions& opt = {});

/// Predictions for points inside (a, b): a pair survives only when both ends
/// lie in the window, otherwise the point predicts 0.
PredictionSet predict_relative(const BarannikovComplex& bc, const WindowSpec& w, const PredictOptions& opt = {});

/// h solving coefficient * (h/pi) * exp(-activation/h) = floor (bisection).
double solve_floor_h(double coefficient, double activation, double floor);

/// One record per prediction: point id, degree, coefficient, activation,
/// kappa, then eval at each h.
std::string format_predictions(const PredictionSet& ps, const std::vector<double>& hs);

}  // namespace mbw
