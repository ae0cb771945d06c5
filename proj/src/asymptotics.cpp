#include "mbw/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "mbw/error.hpp"

namespace mbw {

double SpectralPrediction::eval(double h) const
{
    if (kind == PredictionKind::Zero)
        return 0.0;
    return kappa * kappa * coefficient * (h / std::numbers::pi) * std::exp(-activation / h);
}

std::vector<double> PredictionSet::eval_sorted(int p, double h) const
{
    std::vector<double> out;
    if (p < 0 || static_cast<std::size_t>(p) >= per_degree.size())
        return out;
    for (const auto& s : per_degree[static_cast<std::size_t>(p)])
        out.push_back(s.eval(h));
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<SpectralPrediction> PredictionSet::nonzero(int p) const
{
    std::vector<SpectralPrediction> out;
    if (p < 0 || static_cast<std::size_t>(p) >= per_degree.size())
        return out;
    for (const auto& s : per_degree[static_cast<std::size_t>(p)])
        if (s.kind == PredictionKind::Pair)
            out.push_back(s);
    std::sort(out.begin(), out.end(),
              [](const SpectralPrediction& a, const SpectralPrediction& b) { return a.activation > b.activation; });
    return out;
}

int PredictionSet::count(int p) const
{
    if (p < 0 || static_cast<std::size_t>(p) >= per_degree.size())
        return 0;
    return static_cast<int>(per_degree[static_cast<std::size_t>(p)].size());
}

namespace {

void validate_pair(const CriticalPoint& lower, const CriticalPoint& upper)
{
    if (upper.morse_index != lower.morse_index + 1)
        throw Error(ErrorCode::IndexMismatch, "upper index must exceed lower index by one");
    if (lower.hessian_eigs.size() != upper.hessian_eigs.size() || lower.hessian_eigs.empty())
        throw Error(ErrorCode::IndexMismatch, "Hessian spectra are missing or of different dimension");
    for (const auto* p : {&lower, &upper}) {
        int neg = 0;
        for (double e : p->hessian_eigs) {
            if (e == 0.0 || !std::isfinite(e))
                throw Error(ErrorCode::ZeroHessianEigenvalue, "point " + std::to_string(p->id) + " has a zero Hessian eigenvalue");
            neg += e < 0.0;
        }
        if (neg != p->morse_index)
            throw Error(ErrorCode::IndexMismatch, "point " + std::to_string(p->id) + " has a Hessian inconsistent with its index");
    }
}

// product of magnitudes, multiplied in ascending order
double sorted_product(std::vector<double> v)
{
    for (auto& x : v)
        x = std::fabs(x);
    std::sort(v.begin(), v.end());
    double p = 1.0;
    for (double x : v)
        p *= x;
    return p;
}

}  // namespace

double prefactor_coefficient(const CriticalPoint& lower, const CriticalPoint& upper)
{
    validate_pair(lower, upper);
    // |negU| / |negL| * sqrt(|negL| |posL| / (|negU| |posU|)) = sqrt(|negU| |posL| / (|negL| |posU|))
    std::vector<double> num, den;
    for (double e : upper.hessian_eigs)
        (e < 0.0 ? num : den).push_back(e);
    for (double e : lower.hessian_eigs)
        (e > 0.0 ? num : den).push_back(e);
    return std::sqrt(sorted_product(num) / sorted_product(den));
}

double prefactor_from_amplitude(const CriticalPoint& lower, const CriticalPoint& upper, double h)
{
    validate_pair(lower, upper);
    const std::size_t p = static_cast<std::size_t>(lower.morse_index);
    const auto& l0 = lower.hessian_eigs;
    const auto& l1 = upper.hessian_eigs;
    double a = std::sqrt(h / std::numbers::pi);
    double num1 = 1.0, den1 = 1.0, num0 = 1.0, den0 = 1.0;
    for (std::size_t i = 0; i < l1.size(); ++i)
        (i < p + 1 ? num1 : den1) *= std::fabs(l1[i]);
    for (std::size_t i = 0; i < l0.size(); ++i)
        (i >= p ? num0 : den0) *= std::fabs(l0[i]);
    a *= std::pow(num1, 0.25) / std::pow(den1, 0.25) * std::pow(num0, 0.25) / std::pow(den0, 0.25);
    return std::numbers::pi / h * a * a;
}

double solve_floor_h(double coefficient, double activation, double floor)
{
    if (!(floor > 0.0) || !(coefficient > 0.0) || !(activation > 0.0))
        return 0.0;
    auto g = [&](double h) { return std::log(coefficient * h / std::numbers::pi) - activation / h - std::log(floor); };
    double lo = 1e-6 * activation, hi = 10.0 * activation;
    if (g(lo) > 0.0)
        return lo;
    if (g(hi) < 0.0)
        return hi;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return hi;
}

namespace {

void require_hypotheses(const BarannikovComplex& bc)
{
    const HypothesisReport rep = check_hypotheses(bc.points, &bc.pairing);
    if (!rep.excellent || !rep.distinct_gaps) {
        std::string what = "hypotheses fail:";
        for (const auto& v : rep.violations)
            what += " " + v.description + ";";
        throw Error(ErrorCode::HypothesisViolated, what);
    }
}

SpectralPrediction pair_prediction(const BarannikovComplex& bc, int upper, const PredictOptions& opt)
{
    const auto& u = bc.point(upper);
    const auto& l = bc.point(bc.pairing.at(upper));
    SpectralPrediction s;
    s.point_id = l.id;
    s.degree = l.morse_index;
    s.kind = PredictionKind::Pair;
    s.coefficient = prefactor_coefficient(l, u);
    s.activation = 2.0 * (u.value - l.value);
    auto k = opt.kappa.find(upper);
    s.kappa = k == opt.kappa.end() ? 1.0 : k->second;
    s.partner_id = u.id;
    return s;
}

void finish(PredictionSet& ps, const PredictOptions& opt)
{
    double h_min = 0.0, h_max = INFINITY;
    for (auto& list : ps.per_degree) {
        std::stable_sort(list.begin(), list.end(), [](const SpectralPrediction& a, const SpectralPrediction& b) {
            if (a.kind != b.kind)
                return a.kind == PredictionKind::Zero;
            return a.activation > b.activation;
        });
        for (const auto& s : list)
            if (s.kind == PredictionKind::Pair) {
                h_min = std::max(h_min, solve_floor_h(s.kappa * s.kappa * s.coefficient, s.activation, opt.eig_floor));
                h_max = std::min(h_max, 0.3 * s.activation);
            }
    }
    ps.h_min = h_min;
    ps.h_max = h_max;
}

}  // namespace

PredictionSet predict_spectrum(const BarannikovComplex& bc, const PredictOptions& opt)
{
    require_hypotheses(bc);
    PredictionSet ps;
    ps.per_degree.assign(bc.betti.size(), {});
    for (const auto& p : bc.points) {
        SpectralPrediction s;
        switch (p.cls) {
        case PointClass::Homological:
            s.point_id = p.id;
            s.degree = p.morse_index;
            break;
        case PointClass::Lower:
            s = pair_prediction(bc, *p.partner, opt);
            break;
        case PointClass::Upper:
            s = pair_prediction(bc, p.id, opt);
            s.point_id = p.id;
            s.degree = p.morse_index;
            s.partner_id = *p.partner;
            break;
        case PointClass::Unclassified:
            throw Error(ErrorCode::HypothesisViolated, "point " + std::to_string(p.id) + " is unclassified");
        }
        ps.per_degree[static_cast<std::size_t>(p.morse_index)].push_back(s);
    }
    finish(ps, opt);
    return ps;
}

PredictionSet predict_relative(const BarannikovComplex& bc, const WindowSpec& w, const PredictOptions& opt)
{
    if (!(w.a < w.b))
        throw Error(ErrorCode::BoundaryMismatch, "window needs a < b");
    const double tol = value_tolerance(bc.points);
    for (const auto& p : bc.points)
        if (std::fabs(p.value - w.a) <= tol || std::fabs(p.value - w.b) <= tol)
            throw Error(ErrorCode::WindowOnCriticalValue, "window level coincides with critical point " + std::to_string(p.id));
    const PredictionSet full = predict_spectrum(bc, opt);
    auto inside = [&](int id) { return bc.point(id).value > w.a && bc.point(id).value < w.b; };
    PredictionSet ps;
    ps.per_degree.assign(full.per_degree.size(), {});
    for (const auto& list : full.per_degree)
        for (auto s : list) {
            if (!inside(s.point_id))
                continue;
            if (s.kind == PredictionKind::Pair && !inside(s.partner_id)) {
                s.kind = PredictionKind::Zero;
                s.coefficient = 0.0;
                s.activation = 0.0;
            }
            ps.per_degree[static_cast<std::size_t>(s.degree)].push_back(s);
        }
    finish(ps, opt);
    return ps;
}

std::string format_predictions(const PredictionSet& ps, const std::vector<double>& hs)
{
    std::ostringstream out;
    out << "# point degree kind coefficient activation kappa";
    char buf[64];
    for (double h : hs) {
        std::snprintf(buf, sizeof buf, " eval(h=%.17g)", h);
        out << buf;
    }
    out << '\n';
    for (const auto& list : ps.per_degree)
        for (const auto& s : list) {
            out << s.point_id << ' ' << s.degree << ' ' << (s.kind == PredictionKind::Pair ? "pair" : "zero");
            for (double v : {s.coefficient, s.activation, s.kappa}) {
                std::snprintf(buf, sizeof buf, " %.17g", v);
                out << buf;
            }
            for (double h : hs) {
                std::snprintf(buf, sizeof buf, " %.17g", s.eval(h));
                out << buf;
            }
            out << '\n';
        }
    return out.str();
}

}  // namespace mbw
