#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cascade {

class FitError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class BinningMode {
    automatic,   // integer binning when every sample is a whole number
    continuous,
    integer,
};

/// Empirical density on logarithmically spaced bins.
///
/// In integer mode bin edges sit on half-integers so that each bin holds a
/// contiguous run of whole numbers and its width is the number of integers it
/// covers; bins that would contain no integer are merged away.
struct BinnedPdf {
    std::vector<double> edges;      // size() == densities.size() + 1
    std::vector<double> centers;    // geometric bin centres
    std::vector<double> densities;
    std::vector<std::uint64_t> counts;
    std::size_t sample_count = 0;
    bool integer_valued = false;

    std::size_t bin_count() const { return densities.size(); }
    double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
    std::size_t occupied_bins() const;
};

/// Throws FitError for non-positive samples (naming the value) or fewer than
/// `min_samples` samples.
BinnedPdf log_binned_pdf(std::span<const double> samples, std::size_t bins_per_decade = 10,
                         BinningMode mode = BinningMode::automatic, std::size_t min_samples = 100);

void write_pdf_tsv(std::ostream& out, const BinnedPdf& pdf);

/// f(x) = c1 (x + x0)^-alpha + c2 exp(-lambda x^beta)
struct BimodalParams {
    double c1 = 0, x0 = 0, alpha = 0, c2 = 0, lambda = 0, beta = 1;

    std::array<double, 6> to_array() const { return {c1, x0, alpha, c2, lambda, beta}; }
    static BimodalParams from_array(std::span<const double> p) { return {p[0], p[1], p[2], p[3], p[4], p[5]}; }
};

double bimodal_density(double x, const BimodalParams& p);
/// Analytic partial derivatives in (c1, x0, alpha, c2, lambda, beta) order.
std::array<double, 6> bimodal_gradient(double x, const BimodalParams& p);

/// A model y = f(x; p) with analytic gradient and a bound box.
struct LeastSquaresModel {
    std::size_t parameter_count = 0;
    std::function<double(double, std::span<const double>)> value;
    std::function<void(double, std::span<const double>, std::span<double>)> gradient;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<bool> fixed;  // fixed parameters keep their initial value
};

LeastSquaresModel bimodal_model(bool fix_c2_zero = false);

struct LmOptions {
    std::size_t max_iter = 1000;
    double tol = 1e-12;
    double initial_damping = 1.0;
};

struct LmResult {
    std::vector<double> params;
    double sse = 0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> sse_trace;  // initial SSE followed by the SSE after each accepted step
};

/// Bounded Levenberg-Marquardt with Marquardt diagonal scaling. Rejected
/// steps multiply the damping by 10, accepted steps divide it by 10. The
/// iterate is clamped to the bound box after every step; a step is accepted
/// only if it strictly lowers the sum of squared residuals.
LmResult levenberg_marquardt(const LeastSquaresModel& model, std::span<const double> x,
                             std::span<const double> y, std::span<const double> init,
                             const LmOptions& options = {});

struct BimodalFit {
    BimodalParams params;
    double residual_sse = 0;
    std::size_t iterations = 0;
    bool converged = false;
};

struct FitOptions {
    bool fix_c2_zero = false;
    std::size_t min_occupied_bins = 8;
    LmOptions lm;
};

/// Multi-start LM fit of the bimodal law to the occupied bins of `pdf`
/// (unweighted least squares in linear density space). Returns the lowest-SSE start.
BimodalFit fit_bimodal(const BinnedPdf& pdf, const FitOptions& options = {});

void write_fit_json(std::ostream& out, const std::string& metric_name, const BimodalFit& fit);

}  // namespace cascade
