#include "cascade/dist_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include <Eigen/Dense>
#include <json.hpp>

#include "cascade/util.hpp"

namespace cascade {

std::size_t BinnedPdf::occupied_bins() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
}

namespace {

void finalize_densities(BinnedPdf& pdf) {
    pdf.densities.resize(pdf.counts.size());
    const double n = static_cast<double>(pdf.sample_count);
    for (std::size_t i = 0; i < pdf.counts.size(); ++i)
        pdf.densities[i] = static_cast<double>(pdf.counts[i]) / (n * pdf.width(i));
}

BinnedPdf continuous_bins(std::span<const double> xs, double lo, double hi, std::size_t bpd) {
    BinnedPdf pdf;
    pdf.sample_count = xs.size();
    const double decades = std::log10(hi / lo);
    const auto nb = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(decades * bpd - 1e-9)));
    pdf.edges.resize(nb + 1);
    for (std::size_t i = 0; i <= nb; ++i) pdf.edges[i] = lo * std::pow(10.0, static_cast<double>(i) / bpd);
    pdf.edges.front() = lo;
    pdf.edges.back() = std::max(pdf.edges.back(), hi);
    if (pdf.edges.back() <= pdf.edges.front()) pdf.edges.back() = lo * std::pow(10.0, 1.0 / bpd);
    pdf.counts.assign(nb, 0);
    for (double x : xs) {
        auto i = static_cast<std::size_t>(std::clamp(std::floor(std::log10(x / lo) * bpd), 0.0,
                                                     static_cast<double>(nb - 1)));
        while (i + 1 < nb && x >= pdf.edges[i + 1]) ++i;
        while (i > 0 && x < pdf.edges[i]) --i;
        ++pdf.counts[i];
    }
    pdf.centers.resize(nb);
    for (std::size_t i = 0; i < nb; ++i) pdf.centers[i] = std::sqrt(pdf.edges[i] * pdf.edges[i + 1]);
    finalize_densities(pdf);
    return pdf;
}

BinnedPdf integer_bins(std::span<const double> xs, double lo, double hi, std::size_t bpd) {
    BinnedPdf pdf;
    pdf.integer_valued = true;
    pdf.sample_count = xs.size();
    // Integer ranges [first[i], first[i+1]) from log-spaced cut points.
    std::vector<double> first{lo};
    for (std::size_t i = 1;; ++i) {
        const double cut = std::ceil(lo * std::pow(10.0, static_cast<double>(i) / bpd) - 1e-9);
        if (cut > hi) break;
        if (cut > first.back()) first.push_back(cut);
    }
    first.push_back(hi + 1);
    const std::size_t nb = first.size() - 1;
    pdf.edges.resize(nb + 1);
    for (std::size_t i = 0; i <= nb; ++i) pdf.edges[i] = first[i] - 0.5;
    pdf.centers.resize(nb);
    for (std::size_t i = 0; i < nb; ++i) pdf.centers[i] = std::sqrt(first[i] * (first[i + 1] - 1));
    pdf.counts.assign(nb, 0);
    for (double x : xs) {
        auto it = std::upper_bound(first.begin(), first.end(), x);
        ++pdf.counts[static_cast<std::size_t>(it - first.begin()) - 1];
    }
    finalize_densities(pdf);
    return pdf;
}

}  // namespace

BinnedPdf log_binned_pdf(std::span<const double> samples, std::size_t bins_per_decade, BinningMode mode,
                         std::size_t min_samples) {
    if (bins_per_decade == 0) throw FitError("bins_per_decade must be positive");
    if (samples.size() < min_samples)
        throw FitError("need at least " + std::to_string(min_samples) + " samples, got " +
                       std::to_string(samples.size()));
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0;
    bool integral = true;
    for (double x : samples) {
        if (!(x > 0) || !std::isfinite(x))
            throw FitError("log binning needs positive finite samples, got " + format_double(x));
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        integral = integral && x == std::floor(x);
    }
    if (mode == BinningMode::integer && !integral) throw FitError("integer binning of non-integer samples");
    const bool use_integer = mode == BinningMode::integer || (mode == BinningMode::automatic && integral);
    return use_integer ? integer_bins(samples, lo, hi, bins_per_decade)
                       : continuous_bins(samples, lo, hi, bins_per_decade);
}

void write_pdf_tsv(std::ostream& out, const BinnedPdf& pdf) {
    out << "bin_center\tdensity\n";
    for (std::size_t i = 0; i < pdf.bin_count(); ++i)
        out << format_double(pdf.centers[i]) << '\t' << format_double(pdf.densities[i]) << '\n';
}

double bimodal_density(double x, const BimodalParams& p) {
    return p.c1 * std::pow(x + p.x0, -p.alpha) + p.c2 * std::exp(-p.lambda * std::pow(x, p.beta));
}

std::array<double, 6> bimodal_gradient(double x, const BimodalParams& p) {
    const double base = x + p.x0;
    const double power = std::pow(base, -p.alpha);
    const double xb = std::pow(x, p.beta);
    const double stretched = std::exp(-p.lambda * xb);
    return {
        power,
        -p.alpha * p.c1 * power / base,
        -p.c1 * power * std::log(base),
        stretched,
        -p.c2 * xb * stretched,
        -p.c2 * p.lambda * xb * std::log(x) * stretched,
    };
}

LeastSquaresModel bimodal_model(bool fix_c2_zero) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    LeastSquaresModel m;
    m.parameter_count = 6;
    m.value = [](double x, std::span<const double> p) { return bimodal_density(x, BimodalParams::from_array(p)); };
    m.gradient = [](double x, std::span<const double> p, std::span<double> g) {
        const auto grad = bimodal_gradient(x, BimodalParams::from_array(p));
        std::copy(grad.begin(), grad.end(), g.begin());
    };
    //          c1     x0     alpha  c2    lambda beta
    m.lower = {0.0,   1e-12, 1e-9,  0.0,  0.0,   1e-6};
    m.upper = {inf,   10.0,  10.0,  inf,  inf,   3.0};
    m.fixed = {false, false, false, fix_c2_zero, fix_c2_zero, fix_c2_zero};
    return m;
}

LmResult levenberg_marquardt(const LeastSquaresModel& model, std::span<const double> x,
                             std::span<const double> y, std::span<const double> init, const LmOptions& opt) {
    const std::size_t np = model.parameter_count;
    if (x.size() != y.size()) throw FitError("x and y differ in length");
    if (init.size() != np) throw FitError("initial parameter vector has the wrong size");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw FitError("non-finite data point");

    std::vector<std::size_t> free;
    for (std::size_t j = 0; j < np; ++j)
        if (model.fixed.empty() || !model.fixed[j]) free.push_back(j);
    const auto nf = static_cast<Eigen::Index>(free.size());

    auto clamp_params = [&](std::vector<double>& p) {
        for (std::size_t j = 0; j < np; ++j) p[j] = std::clamp(p[j], model.lower[j], model.upper[j]);
    };
    auto sse_of = [&](const std::vector<double>& p) {
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - model.value(x[i], p);
            s += r * r;
        }
        return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
    };

    LmResult result;
    result.params.assign(init.begin(), init.end());
    clamp_params(result.params);
    result.sse = sse_of(result.params);
    result.sse_trace.push_back(result.sse);
    if (nf == 0 || result.sse == 0) {
        result.converged = true;
        return result;
    }

    double damping = opt.initial_damping;
    std::vector<double> grad(np);
    std::vector<double> trial(np);
    Eigen::MatrixXd jtj(nf, nf);
    Eigen::VectorXd jtr(nf);

    while (result.iterations < opt.max_iter) {
        ++result.iterations;
        jtj.setZero();
        jtr.setZero();
        for (std::size_t i = 0; i < x.size(); ++i) {
            model.gradient(x[i], result.params, grad);
            const double r = y[i] - model.value(x[i], result.params);
            for (Eigen::Index a = 0; a < nf; ++a) {
                const double ga = grad[free[a]];
                jtr(a) += ga * r;
                for (Eigen::Index b = 0; b <= a; ++b) jtj(a, b) += ga * grad[free[b]];
            }
        }
        jtj.triangularView<Eigen::StrictlyUpper>() = jtj.transpose();
        const Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-300);

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += damping * diag;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
            Eigen::VectorXd step;
            bool ok = ldlt.info() == Eigen::Success;
            if (ok) {
                step = ldlt.solve(jtr);
                ok = step.allFinite();
            }
            if (ok) {
                trial = result.params;
                for (Eigen::Index k = 0; k < nf; ++k) trial[free[k]] += step(k);
                clamp_params(trial);
                const double sse = sse_of(trial);
                if (sse < result.sse) {
                    double dn = 0, pn = 0;
                    for (std::size_t j : free) {
                        dn += (trial[j] - result.params[j]) * (trial[j] - result.params[j]);
                        pn += result.params[j] * result.params[j];
                    }
                    const double rel_improvement = (result.sse - sse) / result.sse;
                    result.params = trial;
                    result.sse = sse;
                    result.sse_trace.push_back(sse);
                    damping = std::max(damping / 10.0, 1e-15);
                    accepted = true;
                    if (sse == 0 || rel_improvement < opt.tol || std::sqrt(dn) < opt.tol * (std::sqrt(pn) + opt.tol)) {
                        result.converged = true;
                        return result;
                    }
                    continue;
                }
            }
            damping *= 10.0;
            if (damping > 1e20) {
                // No descent direction left: stationary point (or pinned against the bounds).
                result.converged = true;
                return result;
            }
        }
    }
    return result;
}

BimodalFit fit_bimodal(const BinnedPdf& pdf, const FitOptions& opt) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < pdf.bin_count(); ++i) {
        if (pdf.counts[i] == 0) continue;
        xs.push_back(pdf.centers[i]);
        ys.push_back(pdf.densities[i]);
    }
    if (xs.size() < opt.min_occupied_bins)
        throw FitError("insufficient support: " + std::to_string(xs.size()) + " occupied bins, need " +
                       std::to_string(opt.min_occupied_bins));

    const LeastSquaresModel model = bimodal_model(opt.fix_c2_zero);
    const double x_mid = std::sqrt(xs.front() * xs.back());
    const double y_max = *std::max_element(ys.begin(), ys.end());

    std::optional<LmResult> best;
    for (double alpha : {1.5, 2.0, 3.0, 4.5}) {
        for (double beta : {0.6, 1.0}) {
            for (double x0 : {1e-3, 0.5}) {
                BimodalParams p;
                p.alpha = alpha;
                p.x0 = x0;
                p.c1 = ys.front() * std::pow(xs.front() + x0, alpha);
                if (!opt.fix_c2_zero) {
                    p.beta = beta;
                    p.lambda = 1.0 / std::pow(x_mid, beta);
                    p.c2 = 1e-2 * y_max;
                }
                const auto init = p.to_array();
                LmResult r = levenberg_marquardt(model, xs, ys, init, opt.lm);
                if (!best || r.sse < best->sse) best = std::move(r);
            }
        }
    }
    BimodalFit fit;
    fit.params = BimodalParams::from_array(best->params);
    fit.residual_sse = best->sse;
    fit.iterations = best->iterations;
    fit.converged = best->converged;
    return fit;
}

void write_fit_json(std::ostream& out, const std::string& metric_name, const BimodalFit& fit) {
    nlohmann::ordered_json j;
    j["metric_name"] = metric_name;
    j["params"] = {{"c1", fit.params.c1},   {"x0", fit.params.x0},         {"alpha", fit.params.alpha},
                   {"c2", fit.params.c2},   {"lambda", fit.params.lambda}, {"beta", fit.params.beta}};
    j["sse"] = fit.residual_sse;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    out << j.dump(2) << '\n';
}

}  // namespace cascade
