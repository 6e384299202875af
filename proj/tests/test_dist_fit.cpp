#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cascade/dist_fit.hpp"
#include "cascade/synth.hpp"
#include "support.hpp"

using namespace cascade;
using doctest::Approx;

namespace {

double normalization(const BinnedPdf& pdf) {
    double s = 0;
    for (std::size_t i = 0; i < pdf.bin_count(); ++i) s += pdf.densities[i] * pdf.width(i);
    return s;
}

const BimodalParams kMass{2.10, 2.29e-6, 1.99, 1.46e-3, 0.06, 0.63};

}  // namespace

TEST_CASE("uniform samples give a flat density") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(1.0, 10.0);
    std::vector<double> xs(1'000'000);
    for (auto& x : xs) x = u(rng);
    auto pdf = log_binned_pdf(xs, 10, BinningMode::continuous);
    CHECK(pdf.bin_count() == 10);
    CHECK(normalization(pdf) == Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < pdf.bin_count(); ++i) {
        const double expected = static_cast<double>(xs.size()) * pdf.width(i) / 9.0;
        CHECK(std::abs(static_cast<double>(pdf.counts[i]) - expected) <= 3 * std::sqrt(expected));
        CHECK(pdf.densities[i] == Approx(1.0 / 9).epsilon(0.01));
    }
}

TEST_CASE("binning edge cases") {
    std::vector<double> same(200, 7.0);
    auto pdf = log_binned_pdf(same, 10, BinningMode::continuous);
    CHECK(pdf.occupied_bins() == 1);
    CHECK(pdf.densities[0] == Approx(1.0 / pdf.width(0)));

    auto ipdf = log_binned_pdf(same);
    CHECK(ipdf.integer_valued);
    CHECK(ipdf.occupied_bins() == 1);
    CHECK(ipdf.densities[0] == Approx(1.0));

    std::vector<double> bad(200, 1.0);
    bad[17] = -2.5;
    try {
        log_binned_pdf(bad);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(std::string(e.what()).find("-2.5") != std::string::npos);
    }
    CHECK_THROWS_AS(log_binned_pdf(std::vector<double>(99, 1.0)), FitError);
    CHECK_THROWS_AS(log_binned_pdf(std::vector<double>(200, 1.5), 10, BinningMode::integer), FitError);
}

TEST_CASE("integer binning keeps whole numbers in their own half-open cells") {
    std::mt19937_64 rng(2);
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i) xs.push_back(std::floor(sample_power_law(2.5, 0.0, rng)));
    auto pdf = log_binned_pdf(xs);
    CHECK(pdf.integer_valued);
    CHECK(normalization(pdf) == Approx(1.0).epsilon(1e-12));
    CHECK(pdf.edges[0] == 0.5);
    CHECK(pdf.edges[1] == 1.5);  // value 1 alone
    for (std::size_t i = 0; i + 1 < pdf.edges.size(); ++i) {
        CHECK(pdf.edges[i] < pdf.edges[i + 1]);
        CHECK(pdf.edges[i] - std::floor(pdf.edges[i]) == 0.5);
    }
}

TEST_CASE("Pareto samples give a straight line of slope -2") {
    std::mt19937_64 rng(3);
    std::vector<double> xs(1'000'000);
    for (auto& x : xs) x = sample_power_law(2.0, 0.0, rng);
    auto pdf = log_binned_pdf(xs, 10, BinningMode::continuous);
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < pdf.bin_count(); ++i) {
        if (pdf.counts[i] == 0) continue;
        lx.push_back(std::log10(pdf.centers[i]));
        ly.push_back(std::log10(pdf.densities[i]));
    }
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
        syy += ly[i] * ly[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    CHECK(slope == Approx(-2.0).epsilon(0.05));
    CHECK(r * r > 0.99);
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (int t = 0; t < 100; ++t) {
        BimodalParams p{0.1 + 5 * u(rng), 0.01 + 2 * u(rng), 0.5 + 4 * u(rng),
                        0.01 + 2 * u(rng), 0.01 + 1 * u(rng), 0.3 + 1.5 * u(rng)};
        const double x = std::pow(10.0, 3 * u(rng));
        const auto g = bimodal_gradient(x, p);
        const auto fd = oracle::bimodal_fd_gradient(x, p.to_array());
        for (std::size_t j = 0; j < 6; ++j) {
            const double scale = std::max(std::abs(fd[j]), 1e-280);
            CHECK(std::abs(fd[j] - g[j]) / scale < 1e-6);
            ++checked;
        }
    }
    CHECK(checked == 600);
}

TEST_CASE("LM recovers exact bimodal data from a perturbed start") {
    std::vector<double> xs, ys;
    for (int i = 0; i <= 50; ++i) {
        const double x = std::pow(10.0, i / 10.0);
        xs.push_back(x);
        ys.push_back(bimodal_density(x, kMass));
    }
    auto init = kMass.to_array();
    const double factors[6] = {1.2, 0.8, 0.8, 1.2, 0.8, 1.2};
    for (int j = 0; j < 6; ++j) init[j] *= factors[j];
    LmOptions opt;
    opt.max_iter = 5000;
    opt.tol = 1e-15;
    auto r = levenberg_marquardt(bimodal_model(), xs, ys, init, opt);
    CHECK(r.params[2] == Approx(1.99).epsilon(0.05 / 1.99));
    CHECK(r.sse < 1e-12);
    for (std::size_t i = 1; i < r.sse_trace.size(); ++i) CHECK(r.sse_trace[i] < r.sse_trace[i - 1]);
}

TEST_CASE("LM on a model linear in its parameters") {
    LeastSquaresModel quad;
    quad.parameter_count = 3;
    quad.value = [](double x, std::span<const double> p) { return p[0] + p[1] * x + p[2] * x * x; };
    quad.gradient = [](double x, std::span<const double>, std::span<double> g) {
        g[0] = 1;
        g[1] = x;
        g[2] = x * x;
    };
    const double inf = std::numeric_limits<double>::infinity();
    quad.lower = {-inf, -inf, -inf};
    quad.upper = {inf, inf, inf};
    std::vector<double> xs, ys;
    for (int i = -5; i <= 5; ++i) {
        xs.push_back(i);
        ys.push_back(1.5 - 2.0 * i + 0.25 * i * i);
    }
    std::vector<double> init{0, 0, 0};
    auto r = levenberg_marquardt(quad, xs, ys, init);
    CHECK(r.converged);
    CHECK(r.params[0] == Approx(1.5).epsilon(1e-9));
    CHECK(r.params[1] == Approx(-2.0).epsilon(1e-9));
    CHECK(r.params[2] == Approx(0.25).epsilon(1e-9));
    CHECK(r.sse < 1e-18);

    // fixed parameters keep their initial value; bounds clamp
    quad.fixed = {false, false, true};
    quad.lower[0] = 2.0;
    std::vector<double> init2{3.0, 0.0, 0.25};
    auto f = levenberg_marquardt(quad, xs, ys, init2);
    CHECK(f.params[2] == 0.25);
    CHECK(f.params[0] >= 2.0);
    CHECK_THROWS_AS(levenberg_marquardt(quad, xs, std::vector<double>(3, 0.0), init2), FitError);
}

TEST_CASE("max_iter exhaustion returns best so far unconverged") {
    std::vector<double> xs, ys;
    for (int i = 0; i <= 40; ++i) {
        xs.push_back(std::pow(10.0, i / 10.0));
        ys.push_back(bimodal_density(xs.back(), kMass));
    }
    BimodalParams start{1.0, 0.5, 3.0, 0.01, 0.5, 1.0};
    LmOptions opt;
    opt.max_iter = 2;
    auto r = levenberg_marquardt(bimodal_model(), xs, ys, start.to_array(), opt);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 2);
    CHECK(r.sse <= r.sse_trace.front());
}

TEST_CASE("pure power-law samples with the stretched term pinned off") {
    // single draws scatter by about 0.05 in alpha, so judge the median of five
    for (double alpha : {2.47, 3.46}) {
        const double x0 = alpha < 3 ? 0.01 : 0.5;
        std::vector<double> fitted;
        for (std::uint64_t draw = 0; draw < 5; ++draw) {
            std::mt19937_64 rng(static_cast<std::uint64_t>(alpha * 100) + draw);
            std::vector<double> xs(1'000'000);
            for (auto& x : xs) x = sample_power_law(alpha, x0, rng);
            FitOptions fo;
            fo.fix_c2_zero = true;
            auto fit = fit_bimodal(log_binned_pdf(xs, 10, BinningMode::continuous), fo);
            CHECK(fit.params.c2 == 0.0);
            fitted.push_back(fit.params.alpha);
        }
        std::sort(fitted.begin(), fitted.end());
        CHECK(fitted[2] == Approx(alpha).epsilon(0.1 / alpha));
    }
}

TEST_CASE("flat density fits alpha near zero") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(1.0, 1000.0);
    std::vector<double> xs(200'000);
    for (auto& x : xs) x = u(rng);
    FitOptions fo;
    fo.fix_c2_zero = true;
    auto fit = fit_bimodal(log_binned_pdf(xs, 10, BinningMode::continuous), fo);
    CHECK(fit.converged);
    CHECK(fit.params.alpha < 0.05);
}

TEST_CASE("too few occupied bins") {
    std::vector<double> xs;
    for (int i = 0; i < 300; ++i) xs.push_back(1.0 + i % 3);
    try {
        fit_bimodal(log_binned_pdf(xs));
        FAIL("expected insufficient support");
    } catch (const FitError& e) {
        CHECK(std::string(e.what()).find("insufficient support") == 0);
    }
}

TEST_CASE("fits are deterministic and serialise") {
    std::mt19937_64 rng(7);
    std::vector<double> xs(50'000);
    for (auto& x : xs) x = sample_bimodal(kMass, rng);
    auto pdf = log_binned_pdf(xs, 10, BinningMode::continuous);
    auto a = fit_bimodal(pdf);
    auto b = fit_bimodal(pdf);
    CHECK(a.params.to_array() == b.params.to_array());
    std::ostringstream j;
    write_fit_json(j, "mass", a);
    for (const char* key : {"\"metric_name\"", "\"c1\"", "\"x0\"", "\"alpha\"", "\"c2\"", "\"lambda\"", "\"beta\"",
                            "\"sse\"", "\"iterations\"", "\"converged\""})
        CHECK(j.str().find(key) != std::string::npos);
    std::ostringstream t;
    write_pdf_tsv(t, pdf);
    CHECK(t.str().rfind("bin_center\tdensity\n", 0) == 0);
}
