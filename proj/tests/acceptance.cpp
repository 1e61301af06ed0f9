// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit code is the failure count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "micam/cam.hpp"
#include "micam/counterfactual.hpp"
#include "micam/eval.hpp"
#include "micam/mi.hpp"
#include "micam/model.hpp"
#include "support/fixtures.hpp"

using namespace micam;
namespace mt = micam::testing;
namespace fs = std::filesystem;

namespace {

struct Failure {
    std::string message;
};

void require(bool condition, const std::string& message) {
    if (!condition)
        throw Failure{message};
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

class Harness {
public:
    void run(const std::string& name, const std::function<void()>& body) {
        try {
            body();
            std::printf("[PASS] %s\n", name.c_str());
        } catch (const Failure& f) {
            ++failures_;
            std::printf("[FAIL] %s: %s\n", name.c_str(), f.message.c_str());
        } catch (const std::exception& e) {
            ++failures_;
            std::printf("[FAIL] %s: unexpected error: %s\n", name.c_str(), e.what());
        }
    }

    int failures() const { return failures_; }

private:
    int failures_ = 0;
};

DiscreteVector random_vector(std::mt19937_64& rng, size_t len, int bins) {
    std::vector<int> symbols(len);
    for (int& s : symbols)
        s = static_cast<int>(rng() % static_cast<uint64_t>(bins));
    return DiscreteVector{std::move(symbols), bins};
}

double mi_double_sum(const DiscreteVector& a, const DiscreteVector& b) {
    const int bins = a.bin_count;
    const double n = static_cast<double>(a.symbols.size());
    std::vector<double> joint(static_cast<size_t>(bins) * bins, 0.0);
    std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
    for (size_t i = 0; i < a.symbols.size(); ++i) {
        joint[static_cast<size_t>(a.symbols[i]) * bins + b.symbols[i]] += 1.0 / n;
        pa[static_cast<size_t>(a.symbols[i])] += 1.0 / n;
        pb[static_cast<size_t>(b.symbols[i])] += 1.0 / n;
    }
    double mi = 0.0;
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            const double p = joint[static_cast<size_t>(i) * bins + j];
            if (p > 0.0)
                mi += p * std::log2(p / (pa[i] * pb[j]));
        }
    return mi;
}

Plane random_plane(std::mt19937_64& rng, int h, int w) {
    Plane p(h, w);
    for (Eigen::Index i = 0; i < p.size(); ++i)
        p.data()[i] = static_cast<double>(rng() % 4096) / 256.0 - 8.0;
    return p;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_mi_oracle() {
    std::mt19937_64 rng(20240901);
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int bins = 2 + static_cast<int>(rng() % 7);       // B <= 8
        const size_t len = 1 + rng() % 64;                      // len <= 64
        const DiscreteVector a = random_vector(rng, len, bins);
        const DiscreteVector b = random_vector(rng, len, bins);
        worst = std::max(worst, std::abs(mutual_information(a, b) - mi_double_sum(a, b)));
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    require(worst <= 1e-9, "max |decomposition - double sum| = " + fmt(worst));
    require(elapsed < 1.0, "took " + fmt(elapsed) + " s (budget 1 s)");
}

void criterion_information_identities() {
    std::mt19937_64 rng(20240902);
    for (int trial = 0; trial < 1000; ++trial) {
        const int bins = 2 + static_cast<int>(rng() % 7);
        const size_t len = 1 + rng() % 64;
        const DiscreteVector a = random_vector(rng, len, bins);
        const DiscreteVector b = random_vector(rng, len, bins);

        const double h_a = entropy(histogram(a));
        require(std::abs(mutual_information(a, a) - h_a) <= 1e-9,
                "I(a,a) != H(a) at trial " + std::to_string(trial));

        const DiscreteVector constant{std::vector<int>(len, 0), bins};
        require(mutual_information(constant, b) == 0.0,
                "I(const, b) != 0 at trial " + std::to_string(trial));

        const double mi = mutual_information(a, b);
        const double bound = std::min(h_a, entropy(histogram(b))) + 1e-9;
        require(mi >= 0.0 && mi <= bound, "I out of [0, min(H)] at trial " +
                                              std::to_string(trial) + ": " + fmt(mi));
    }
}

void criterion_micam_structural() {
    std::mt19937_64 rng(20240903);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 4);
        ActivationStack stack;
        stack.layer = "conv";
        for (int i = 0; i < k; ++i)
            stack.planes.push_back(random_plane(rng, 4, 5));
        WeightVector w;
        w.weights = Eigen::VectorXd::Zero(k);
        for (int i = 0; i < k; ++i)
            w.weights[i] = static_cast<double>(rng() % 1000) / 999.0;

        // Uniform positive scaling.
        WeightVector scaled = w;
        scaled.weights *= 37.5;
        const SaliencyMap base = combine(stack, w, 10, 8);
        const SaliencyMap after = combine(stack, scaled, 10, 8);
        require((base.plane - after.plane).cwiseAbs().maxCoeff() <= 1e-9,
                "scaling changed the map at trial " + std::to_string(trial));

        // Simultaneous channel/weight permutation.
        std::vector<int> perm(static_cast<size_t>(k));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        ActivationStack permuted;
        permuted.layer = "conv";
        WeightVector wp;
        wp.weights = Eigen::VectorXd::Zero(k);
        for (int i = 0; i < k; ++i) {
            permuted.planes.push_back(stack.planes[static_cast<size_t>(perm[i])]);
            wp.weights[i] = w.weights[perm[i]];
        }
        const SaliencyMap permuted_map = combine(permuted, wp, 10, 8);
        require((base.plane - permuted_map.plane).cwiseAbs().maxCoeff() <= 1e-9,
                "permutation changed the map at trial " + std::to_string(trial));
    }

    // Class-agnosticism: the requested class index does not enter mi-cam.
    const ModelHandle m = ModelHandle::load(mt::fixture_dir() + "/tiny_cnn.json");
    const Image img = mt::random_image(16, 16, 20240903);
    const Explanation c0 = explain(m, img, "", Method::MiCam, 0, 32);
    const Explanation c2 = explain(m, img, "", Method::MiCam, 2, 32);
    require((c0.map.plane - c2.map.plane).cwiseAbs().maxCoeff() == 0.0 &&
                (c0.weights.weights - c2.weights.weights).cwiseAbs().maxCoeff() == 0.0,
            "mi-cam output depends on the class index");
}

void criterion_metric_formulas() {
    const std::vector<EvalRecord> drop{{"i", 0, 0.8, 0.6, 0.0}};
    require(std::abs(average_drop(drop) - 25.0) <= 1e-9,
            "AD(0.8 -> 0.6) = " + fmt(average_drop(drop)));

    const std::vector<EvalRecord> rise{{"i", 0, 1.0, 0.5, 0.1}};
    require(std::abs(average_increase(rise) - 80.0) <= 1e-9,
            "AI(0.5 vs 0.1) = " + fmt(average_increase(rise)));

    Curve linear;
    for (int i = 0; i <= 100; ++i) {
        linear.fractions.push_back(i / 100.0);
        linear.scores.push_back(1.0 - i / 100.0);
    }
    require(std::abs(auc(linear) - 0.5) <= 1e-12, "AUC(1 -> 0) = " + fmt(auc(linear)));

    SaliencyMap uniform;
    uniform.plane = Plane::Constant(8, 8, 0.42);
    const double e = ebpg(uniform, BBox{4, 0, 4, 4});
    require(std::abs(e - 25.0) <= 1e-9, "EBPG(uniform, quarter box) = " + fmt(e));
}

void criterion_curve_endpoints() {
    const ModelHandle m = mt::mean_intensity_model(10, 10);
    Image img(10, 10, 1, ColorSpace::Gray);
    std::mt19937_64 rng(20240905);
    for (double& v : img.data())
        v = static_cast<double>(rng() % 256);
    SaliencyMap s;
    s.plane = Plane(10, 10);
    for (Eigen::Index i = 0; i < s.plane.size(); ++i)
        s.plane.data()[i] = static_cast<double>(rng() % 997) / 996.0;

    const Curve del = deletion_curve(m, img, s, 0);
    require(del.scores.front() == m.forward(img).values[0],
            "deletion point 0 differs from the forward score");

    const Curve ins = insertion_curve(m, img, s, 0);
    require(std::abs(ins.scores.back() - m.forward(img).values[0]) <= 1e-6,
            "insertion endpoint off by " +
                fmt(std::abs(ins.scores.back() - m.forward(img).values[0])));

    // Linearity on the mean-intensity fixture (constant image).
    const Image flat = Image::constant(10, 10, 1, ColorSpace::Gray, 170.0);
    const double full = 170.0 / 255.0;
    const Curve del_flat = deletion_curve(m, flat, s, 0);
    const Curve ins_flat = insertion_curve(m, flat, s, 0);
    for (size_t i = 0; i < del_flat.fractions.size(); ++i) {
        require(std::abs(del_flat.scores[i] - full * (1.0 - del_flat.fractions[i])) <= 1e-6,
                "deletion curve nonlinear at point " + std::to_string(i));
        require(std::abs(ins_flat.scores[i] - full * ins_flat.fractions[i]) <= 1e-6,
                "insertion curve nonlinear at point " + std::to_string(i));
    }
}

void criterion_counterfactual_causality() {
    const int size = 16;
    const ModelHandle m = mt::probe_model(size, size);
    const std::vector<Method> methods{Method::MiCam};

    int ok = 0;
    for (uint64_t trial = 0; trial < 10; ++trial) {
        const Image img = mt::speckled_image(size, size, 1000 + trial);

        PerturbPolicy top;
        top.kind = PerturbKind::OccludeTopSalient;
        top.fraction = 0.5;
        const auto t = counterfactual_run(m, img, "", top, methods, -1, 16);
        const double top_div = t[0].divergence.relative_l1;

        std::vector<double> rnd;
        for (uint64_t s = 0; s < 10; ++s) {
            PerturbPolicy p;
            p.kind = PerturbKind::RandomPatch;
            const bool horizontal = (s % 2) == 0;
            p.patch_w = horizontal ? size : size / 2;
            p.patch_h = horizontal ? size / 2 : size;
            p.seed = trial * 100 + s;
            const auto r = counterfactual_run(m, img, "", p, methods, -1, 16);
            rnd.push_back(r[0].divergence.relative_l1);
        }
        std::sort(rnd.begin(), rnd.end());
        const double median = 0.5 * (rnd[4] + rnd[5]);
        if (top_div > 0.0 && top_div >= median)
            ++ok;
    }
    require(ok >= 8, "top-salient occlusion beat the random median in only " +
                         std::to_string(ok) + "/10 trials");
}

void criterion_sanity_randomization() {
    const ModelHandle m = ModelHandle::load(mt::fixture_dir() + "/tiny_cnn.json");
    const int depth = static_cast<int>(m.parameterized_layer_names().size());

    double sum_abs_rho = 0.0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const Image img = mt::random_image(16, 16, 77000 + seed);
        const Explanation base = explain(m, img, "", Method::MiCam, -1, 32);
        const ModelHandle randomized = m.randomize_cascade(depth, 555 + seed);
        const Explanation after = explain(randomized, img, "", Method::MiCam, -1, 32);
        const std::vector<double> a(base.map.plane.data(),
                                    base.map.plane.data() + base.map.plane.size());
        const std::vector<double> b(after.map.plane.data(),
                                    after.map.plane.data() + after.map.plane.size());
        sum_abs_rho += std::abs(spearman_rank_correlation(a, b));
    }
    const double mean_abs_rho = sum_abs_rho / 10.0;
    require(mean_abs_rho < 0.8,
            "mean |spearman| after full randomization = " + fmt(mean_abs_rho));

    // Correlations are reported per depth in monotone depth order.
    micam::cli::RunConfig cfg;
    cfg.models = {mt::fixture_dir() + "/tiny_cnn.json"};
    cfg.inputs = {mt::fixture_dir() + "/sample.png"};
    cfg.output_dir = mt::make_temp_dir("acceptance_sanity");
    cfg.bins = 32;
    cfg.seed = 99;
    cfg.depths = {2, 1, 3};
    micam::cli::run_sanity(cfg);
    std::istringstream csv(slurp(fs::path(cfg.output_dir) / "sanity.csv"));
    std::string line;
    std::getline(csv, line);  // header
    int previous = -1;
    int rows = 0;
    while (std::getline(csv, line)) {
        if (line.empty())
            continue;
        const int d = std::stoi(line.substr(0, line.find(',')));
        require(d > previous, "sanity depths reported out of order");
        previous = d;
        ++rows;
    }
    require(rows == 4, "expected rows for depth 0 and each requested depth");
}

void criterion_explain_determinism() {
    micam::cli::RunConfig cfg;
    cfg.models = {mt::fixture_dir() + "/tiny_cnn.json"};
    cfg.inputs = {mt::fixture_dir() + "/sample.png"};
    cfg.bins = 64;
    cfg.seed = 7;
    cfg.output_dir = mt::make_temp_dir("acceptance_det_a");
    micam::cli::run_explain(cfg);
    const std::string first = slurp(fs::path(cfg.output_dir) / "sample_saliency.csv");
    cfg.output_dir = mt::make_temp_dir("acceptance_det_b");
    micam::cli::run_explain(cfg);
    const std::string second = slurp(fs::path(cfg.output_dir) / "sample_saliency.csv");
    require(!first.empty() && first == second, "saliency CSV bytes differ between reruns");
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    Harness harness;
    harness.run("mi-oracle-equivalence", criterion_mi_oracle);
    harness.run("information-identities", criterion_information_identities);
    harness.run("mi-cam-structural-invariants", criterion_micam_structural);
    harness.run("metric-formulas", criterion_metric_formulas);
    harness.run("curve-endpoints", criterion_curve_endpoints);
    harness.run("counterfactual-causality", criterion_counterfactual_causality);
    harness.run("sanity-randomization", criterion_sanity_randomization);
    harness.run("explain-determinism", criterion_explain_determinism);

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    harness.run("runtime-budget", [&] {
        require(elapsed < 300.0, "suite took " + fmt(elapsed) + " s (budget 300 s)");
    });

    std::printf("acceptance: %d criterion(s) failed, %.2f s total\n", harness.failures(),
                elapsed);
    return harness.failures();
}
