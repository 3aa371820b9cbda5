// Acceptance suite: one check per release criterion, each printed as a
// single PASS/FAIL line with the measured quantity next to its bound.
// argv[1] must point at the frameflow CLI binary (wired up by CMake).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "frameflow/hyperbolicity.hpp"
#include "frameflow/measure.hpp"
#include "frameflow/shadow.hpp"
#include "frameflow/system.hpp"
#include "oracles.hpp"

using namespace frameflow;
namespace fs = std::filesystem;

namespace {

const double kLyap = std::log((3 + std::sqrt(5.0)) / 2);  // 0.96242365...
std::string cli_path;
int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::printf("%s criterion %2d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

int run_cli(const std::string& args) {
    std::string cmd = cli_path + " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("missing output file " + p.string());
    return nlohmann::json::parse(in);
}

// 1. cat-map spectrum through the CLI: right exponents, under a second
void criterion_1() {
    fs::remove_all("acc_out1");
    auto t0 = std::chrono::steady_clock::now();
    int code = run_cli("spectrum --system cat --steps 10000 --seed 7 --out acc_out1");
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = code == 0 && secs < 1.0;
    double err = 1e9;
    if (code == 0) {
        auto exps = read_json("acc_out1/spectrum.json").at("payload").at("result").at("exponents");
        err = std::max(std::fabs(exps[0].get<double>() + kLyap),
                       std::fabs(exps[1].get<double>() - kLyap));
        ok = ok && err < 1e-3;
    }
    std::ostringstream os;
    os << "cat spectrum error " << err << " (tol 1e-3), runtime " << secs << " s (< 1 s)";
    report(1, ok, os.str());
    fs::remove_all("acc_out1");
}

// 2. growth identity: averaged rate integral vs logarithmic growth
void criterion_2() {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    int samples = 0;
    for (const char* name : {"rotation-flow", "suspension:diag", "suspension:cat"}) {
        SystemSpec sys = make_system(name);
        for (int trial = 0; trial < 7 && samples < 20; ++trial) {
            Vec w = oracles::random_gauss(rng, sys.ambient_dim);
            Vec x = oracles::random_gauss(rng, sys.ambient_dim);
            x = transversal_project(sys.evaluate(w), x);
            if (norm(x) < 1e-6) continue;
            GrowthTrace tr = unit_growth_trace(sys, w, normalized(x), 10.0, 1e-3);
            double diff = std::fabs(tr.log_growth.back() - trapezoid_rate_integral(tr)) / 10.0;
            worst = std::max(worst, diff);
            ++samples;
        }
    }
    std::ostringstream os;
    os << "growth identity worst gap " << worst << " over " << samples
       << " samples, T=10 h=1e-3 (tol 1e-6)";
    report(2, samples >= 20 && worst <= 1e-6, os.str());
}

// 3. analytic rate vs central finite differences at O(h^2)
void criterion_3() {
    std::mt19937_64 rng(77);
    std::vector<double> ratios;
    double worst_err = 0.0;
    int samples = 0;
    for (const char* name : {"rotation-flow", "suspension:diag"}) {
        SystemSpec sys = make_system(name);
        for (int trial = 0; trial < 50; ++trial) {
            Vec w = oracles::random_gauss(rng, sys.ambient_dim);
            FrameState fsr = random_frame(sys, w, 1, 5000 + trial);
            double analytic = qualitative_rate(sys, fsr, 0).value;
            double e1 = std::fabs(oracles::fd_qualitative_rate(sys, fsr, 0, 2e-2, 1e-3) - analytic);
            double e2 = std::fabs(oracles::fd_qualitative_rate(sys, fsr, 0, 1e-2, 1e-3) - analytic);
            worst_err = std::max(worst_err, e2);
            if (e1 > 1e-10) ratios.push_back(e1 / e2);
            ++samples;
        }
    }
    std::sort(ratios.begin(), ratios.end());
    double median = ratios.empty() ? 0.0 : ratios[ratios.size() / 2];
    bool ok = samples == 100 && ratios.size() > 60 && median > 3.0 && median < 5.0 &&
              worst_err < 5e-4;
    std::ostringstream os;
    os << "rate formula: median halving ratio " << median << " (expect ~4), worst fd error "
       << worst_err << " over " << samples << " samples";
    report(3, ok, os.str());
}

// 4. exact periodic counts and Newton recovery
void criterion_4() {
    Mat a = Mat::from_rows({{2, 1}, {1, 1}});
    SystemSpec cat = make_system("cat");
    bool counts_ok = toral_periodic_point_count(a, 1) == 1 &&
                     toral_periodic_point_count(a, 2) == 5 &&
                     toral_periodic_point_count(a, 3) == 16;
    double worst = 0.0;
    int recovered = 0, total = 0;
    for (int m = 1; m <= 3; ++m) {
        for (const auto& orbit : enumerate_periodic_toral(a, m)) {
            Vec p = orbit.point;
            for (long i = 0; i < static_cast<long>(orbit.period); ++i) {
                RecurrentSegment seg;
                seg.start = reduce_state(cat, {p[0] + 1e-3, p[1] - 1e-3});
                seg.span_steps = static_cast<long>(orbit.period);
                seg.span_time = orbit.period;
                seg.gap = torus_distance(seg.start, evolve_map(cat, seg.start, seg.span_steps));
                PeriodicOrbit refined = refine_periodic(cat, seg);
                double dist = 1e9;
                Vec q = refined.point;
                for (long k = 0; k < static_cast<long>(refined.period); ++k) {
                    dist = std::min(dist, torus_distance(q, p));
                    q = evolve_map(cat, std::move(q), 1);
                }
                worst = std::max(worst, dist);
                ++total;
                if (dist < 1e-10) ++recovered;
                p = evolve_map(cat, std::move(p), 1);
            }
        }
    }
    bool ok = counts_ok && recovered == total && total == 1 + 5 + 16;
    std::ostringstream os;
    os << "counts 1/5/16 " << (counts_ok ? "exact" : "WRONG") << "; Newton recovered "
       << recovered << "/" << total << " seeds, worst offset " << worst << " (tol 1e-10)";
    report(4, ok, os.str());
}

// 5. periodic-orbit bounds bracket the empirical spectrum extremes
void criterion_5() {
    Mat a = Mat::from_rows({{2, 1}, {1, 1}});
    std::vector<PeriodicOrbit> orbits;
    for (int m = 1; m <= 3; ++m)
        for (auto& o : enumerate_periodic_toral(a, m)) orbits.push_back(o);
    auto bounds = extremal_exponent_bounds(orbits);

    SystemSpec cat = make_system("cat");
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int seed = 1; seed <= 20; ++seed) {
        Vec w0 = oracles::random_state(rng, 2);
        SpectrumEstimate est =
            lyapunov_spectrum(cat, w0, 2, 30000, SpectrumParams{1e-3, 1, static_cast<uint64_t>(seed)});
        worst = std::max(worst, std::fabs(est.exponents.front() - bounds.sigma_bound));
        worst = std::max(worst, std::fabs(est.exponents.back() - bounds.varsigma_bound));
    }
    std::ostringstream os;
    os << "empirical extremes vs periodic bounds: worst gap " << worst
       << " over 20 seeds (tol 1e-3)";
    report(5, worst < 1e-3, os.str());
}

// 6. index constancy across all orbits of period <= 8
void criterion_6() {
    Mat a = Mat::from_rows({{2, 1}, {1, 1}});
    std::vector<PeriodicOrbit> orbits;
    for (int m = 1; m <= 8; ++m)
        for (auto& o : enumerate_periodic_toral(a, m)) orbits.push_back(o);
    auto rep = check_index_constancy(orbits);
    double min_abs = 1e300;
    for (const auto& o : orbits)
        for (double e : o.exponents) min_abs = std::min(min_abs, std::fabs(e));
    bool ok = rep.status == IndexConstancyReport::Status::Constant && rep.common_index == 1 &&
              min_abs >= 0.96;
    std::ostringstream os;
    os << "index constant = " << rep.common_index << " over " << orbits.size()
       << " orbits (periods <= 8), min |exponent| " << min_abs << " (>= 0.96)";
    report(6, ok, os.str());
}

// 7. window certificate: certified on the cat stable bundle, refuted on a
// neutral direction
void criterion_7() {
    SystemSpec cat = make_system("cat");
    Vec stable_dir = normalized({1.0, -(std::sqrt(5.0) + 1) / 2});
    std::vector<BundleSample> samples = {{{0.0, 0.0}, stable_dir},
                                         {{0.31, 0.77}, stable_dir},
                                         {{0.5, 0.25}, stable_dir}};
    CertifyParams params;
    params.sigma = 0.96;
    params.t0 = 10;
    params.tmax = 1000;
    params.stride = 10;
    HyperbolicityCertificate cert = certify_uniform_contraction(cat, samples, params);
    double err = std::fabs(cert.worst_window_average + kLyap);
    bool cat_ok = cert.verdict == Verdict::Certified && err < 1e-9;

    SystemSpec neutral = make_system("diag:1,2");
    HyperbolicityCertificate ncert = certify_uniform_contraction(
        neutral, {{{0.0, 0.0}, {1.0, 0.0}}}, CertifyParams{0.96, 0.96, 10, 1000, 10, 1e-3, 1e-9});
    bool neutral_ok = ncert.verdict == Verdict::Refuted && ncert.witness.has_value();

    std::ostringstream os;
    os << "cat stable bundle " << to_string(cert.verdict) << ", worst window "
       << cert.worst_window_average << " (= -0.9624 +- 1e-9: err " << err << "); diag(1,2) "
       << to_string(ncert.verdict) << " with witness "
       << (ncert.witness ? "stored" : "missing");
    report(7, cat_ok && neutral_ok, os.str());
}

// 8. BL metric: closed-form Dirac pairs and the metric axioms
void criterion_8() {
    double worst_closed = 0.0;
    for (double t : {0.1, 0.5, 1.0}) {
        DiscreteMeasure a, b;
        a.dim = b.dim = 2;
        a.geometry = b.geometry = GeometryKind::Box;
        a.points = {{0.0, 0.0}};
        a.weights = {1.0};
        b.points = {{t, 0.0}};
        b.weights = {1.0};
        worst_closed = std::max(worst_closed, std::fabs(bl_distance(a, b) - 2 * t / (2 + t)));
    }

    std::mt19937_64 rng(88);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto random_measure = [&](int atoms) {
        DiscreteMeasure m;
        m.dim = 2;
        m.geometry = GeometryKind::Torus;
        double total = 0.0;
        for (int i = 0; i < atoms; ++i) {
            m.points.push_back({unif(rng), unif(rng)});
            m.weights.push_back(0.05 + unif(rng));
            total += m.weights.back();
        }
        for (double& w : m.weights) w /= total;
        return m;
    };
    double worst_sym = 0.0, worst_tri = 0.0, worst_id = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        DiscreteMeasure m1 = random_measure(2 + trial % 4);
        DiscreteMeasure m2 = random_measure(2 + (trial + 1) % 4);
        DiscreteMeasure m3 = random_measure(2 + (trial + 2) % 4);
        double d12 = bl_distance(m1, m2);
        double d13 = bl_distance(m1, m3);
        double d23 = bl_distance(m2, m3);
        worst_sym = std::max(worst_sym, std::fabs(d12 - bl_distance(m2, m1)));
        worst_tri = std::max(worst_tri, d13 - (d12 + d23));
        worst_id = std::max(worst_id, bl_distance(m1, m1));
    }
    bool ok = worst_closed < 1e-9 && worst_sym < 1e-9 && worst_tri < 1e-9 && worst_id < 1e-9;
    std::ostringstream os;
    os << "Dirac closed form err " << worst_closed << "; axioms on 100 triples: symmetry "
       << worst_sym << ", triangle slack " << worst_tri << ", identity " << worst_id
       << " (all tol 1e-9)";
    report(8, ok, os.str());
}

// 9. periodic measures approach the empirical measure as gaps shrink
void criterion_9() {
    SystemSpec cat = make_system("cat");
    Trajectory traj = iterate_map(cat, {0.135642, 0.463533}, 100000);
    const double alphas[] = {0.2, 0.1, 0.05, 0.025};
    std::vector<double> distances;
    bool ok = true;
    std::ostringstream os;
    os << "bl sequence:";
    for (double alpha : alphas) {
        auto segs = find_recurrences(cat, traj, alpha, 2.0, 150.0);
        if (segs.empty()) {
            ok = false;
            os << " [no recurrence at " << alpha << "]";
            break;
        }
        // smallest admissible span per level: periods grow while the
        // closing gaps shrink, mirroring the density argument
        const RecurrentSegment* best = &segs.front();
        PeriodicOrbit orbit = refine_periodic(cat, *best);
        Trajectory window;
        window.states.assign(traj.states.begin() + best->start_index,
                             traj.states.begin() + best->start_index + best->span_steps + 1);
        window.times.resize(window.states.size());
        DiscreteMeasure emp =
            empirical_measure(cat, window, static_cast<double>(best->span_steps));
        DiscreteMeasure per = periodic_measure(cat, orbit);
        double bl = bl_distance(emp, per);
        os << " " << bl;
        if (!distances.empty() && bl > 1.1 * distances.back()) ok = false;
        distances.push_back(bl);
    }
    ok = ok && distances.size() >= 4;
    os << " (non-increasing within 10% band over >= 4 levels)";
    report(9, ok, os.str());
}

// 10. suspension flow keeps the base-map transversal spectrum
void criterion_10() {
    SystemSpec susp = make_system("suspension:cat");
    SpectrumEstimate est =
        lyapunov_spectrum(susp, {0.0, 0.0, 0.0}, 2, 1000.0, SpectrumParams{1e-3, 10, 3});
    double err = std::max(std::fabs(est.exponents[0] + kLyap), std::fabs(est.exponents[1] - kLyap));
    std::ostringstream os;
    os << "suspension spectrum error " << err << " at T=1e3, h=1e-3 (tol 5e-3)";
    report(10, err < 5e-3, os.str());
}

// 11. both orderings of per-column rates realized by eigenframes
void criterion_11() {
    double worst = 0.0;
    SystemSpec d = make_system("diag:2,0.5");
    PeriodicOrbit fixed;
    fixed.point = {0.0, 0.0};
    fixed.period = 1.0;
    fixed.residual = 0.0;
    fixed.verified = true;
    fixed.multipliers = {0.5, 2.0};
    fixed.exponents = {-std::log(2.0), std::log(2.0)};
    fixed.index = 1;
    for (std::vector<int> perm : {std::vector<int>{0, 1}, std::vector<int>{1, 0}}) {
        auto r = realize_reordering(d, fixed, perm);
        for (size_t i = 0; i < perm.size(); ++i)
            worst = std::max(worst, std::fabs(r.achieved_rates[i] - r.requested_rates[i]));
    }
    SystemSpec cat = make_system("cat");
    PeriodicOrbit cfix;
    cfix.point = {0.0, 0.0};
    cfix.period = 1.0;
    cfix.residual = 0.0;
    cfix.verified = true;
    cfix.multipliers = {std::exp(-kLyap), std::exp(kLyap)};
    cfix.exponents = {-kLyap, kLyap};
    cfix.index = 1;
    for (std::vector<int> perm : {std::vector<int>{0, 1}, std::vector<int>{1, 0}}) {
        auto r = realize_reordering(cat, cfix, perm);
        for (size_t i = 0; i < perm.size(); ++i)
            worst = std::max(worst, std::fabs(r.achieved_rates[i] - r.requested_rates[i]));
    }
    std::ostringstream os;
    os << "reordering achieved-vs-requested worst gap " << worst
       << " across both orderings on diag(2,1/2) and the cat fixed point (tol 1e-8)";
    report(11, worst < 1e-8, os.str());
}

// 12. byte-identical payloads for identical seeds
void criterion_12() {
    fs::remove_all("acc_det_a");
    fs::remove_all("acc_det_b");
    int c1 = run_cli("spectrum --system cat --steps 10000 --seed 7 --out acc_det_a");
    int c2 = run_cli("spectrum --system cat --steps 10000 --seed 7 --out acc_det_b");
    bool ok = c1 == 0 && c2 == 0;
    if (ok) {
        std::string a = read_json("acc_det_a/spectrum.json").at("payload").dump();
        std::string b = read_json("acc_det_b/spectrum.json").at("payload").dump();
        ok = a == b;
    }
    report(12, ok, "two seed-7 runs produce byte-identical JSON payloads");
    fs::remove_all("acc_det_a");
    fs::remove_all("acc_det_b");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-frameflow-cli>\n");
        return 2;
    }
    cli_path = argv[1];

    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();

    std::printf("%s (%d/12 criteria)\n", failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES PRESENT",
                12 - failures);
    return failures == 0 ? 0 : 1;
}
