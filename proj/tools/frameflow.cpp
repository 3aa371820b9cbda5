// frameflow: numerical hyperbolicity toolkit driven by transversal frame
// flows. Subcommands: spectrum, suspend-spectrum, periodic, certify,
// measures. Exit codes: 0 success/certified, 2 configuration error,
// 3 numerical failure, 4 refuted, 5 inconclusive.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "frameflow/hyperbolicity.hpp"
#include "frameflow/measure.hpp"
#include "frameflow/serialize.hpp"
#include "frameflow/shadow.hpp"
#include "frameflow/system.hpp"
#include "frameflow/version.hpp"

using namespace frameflow;
using nlohmann::json;

namespace {

int log_verbosity() {
    const char* env = std::getenv("FRAMEFLOW_LOG");
    if (!env) return 1;
    std::string v(env);
    if (v == "error") return 0;
    if (v == "debug") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_verbosity() >= 1) std::cerr << "[frameflow] " << msg << "\n";
}

std::string timestamp_utc() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

Vec parse_state(const std::string& csv) {
    Vec out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

/// Configuration defaults shared by every subcommand; a --config JSON file
/// seeds these before flags override them.
struct Options {
    std::string system = "cat";
    std::string out_dir = ".";
    std::string format = "both";
    std::uint64_t seed = 1;
    double eps = 0.01;

    long steps = 10000;
    double time = 100.0;
    double step = 1e-3;
    long reorth_every = 1;
    int columns = 0;  // 0: full transversal dimension
    std::string seed_state;

    double roof = 1.0;

    int max_period = 3;
    bool exact = false;
    double alpha = 0.01;
    double min_span = 1.0;
    double max_span = 200.0;
    double tol = 1e-12;
    int max_orbits = 20;

    double sigma = 0.9;
    double varsigma = 0.9;
    double t0 = 10.0;
    double tmax = 1000.0;
    double stride = 10.0;
    int samples = 5;
    long prerun = 60;

    std::string alphas = "0.2,0.1,0.05,0.025";
};

void apply_config_file(Options& o, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    json doc = json::parse(in);
    auto get = [&](const char* key, auto& slot) {
        if (doc.contains(key)) slot = doc.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("system", o.system);
    get("out", o.out_dir);
    get("format", o.format);
    get("seed", o.seed);
    get("eps", o.eps);
    get("steps", o.steps);
    get("time", o.time);
    get("step", o.step);
    get("reorth_every", o.reorth_every);
    get("columns", o.columns);
    get("seed_state", o.seed_state);
    get("roof", o.roof);
    get("max_period", o.max_period);
    get("exact", o.exact);
    get("alpha", o.alpha);
    get("min_span", o.min_span);
    get("max_span", o.max_span);
    get("tol", o.tol);
    get("max_orbits", o.max_orbits);
    get("sigma", o.sigma);
    get("varsigma", o.varsigma);
    get("t0", o.t0);
    get("tmax", o.tmax);
    get("stride", o.stride);
    get("samples", o.samples);
    get("prerun", o.prerun);
    get("alphas", o.alphas);
}

json config_echo(const Options& o, const std::string& command) {
    json cfg = {{"system", o.system}, {"seed", o.seed}, {"format", o.format}};
    if (command == "spectrum" || command == "suspend-spectrum") {
        cfg["steps"] = o.steps;
        cfg["time"] = o.time;
        cfg["step"] = o.step;
        cfg["reorth_every"] = o.reorth_every;
        cfg["columns"] = o.columns;
        if (command == "suspend-spectrum") cfg["roof"] = o.roof;
    } else if (command == "periodic") {
        cfg["max_period"] = o.max_period;
        cfg["exact"] = o.exact;
        cfg["alpha"] = o.alpha;
        cfg["steps"] = o.steps;
        cfg["min_span"] = o.min_span;
        cfg["max_span"] = o.max_span;
        cfg["tol"] = o.tol;
    } else if (command == "certify") {
        cfg["sigma"] = o.sigma;
        cfg["varsigma"] = o.varsigma;
        cfg["t0"] = o.t0;
        cfg["tmax"] = o.tmax;
        cfg["stride"] = o.stride;
        cfg["samples"] = o.samples;
        cfg["prerun"] = o.prerun;
    } else if (command == "measures") {
        cfg["steps"] = o.steps;
        cfg["alphas"] = o.alphas;
        cfg["max_span"] = o.max_span;
    }
    if (o.system.find("cat-perturbed") != std::string::npos) cfg["eps"] = o.eps;
    return cfg;
}

void write_outputs(const Options& o, const std::string& command, const json& result,
                   const std::string& csv_text) {
    namespace fs = std::filesystem;
    fs::create_directories(o.out_dir);
    json payload = {{"version", kVersion},
                    {"command", command},
                    {"config", config_echo(o, command)},
                    {"result", result}};
    json doc = {{"meta", {{"timestamp", timestamp_utc()}}}, {"payload", payload}};
    if (o.format == "json" || o.format == "both") {
        std::ofstream out(fs::path(o.out_dir) / (command + ".json"));
        out << doc.dump(2) << "\n";
    }
    if (!csv_text.empty() && (o.format == "csv" || o.format == "both")) {
        std::ofstream out(fs::path(o.out_dir) / (command + ".csv"));
        out << csv_text;
    }
    log_info(command + " outputs written to " + o.out_dir);
}

/// Bad user input (unknown system, malformed value): exit code 2.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

SystemSpec build_system(const Options& o) {
    SystemOptions sys_opts;
    sys_opts.eps = o.eps;
    try {
        return make_system(o.system, sys_opts);
    } catch (const numeric_error& e) {
        throw config_error(e.what());
    }
}

Vec initial_state(const Options& o, const SystemSpec& sys) {
    if (!o.seed_state.empty()) {
        Vec w = parse_state(o.seed_state);
        if (static_cast<int>(w.size()) != sys.ambient_dim)
            throw config_error("--seed-state dimension mismatch");
        return w;
    }
    return default_seed_state(sys);
}

// ---- subcommands ----

int cmd_spectrum(const Options& o, bool suspended) {
    SystemSpec sys;
    double horizon;
    if (suspended) {
        SystemSpec base = build_system(o);
        sys = suspend(base, o.roof).flow;
        horizon = o.time;
    } else {
        sys = build_system(o);
        horizon = sys.is_map() ? static_cast<double>(o.steps) : o.time;
    }
    int k = o.columns > 0 ? o.columns : sys.transversal_dim();
    Vec w0 = suspended ? Vec(sys.ambient_dim, 0.0) : initial_state(o, sys);

    SpectrumParams params{o.step, o.reorth_every, o.seed};
    auto t0 = std::chrono::steady_clock::now();
    SpectrumEstimate est = lyapunov_spectrum(sys, w0, k, horizon, params);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json result = to_json(est);
    result["system"] = sys.name;
    write_outputs(o, suspended ? "suspend-spectrum" : "spectrum", result, spectrum_csv(est));
    std::cout << "exponents:";
    for (double e : est.exponents) std::cout << " " << e;
    std::cout << "  (tail drift " << est.tail_drift << ", " << secs << " s)\n";
    return 0;
}

/// Recovers the integer matrix of a linear toral map, or throws.
Mat integer_toral_matrix(const SystemSpec& sys) {
    if (!sys.is_map() || sys.geometry != GeometryKind::Torus)
        throw numeric_error("exact enumeration needs a linear toral map");
    Vec zero(sys.ambient_dim, 0.0);
    Mat a = sys.jacobian(zero);
    Mat b = sys.jacobian(Vec(sys.ambient_dim, 0.37));
    if (max_abs(a - b) > 1e-12)
        throw numeric_error("exact enumeration needs a linear toral map (Jacobian varies)");
    for (double v : a.a)
        if (std::fabs(v - std::round(v)) > 1e-9)
            throw numeric_error("exact enumeration needs integer matrix entries");
    return a;
}

int cmd_periodic(const Options& o) {
    SystemSpec sys = build_system(o);
    std::vector<PeriodicOrbit> orbits;
    json per_period = json::array();

    if (o.exact) {
        Mat a;
        try {
            a = integer_toral_matrix(sys);
        } catch (const numeric_error& e) {
            throw config_error(e.what());
        }
        for (int m = 1; m <= o.max_period; ++m) {
            auto all = enumerate_periodic_toral(a, m);
            per_period.push_back(
                {{"period", m}, {"points_dividing", toral_periodic_point_count(a, m)}});
            for (auto& orb : all)
                if (static_cast<int>(orb.period) == m) orbits.push_back(orb);
        }
    } else {
        Trajectory traj = sys.is_map()
                              ? iterate_map(sys, initial_state(o, sys), o.steps)
                              : sample_flow(sys, initial_state(o, sys), o.time, o.step);
        auto segs = find_recurrences(sys, traj, o.alpha, o.min_span, o.max_span);
        log_info("recurrence scan found " + std::to_string(segs.size()) + " segments");
        for (const auto& seg : segs) {
            if (static_cast<int>(orbits.size()) >= o.max_orbits) break;
            PeriodicOrbit orb;
            try {
                orb = refine_periodic(sys, seg, RefineOptions{o.tol, 50, o.step});
            } catch (const numeric_error& e) {
                if (log_verbosity() >= 2)
                    std::cerr << "[frameflow] refinement skipped: " << e.what() << "\n";
                continue;
            }
            bool dup = false;
            for (const auto& kept : orbits) {
                if (std::fabs(kept.period - orb.period) > 1e-6 * std::max(1.0, kept.period))
                    continue;
                if (!orb.points.empty()) {
                    for (const Vec& q : orb.points)
                        if (state_distance(sys, q, kept.point) < 1e-8) { dup = true; break; }
                } else if (state_distance(sys, orb.point, kept.point) < 1e-6) {
                    dup = true;
                }
                if (dup) break;
            }
            if (!dup) orbits.push_back(std::move(orb));
        }
        if (orbits.empty())
            throw numeric_error("no periodic orbit refined (and exact enumeration not requested)");
    }

    json orbit_docs = json::array();
    std::map<double, int> period_histogram;
    std::map<int, int> index_histogram;
    for (const auto& orb : orbits) {
        orbit_docs.push_back(to_json(orb));
        period_histogram[orb.period]++;
        index_histogram[orb.index]++;
    }
    auto bounds = extremal_exponent_bounds(orbits);
    auto constancy = check_index_constancy(orbits);

    json result;
    result["orbits"] = orbit_docs;
    result["orbit_count"] = orbits.size();
    if (o.exact) result["points_per_period"] = per_period;
    json hist = json::array();
    for (auto& [p, c] : period_histogram) hist.push_back({{"period", p}, {"orbits", c}});
    result["period_histogram"] = hist;
    json ihist = json::array();
    for (auto& [i, c] : index_histogram) ihist.push_back({{"index", i}, {"orbits", c}});
    result["index_histogram"] = ihist;
    result["extremal_bounds"] = {{"sigma", bounds.sigma_bound},
                                 {"varsigma", bounds.varsigma_bound},
                                 {"uniform_gap", bounds.uniform_gap}};
    if (constancy.status == IndexConstancyReport::Status::Constant)
        result["index_constancy"] = {{"status", "constant"}, {"index", constancy.common_index}};
    else if (constancy.status == IndexConstancyReport::Status::Violation)
        result["index_constancy"] = {{"status", "violation"},
                                     {"witness", {constancy.witness_a, constancy.witness_b}}};
    else
        result["index_constancy"] = {{"status", "inconclusive"}};

    std::ostringstream csv;
    csv.precision(17);
    csv << "period,index,residual,min_exponent,max_exponent\n";
    for (const auto& orb : orbits)
        csv << orb.period << "," << orb.index << "," << orb.residual << ","
            << orb.exponents.front() << "," << orb.exponents.back() << "\n";

    write_outputs(o, "periodic", result, csv.str());
    std::cout << orbits.size() << " orbits, extremal bounds (" << bounds.sigma_bound << ", "
              << bounds.varsigma_bound << "), index "
              << (constancy.status == IndexConstancyReport::Status::Constant
                      ? std::to_string(constancy.common_index)
                      : std::string("non-constant"))
              << "\n";
    return 0;
}

int cmd_certify(const Options& o) {
    SystemSpec sys = build_system(o);
    if (!sys.is_map() || !sys.has_inverse())
        throw config_error("certify needs an invertible map system");
    SystemSpec inv = inverse_system(sys);

    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 0.1);
    std::vector<Vec> states;
    for (int i = 0; i < o.samples; ++i) {
        Vec x(sys.ambient_dim);
        if (sys.geometry == GeometryKind::Torus)
            for (double& v : x) v = unif(rng);
        else
            for (double& v : x) v = gauss(rng);
        states.push_back(std::move(x));
    }

    std::vector<BundleSample> stable_samples, unstable_samples;
    bool splitting_ok = true;
    for (const Vec& x : states) {
        try {
            SplittingEstimate split =
                oseledets_splitting(sys, x, o.prerun, SpectrumParams{o.step, 1, o.seed});
            for (const Vec& dir : split.stable_frame) stable_samples.push_back({x, dir});
            for (const Vec& dir : split.unstable_frame) unstable_samples.push_back({x, dir});
        } catch (const inconclusive_error& e) {
            splitting_ok = false;
            log_info(std::string("splitting inconclusive, falling back to coordinate "
                                 "directions: ") +
                     e.what());
            break;
        }
    }
    if (!splitting_ok) {
        // a violated window in any candidate direction still refutes
        // uniform contraction of every bundle containing it
        stable_samples.clear();
        unstable_samples.clear();
        for (const Vec& x : states)
            for (int d = 0; d < sys.ambient_dim; ++d) {
                Vec e(sys.ambient_dim, 0.0);
                e[d] = 1.0;
                stable_samples.push_back({x, e});
                unstable_samples.push_back({x, e});
            }
    }

    CertifyParams params;
    params.sigma = o.sigma;
    params.varsigma = o.varsigma;
    params.t0 = o.t0;
    params.tmax = o.tmax;
    params.stride = o.stride;
    params.step = o.step;
    // splitting-derived directions are the extremal stable bundle, which
    // only the anchored transport can follow over long horizons
    params.anchored = splitting_ok;
    HyperbolicityCertificate stable_cert = certify_uniform_contraction(sys, stable_samples, params);

    CertifyParams inv_params = params;
    inv_params.sigma = o.varsigma;  // expansion of g = contraction of g^-1
    inv_params.varsigma = o.sigma;
    HyperbolicityCertificate unstable_cert =
        certify_uniform_contraction(inv, unstable_samples, inv_params);

    Verdict verdict;
    if (stable_cert.verdict == Verdict::Refuted || unstable_cert.verdict == Verdict::Refuted)
        verdict = Verdict::Refuted;
    else if (stable_cert.verdict == Verdict::Certified &&
             unstable_cert.verdict == Verdict::Certified)
        verdict = Verdict::Certified;
    else
        verdict = Verdict::Inconclusive;

    json result = {{"stable", to_json(stable_cert)},
                   {"unstable", to_json(unstable_cert)},
                   {"splitting_based", splitting_ok},
                   {"verdict", to_string(verdict)}};
    write_outputs(o, "certify", result, "");
    std::cout << "verdict: " << to_string(verdict) << " (stable worst "
              << stable_cert.worst_window_average << ", unstable worst "
              << unstable_cert.worst_window_average << ")\n";
    if (verdict == Verdict::Refuted) return 4;
    if (verdict == Verdict::Inconclusive) return 5;
    return 0;
}

int cmd_measures(const Options& o) {
    SystemSpec sys = build_system(o);
    if (!sys.is_map()) throw config_error("the measures pipeline runs on maps");
    Vec alphas = parse_state(o.alphas);
    if (alphas.empty()) throw config_error("--alphas needs at least one level");
    std::sort(alphas.rbegin(), alphas.rend());

    Trajectory traj = iterate_map(sys, initial_state(o, sys), o.steps);
    json rows = json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "i,period,gap,bl_distance\n";
    double prev_bl = -1.0;
    bool non_increasing = true;
    int level = 0;
    for (double alpha : alphas) {
        auto segs = find_recurrences(sys, traj, alpha, 2.0, o.max_span);
        if (segs.empty())
            throw numeric_error("no recurrence found at alpha = " + std::to_string(alpha));
        // smallest admissible span per level: periods grow while the
        // closing gaps shrink, mirroring the density argument
        const RecurrentSegment* best = &segs.front();

        PeriodicOrbit orbit = refine_periodic(sys, *best, RefineOptions{o.tol, 50, o.step});
        Trajectory window;
        window.states.assign(traj.states.begin() + best->start_index,
                             traj.states.begin() + best->start_index + best->span_steps + 1);
        window.times.resize(window.states.size());
        for (size_t i = 0; i < window.times.size(); ++i)
            window.times[i] = static_cast<double>(i);

        DiscreteMeasure emp =
            empirical_measure(sys, window, static_cast<double>(best->span_steps));
        DiscreteMeasure per = periodic_measure(sys, orbit);
        double bl = bl_distance(emp, per);
        auto shadow = verify_shadow(sys, window, orbit, 10.0 * best->gap + 1e-9);

        log_info("alpha " + std::to_string(alpha) + ": span " +
                 std::to_string(best->span_steps) + ", gap " + std::to_string(best->gap) +
                 ", bl " + std::to_string(bl));

        if (prev_bl >= 0 && bl > 1.1 * prev_bl) non_increasing = false;
        prev_bl = bl;
        rows.push_back({{"i", level},
                        {"alpha", alpha},
                        {"period", orbit.period},
                        {"gap", best->gap},
                        {"bl_distance", bl},
                        {"shadow_offset", shadow.worst_offset}});
        csv << level << "," << orbit.period << "," << best->gap << "," << bl << "\n";
        ++level;
    }

    json result = {{"rows", rows}, {"non_increasing_within_band", non_increasing}};
    write_outputs(o, "measures", result, csv.str());
    std::cout << "levels: " << rows.size()
              << (non_increasing ? " (non-increasing trend)" : " (trend violated)") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    // a config file seeds the defaults, explicit flags then override
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                apply_config_file(o, argv[i + 1]);
            } catch (const std::exception& e) {
                std::cerr << "configuration error: " << e.what() << "\n";
                return 2;
            }
        }
    }

    CLI::App app{"transversal frame-flow hyperbolicity toolkit"};
    std::string config_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--system", o.system, "registry name or JSON system file");
        cmd->add_option("--out", o.out_dir, "output directory");
        cmd->add_option("--format", o.format, "csv | json | both")
            ->check(CLI::IsMember({"csv", "json", "both"}));
        cmd->add_option("--seed", o.seed, "RNG seed, recorded in every output");
        cmd->add_option("--eps", o.eps, "cat-perturbed strength");
        cmd->add_option("--step", o.step, "integrator step for flows");
        cmd->add_option("--config", config_path, "JSON config file mirroring the flags");
    };

    CLI::App* spectrum = app.add_subcommand("spectrum", "finite-time Lyapunov spectrum");
    add_common(spectrum);
    spectrum->add_option("--steps", o.steps, "map iterations");
    spectrum->add_option("--time", o.time, "flow horizon");
    spectrum->add_option("--columns", o.columns, "frame columns (default: full)");
    spectrum->add_option("--reorth-every", o.reorth_every, "Gram-Schmidt cadence");
    spectrum->add_option("--seed-state", o.seed_state, "initial state, comma separated");

    CLI::App* susp =
        app.add_subcommand("suspend-spectrum", "transversal spectrum of a suspension flow");
    add_common(susp);
    susp->add_option("--roof", o.roof, "suspension roof time");
    susp->add_option("--time", o.time, "flow horizon");
    susp->add_option("--columns", o.columns, "frame columns");
    susp->add_option("--reorth-every", o.reorth_every, "Gram-Schmidt cadence");

    CLI::App* periodic = app.add_subcommand("periodic", "periodic orbit extraction");
    add_common(periodic);
    periodic->add_option("--max-period", o.max_period, "largest period to enumerate")
        ->check(CLI::PositiveNumber);
    periodic->add_flag("--exact", o.exact, "exact enumeration for linear toral maps");
    periodic->add_option("--alpha", o.alpha, "recurrence gap threshold");
    periodic->add_option("--steps", o.steps, "trajectory length for the recurrence scan");
    periodic->add_option("--time", o.time, "flow trajectory horizon");
    periodic->add_option("--min-span", o.min_span, "smallest recurrence span");
    periodic->add_option("--max-span", o.max_span, "largest recurrence span");
    periodic->add_option("--tol", o.tol, "Newton residual tolerance");
    periodic->add_option("--max-orbits", o.max_orbits, "stop after this many refined orbits");
    periodic->add_option("--seed-state", o.seed_state, "initial state, comma separated");

    CLI::App* certify = app.add_subcommand("certify", "uniform hyperbolicity certificate");
    add_common(certify);
    certify->add_option("--sigma", o.sigma, "contraction margin");
    certify->add_option("--varsigma", o.varsigma, "expansion margin");
    certify->add_option("--t0", o.t0, "smallest window length");
    certify->add_option("--tmax", o.tmax, "orbit and largest window length");
    certify->add_option("--stride", o.stride, "window start/length increment");
    certify->add_option("--samples", o.samples, "bundle sample count");
    certify->add_option("--prerun", o.prerun, "splitting pre-run steps");

    CLI::App* measures =
        app.add_subcommand("measures", "periodic vs empirical measures in the BL metric");
    add_common(measures);
    measures->add_option("--steps", o.steps, "trajectory length");
    measures->add_option("--alphas", o.alphas, "comma separated recurrence gaps");
    measures->add_option("--max-span", o.max_span, "largest recurrence span");
    measures->add_option("--seed-state", o.seed_state, "initial state, comma separated");

    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (spectrum->parsed()) return cmd_spectrum(o, false);
        if (susp->parsed()) return cmd_spectrum(o, true);
        if (periodic->parsed()) return cmd_periodic(o);
        if (certify->parsed()) return cmd_certify(o);
        if (measures->parsed()) return cmd_measures(o);
    } catch (const config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const inconclusive_error& e) {
        std::cerr << "inconclusive: " << e.what() << "\n";
        return 5;
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
