#include "frameflow/frame.hpp"

#include <cmath>
#include <random>

namespace frameflow {

Vec transversal_project(const Vec& s_w, const Vec& v) {
    double ss = dot(s_w, s_w);
    if (std::sqrt(ss) < kSingularFieldThreshold)
        throw numeric_error("transversal_project: zero velocity vector");
    Vec out = v;
    axpy(-dot(v, s_w) / ss, s_w, out);
    return out;
}

GramSchmidtResult gram_schmidt(const std::vector<Vec>& vectors) {
    GramSchmidtResult res;
    res.frame.reserve(vectors.size());
    for (size_t i = 0; i < vectors.size(); ++i) {
        Vec u = vectors[i];
        for (size_t j = 0; j < i; ++j) axpy(-dot(u, res.frame[j]), res.frame[j], u);
        double len = norm(u);
        if (len < kFrameDegeneracyThreshold)
            throw numeric_error("gram_schmidt: column " + std::to_string(i) +
                                " degenerate (reduced norm " + std::to_string(len) + ")");
        res.log_norms.push_back(std::log(len));
        for (double& x : u) x /= len;
        res.frame.push_back(std::move(u));
    }
    return res;
}

FrameState make_frame(const SystemSpec& sys, Vec base, const std::vector<Vec>& raw_columns) {
    if (static_cast<int>(raw_columns.size()) > sys.transversal_dim())
        throw numeric_error("make_frame: more columns than the transversal dimension");
    std::vector<Vec> cols = raw_columns;
    if (sys.is_flow()) {
        Vec s = sys.evaluate(base);
        for (Vec& c : cols) c = transversal_project(s, c);
    }
    FrameState fs;
    fs.columns = gram_schmidt(cols).frame;
    fs.base = std::move(base);
    fs.log_growth.assign(fs.columns.size(), 0.0);
    return fs;
}

FrameState random_frame(const SystemSpec& sys, Vec base, int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec> cols(k, Vec(sys.ambient_dim));
    for (Vec& c : cols)
        for (double& x : c) x = gauss(rng);
    return make_frame(sys, std::move(base), cols);
}

namespace {

void reorthonormalize(FrameState& fs) {
    auto gs = gram_schmidt(fs.columns);
    fs.columns = std::move(gs.frame);
    for (size_t i = 0; i < gs.log_norms.size(); ++i) fs.log_growth[i] += gs.log_norms[i];
}

}  // namespace

FrameState evolve_frame(const SystemSpec& sys, FrameState fs, double t_or_steps,
                        const FrameEvolveParams& params) {
    if (params.reorth_every < 1)
        throw numeric_error("evolve_frame: reorth_every must be at least 1");
    long pending = 0;
    auto gs_event = [&] {
        try {
            reorthonormalize(fs);
        } catch (const numeric_error& e) {
            throw numeric_error(std::string(e.what()) + " at elapsed " +
                                std::to_string(fs.elapsed));
        }
        pending = 0;
    };

    if (sys.is_map()) {
        long steps = static_cast<long>(t_or_steps);
        if (steps < 0) throw numeric_error("evolve_frame: negative steps unsupported");
        for (long i = 0; i < steps; ++i) {
            map_step_with_tangents(sys, fs.base, fs.columns);
            fs.elapsed += 1.0;
            if (++pending == params.reorth_every) gs_event();
        }
        if (pending > 0) gs_event();
        return fs;
    }

    double total = t_or_steps;
    if (total < 0) throw numeric_error("evolve_frame: negative time unsupported");
    if (total == 0.0) return fs;
    const long nsteps = static_cast<long>(std::ceil(total / params.step - 1e-12));
    const double h = total / nsteps;
    for (long i = 0; i < nsteps; ++i) {
        flow_step_with_tangents(sys, fs.base, fs.columns, h);
        Vec s = sys.evaluate(fs.base);
        for (Vec& c : fs.columns) c = transversal_project(s, c);
        fs.elapsed += h;
        if (++pending == params.reorth_every) gs_event();
    }
    if (pending > 0) gs_event();
    return fs;
}

RateSample qualitative_rate(const SystemSpec& sys, const FrameState& fs, int column_index) {
    if (!sys.is_flow())
        throw numeric_error("qualitative_rate: defined for flows only");
    if (column_index < 0 || column_index >= fs.k())
        throw numeric_error("qualitative_rate: column index out of range");

    Vec s = sys.evaluate(fs.base);
    if (norm(s) < kSingularFieldThreshold)
        throw numeric_error("qualitative_rate: singular field at base state");

    // orthonormal basis of the subspace projected out: velocity direction
    // plus all earlier columns
    std::vector<Vec> killed{normalized(s)};
    for (int j = 0; j < column_index; ++j) killed.push_back(fs.columns[j]);

    auto project = [&killed](Vec v) {
        for (const Vec& b : killed) axpy(-dot(v, b), b, v);
        return v;
    };

    Vec p = project(fs.columns[column_index]);
    Mat jac = sys.jacobian(fs.base);
    RateSample sample;
    sample.base = fs.base;
    sample.column_index = column_index;
    sample.value = dot(p, project(jac * p));
    return sample;
}

GrowthTrace unit_growth_trace(const SystemSpec& sys, Vec w, Vec x, double total_time,
                              double step) {
    if (!sys.is_flow())
        throw numeric_error("unit_growth_trace: defined for flows only");
    FrameState fs = make_frame(sys, std::move(w), {std::move(x)});

    GrowthTrace trace;
    const long nsteps = static_cast<long>(std::ceil(total_time / step - 1e-12));
    const double h = total_time / nsteps;
    trace.times.reserve(nsteps + 1);
    trace.rates.reserve(nsteps + 1);
    trace.log_growth.reserve(nsteps + 1);

    double accum = 0.0;
    trace.times.push_back(0.0);
    trace.rates.push_back(qualitative_rate(sys, fs, 0).value);
    trace.log_growth.push_back(0.0);
    for (long i = 1; i <= nsteps; ++i) {
        flow_step_with_tangents(sys, fs.base, fs.columns, h);
        Vec s = sys.evaluate(fs.base);
        fs.columns[0] = transversal_project(s, fs.columns[0]);
        double len = norm(fs.columns[0]);
        if (len < kFrameDegeneracyThreshold)
            throw numeric_error("unit_growth_trace: vector collapsed at t=" +
                                std::to_string(i * h));
        accum += std::log(len);
        for (double& v : fs.columns[0]) v /= len;
        trace.times.push_back(i * h);
        trace.rates.push_back(qualitative_rate(sys, fs, 0).value);
        trace.log_growth.push_back(accum);
    }
    return trace;
}

double trapezoid_rate_integral(const GrowthTrace& trace) {
    double sum = 0.0;
    for (size_t i = 1; i < trace.times.size(); ++i)
        sum += 0.5 * (trace.rates[i] + trace.rates[i - 1]) *
               (trace.times[i] - trace.times[i - 1]);
    return sum;
}

}  // namespace frameflow
