#include "frameflow/serialize.hpp"

#include <sstream>

namespace frameflow {

namespace {

std::string geometry_name(GeometryKind g) {
    return g == GeometryKind::Torus ? "torus" : "box";
}

std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Empirical: return "empirical";
        case Provenance::Periodic: return "periodic";
        default: return "custom";
    }
}

}  // namespace

nlohmann::json to_json(const DiscreteMeasure& m) {
    nlohmann::json atoms = nlohmann::json::array();
    for (size_t i = 0; i < m.points.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (double x : m.points[i]) row.push_back(x);
        row.push_back(m.weights[i]);
        atoms.push_back(std::move(row));
    }
    return {{"atoms", std::move(atoms)},
            {"geometry", geometry_name(m.geometry)},
            {"provenance", provenance_name(m.provenance)},
            {"origin", m.origin}};
}

DiscreteMeasure measure_from_json(const nlohmann::json& doc) {
    DiscreteMeasure m;
    std::string geom = doc.at("geometry").get<std::string>();
    m.geometry = geom == "torus" ? GeometryKind::Torus : GeometryKind::Box;
    std::string prov = doc.value("provenance", "custom");
    m.provenance = prov == "empirical" ? Provenance::Empirical
                   : prov == "periodic" ? Provenance::Periodic
                                        : Provenance::Custom;
    m.origin = doc.value("origin", "");
    for (const auto& row : doc.at("atoms")) {
        Vec p;
        for (size_t i = 0; i + 1 < row.size(); ++i) p.push_back(row.at(i).get<double>());
        m.points.push_back(std::move(p));
        m.weights.push_back(row.back().get<double>());
    }
    m.dim = m.points.empty() ? 0 : static_cast<int>(m.points[0].size());
    m.validate();
    return m;
}

nlohmann::json to_json(const PeriodicOrbit& o) {
    return {{"point", o.point},
            {"period", o.period},
            {"multipliers", o.multipliers},
            {"exponents", o.exponents},
            {"index", o.index},
            {"residual", o.residual}};
}

nlohmann::json to_json(const SpectrumEstimate& s) {
    return {{"exponents", s.exponents},
            {"horizon", s.horizon},
            {"tail_drift", s.tail_drift},
            {"frame_seed", s.frame_seed}};
}

nlohmann::json to_json(const HyperbolicityCertificate& c) {
    nlohmann::json doc = {{"sigma", c.sigma},
                          {"varsigma", c.varsigma},
                          {"t0", c.t0},
                          {"tmax", c.tmax},
                          {"stride", c.stride},
                          {"windows_checked", c.windows_checked},
                          {"worst_window_average", c.worst_window_average},
                          {"verdict", to_string(c.verdict)},
                          {"rescaling_events", c.rescaling_events},
                          {"samples_checked", c.samples_checked}};
    if (c.witness) {
        doc["witness"] = {{"sample_index", c.witness->sample_index},
                          {"window_start", c.witness->window_start},
                          {"window_length", c.witness->window_length},
                          {"average", c.witness->average}};
    }
    return doc;
}

std::string spectrum_csv(const SpectrumEstimate& s) {
    std::ostringstream os;
    os.precision(17);
    os << "index,exponent,tail_drift\n";
    for (size_t i = 0; i < s.exponents.size(); ++i)
        os << i << "," << s.exponents[i] << "," << s.tail_drift << "\n";
    return os.str();
}

}  // namespace frameflow
