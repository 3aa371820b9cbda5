#pragma once

#include <string>

#include "json.hpp"

#include "frameflow/hyperbolicity.hpp"
#include "frameflow/measure.hpp"
#include "frameflow/shadow.hpp"

namespace frameflow {

nlohmann::json to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const PeriodicOrbit& o);
nlohmann::json to_json(const SpectrumEstimate& s);
nlohmann::json to_json(const HyperbolicityCertificate& c);

/// CSV rows "index,exponent,tail_drift" with a header line.
std::string spectrum_csv(const SpectrumEstimate& s);

}  // namespace frameflow
