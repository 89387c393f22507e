#pragma once

#include "selftrig/certificates.hpp"
#include "selftrig/experiment.hpp"
#include "selftrig/sim.hpp"
#include "selftrig/trigger.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace selftrig {

using Json = nlohmann::json;

/// Row-major nested arrays.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);

/// Certificate file: matrices row-major plus the derived quantities and the
/// verification margins at write time.
Json certificate_to_json(const Experiment& ex);
Json certificate_to_json(const StabilityCertificate& cert);
Json certificate_to_json(const PerturbedCertificate& cert);

/// Exactly one of the two is set on return.
struct LoadedCertificate {
  std::optional<StabilityCertificate> unperturbed;
  std::optional<PerturbedCertificate> perturbed;
};
LoadedCertificate certificate_from_json(const Json& j);

Json report_to_json(const CertificateReport& r);

Json policy_to_json(const RegionPolicy& policy, const HorizonSpace& space);
RegionPolicy policy_from_json(const Json& j);

/// Decision records and boundary states, enough to re-verify the trace.
Json trace_to_json(const SimulationTrace& trace);
SimulationTrace trace_from_json(const Json& j);

Json trace_report_to_json(const TraceReport& r);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

/// samples.csv: t, x1..xn, V, horizon_id, interval (interval starting at t; empty on the last row).
std::string samples_csv(const SimulationTrace& trace, const SymmetricMatrix& p);
/// dense.csv: t, x1..xn, V.
std::string dense_csv(const SimulationTrace& trace, const SymmetricMatrix& p);
/// Plots states, V and the interval steps from samples.csv and dense.csv.
std::string trace_gnuplot(const std::string& title, Eigen::Index state_dim);

/// sweep.csv: T, spectral_radius.
std::string sweep_csv(const MotivationalReport& r);
/// cases.csv: first, second, radius_first, radius_second, radius_product and Schur verdicts.
std::string cases_csv(const MotivationalReport& r);
std::string sweep_gnuplot();

}  // namespace selftrig
