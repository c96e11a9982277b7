#ifndef ONCOLYAP_JSON_IO_HPP
#define ONCOLYAP_JSON_IO_HPP

#include "oncolyap/basin.hpp"

#include <json.hpp>

namespace oncolyap {

// insertion-ordered so emitted documents are deterministic
using Json = nlohmann::ordered_json;

// Strict parsers: every unknown key is a DomainError, as are missing
// required keys and type mismatches.
ModelParams params_from_json(const Json& j);
Json params_to_json(const ModelParams& p);

DrugSchedule schedule_from_json(const Json& j);
Json schedule_to_json(const DrugSchedule& s);

MultipointSpec multipoint_spec_from_json(const Json& j);
Json multipoint_spec_to_json(const MultipointSpec& s);

Json equilibrium_to_json(const Equilibrium& e);
Json stability_report_to_json(const StabilityReport& r);
Json hypothesis_audit_to_json(const HypothesisAudit& a);
Json certificate_to_json(const LyapunovCertificate& c);
Json basin_summary_to_json(const BasinEstimate& e);
Json containment_to_json(const ContainmentReport& r);
Json multipoint_solution_to_json(const MultipointSolution& s);
Json contraction_report_to_json(const ContractionReport& r);

Box3 box_from_json(const Json& j);
Json box_to_json(const Box3& b);

// shared strict-schema helpers
void reject_unknown_keys(const Json& j, const std::vector<std::string>& allowed,
                         const std::string& context);
double require_number(const Json& j, const std::string& key,
                      const std::string& context);
Eigen::Vector3d require_vec3(const Json& j, const std::string& key,
                             const std::string& context);

} // namespace oncolyap

#endif
