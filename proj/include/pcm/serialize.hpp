#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "pcm/calculus.hpp"
#include "pcm/fields.hpp"
#include "pcm/green.hpp"
#include "pcm/images.hpp"
#include "pcm/lattice.hpp"
#include "pcm/oracle.hpp"
#include "pcm/randomwalk.hpp"
#include "pcm/solver.hpp"

namespace pcm {

nlohmann::json geometry_to_json(const LatticeGeometry& geom);
nlohmann::json fine_config_to_json(const FineConfig& u);
nlohmann::json coarse_config_to_json(const CoarseConfig& v);
nlohmann::json vector_config_to_json(const VectorConfig& a);
nlohmann::json solve_report_to_json(const SolveReport& r);
nlohmann::json verification_report_to_json(const VerificationReport& r);
nlohmann::json oracle_report_to_json(const OracleReport& r);
nlohmann::json rw_expansion_to_json(const rw::RwExpansion& e);
nlohmann::json srl_report_to_json(const rw::SrlReport& r);
nlohmann::json image_deviation_to_json(const ImageDeviation& d);
nlohmann::json decay_fit_to_json(const DecayFit& f);

// kernel dumps: CSV rows (row, col, value) and a raw row-major double array
// with a JSON side-car header (shape, tags, weights)
void write_kernel_csv(const OperatorKernel& k, const std::string& path);
void write_kernel_binary(const OperatorKernel& k, const std::string& data_path,
                         const std::string& header_path);

// bond fields as CSV rows (b_minus, b_plus, mu, v1, v2, v3)
void write_bond_field_csv(const BondVectorField& f, const std::string& path);

// iterate history as CSV (iteration, residual, quotient)
void write_solve_history_csv(const SolveReport& r, const std::string& path);

// oracle descent history as CSV (step, f, grad_norm, step_size)
void write_oracle_history_csv(const OracleReport& r, const std::string& path);

void write_json(const nlohmann::json& j, const std::string& path);

}  // namespace pcm
