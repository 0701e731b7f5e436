#include "pcm/serialize.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace pcm {

using nlohmann::json;

json geometry_to_json(const LatticeGeometry& geom) {
  json j;
  j["L"] = geom.L();
  j["m"] = geom.m();
  j["n"] = geom.n();
  j["n1"] = geom.n1();
  j["sites"] = geom.num_sites();
  j["bonds"] = geom.num_bonds();
  j["coarse_sites"] = geom.num_coarse();
  j["site_order"] = "row-major, id = x1*n + x0";
  j["bond_order"] = "by site id, horizontal before vertical";
  return j;
}

namespace {

json su2_to_json(const Su2& u) { return json::array({u[0], u[1], u[2], u[3]}); }

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

json fine_config_to_json(const FineConfig& u) {
  json j;
  j["geometry"] = geometry_to_json(*u.geom);
  json sites = json::array();
  for (const Su2& q : u.u) sites.push_back(su2_to_json(q));
  j["u"] = std::move(sites);
  return j;
}

json coarse_config_to_json(const CoarseConfig& v) {
  json j;
  j["geometry"] = geometry_to_json(*v.geom);
  json sites = json::array();
  for (const Su2& q : v.v) sites.push_back(su2_to_json(q));
  j["v"] = std::move(sites);
  return j;
}

json vector_config_to_json(const VectorConfig& a) {
  json j;
  j["geometry"] = geometry_to_json(*a.geom);
  json sites = json::array();
  for (const auto& v : a.a) sites.push_back(vec3_to_json(v));
  j["a"] = std::move(sites);
  return j;
}

json solve_report_to_json(const SolveReport& r) {
  json j;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["final_residual"] = r.final_residual;
  j["eps1_warning"] = r.eps1_warning;
  json hist = json::array();
  for (const auto& h : r.history) {
    hist.push_back({{"residual", h.residual},
                    {"sup_a", h.sup_a},
                    {"sup_qa", h.sup_qa},
                    {"small_field", h.small_field},
                    {"in_x_eps", h.in_x_eps},
                    {"in_x_eps_tight", h.in_x_eps_tight}});
  }
  j["history"] = std::move(hist);
  j["contraction_factors"] = r.contraction_factors;
  return j;
}

json verification_report_to_json(const VerificationReport& r) {
  json j;
  j["sup_qa"] = r.sup_qa;
  j["conservation_spread"] = r.conservation_spread;
  j["max_lie_derivative"] = r.max_lie;
  j["small_field_sup"] = r.small_field;
  j["tolerances"] = {{"constraint", r.tol_constraint},
                     {"conservation", r.tol_conservation},
                     {"lie", r.tol_lie},
                     {"eps", r.eps}};
  j["pass"] = {{"constraint", r.pass_constraint},
               {"conservation", r.pass_conservation},
               {"lie", r.pass_lie},
               {"small_field", r.pass_small_field},
               {"all", r.pass()}};
  return j;
}

json oracle_report_to_json(const OracleReport& r) {
  json j;
  j["converged"] = r.converged;
  j["diverged"] = r.diverged;
  j["steps"] = r.steps;
  j["final_f"] = r.final_f;
  j["final_grad_norm"] = r.final_grad_norm;
  return j;
}

json rw_expansion_to_json(const rw::RwExpansion& e) {
  json j;
  j["m_tilde"] = e.m_tilde;
  j["order"] = e.order;
  j["m2"] = e.m2;
  j["norm_r_power"] = e.norm_r_power;
  j["norm_r_block_bound"] = e.norm_r_block_bound;
  j["residual"] = e.residual;
  j["residual_history"] = e.residual_history;
  j["residual_orders"] = e.residual_orders;
  j["block_consistency"] = e.block_consistency;
  j["blocks"] = e.block_norm.size();
  return j;
}

json srl_report_to_json(const rw::SrlReport& r) {
  json j;
  j["delta"] = r.delta;
  j["d"] = r.d;
  j["range"] = r.range;
  j["pass"] = {{"positive", r.pass_positive},
               {"decay", r.pass_decay},
               {"ratio", r.pass_ratio},
               {"convolution", r.pass_convolution},
               {"monotone", r.pass_monotone},
               {"all", r.pass()}};
  j["c_delta"] = r.c_delta;
  j["K"] = r.ratio_k;
  j["conv_c"] = r.conv_c;
  j["conv_eps"] = r.conv_eps;
  j["M0"] = r.m0;
  if (!r.witness.empty()) j["witness"] = r.witness;
  return j;
}

json image_deviation_to_json(const ImageDeviation& d) {
  json j;
  j["max_deviation"] = d.max_deviation;
  j["samples"] = d.samples;
  json worst = json::array();
  for (const auto& o : d.worst) {
    worst.push_back({{"x", {o.x.x0, o.x.x1}},
                     {"z", {o.z.x0, o.z.x1}},
                     {"deviation", o.deviation},
                     {"neumann", o.neumann_value},
                     {"image_sum", o.image_sum}});
  }
  j["worst"] = std::move(worst);
  return j;
}

json decay_fit_to_json(const DecayFit& f) {
  json j;
  j["C"] = f.C;
  j["C1"] = f.C1;
  j["residual"] = f.residual;
  j["max_distance"] = f.max_distance;
  j["points"] = f.points;
  return j;
}

void write_kernel_csv(const OperatorKernel& k, const std::string& path) {
  std::ofstream out(path);
  out << "row,col,value\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < k.k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.k.cols(); ++j) out << i << "," << j << "," << k.k(i, j) << "\n";
}

void write_kernel_binary(const OperatorKernel& k, const std::string& data_path,
                         const std::string& header_path) {
  std::ofstream out(data_path, std::ios::binary);
  for (Eigen::Index i = 0; i < k.k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.k.cols(); ++j) {
      double v = k.k(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  json h;
  h["shape"] = {k.k.rows(), k.k.cols()};
  h["layout"] = "row-major float64";
  h["block"] = k.block;
  h["domain"] = k.domain == Domain::Fine ? "fine" : "coarse";
  h["codomain"] = k.codomain == Domain::Fine ? "fine" : "coarse";
  h["domain_weight"] = k.domain == Domain::Fine ? 1 : k.geom->L() * k.geom->L();
  h["symmetric"] = k.symmetric;
  write_json(h, header_path);
}

void write_bond_field_csv(const BondVectorField& f, const std::string& path) {
  std::ofstream out(path);
  out << "b_minus,b_plus,mu,v1,v2,v3\n";
  out.precision(17);
  const auto& geom = *f.geom;
  for (int b = 0; b < geom.num_bonds(); ++b) {
    const Bond& bond = geom.bonds()[b];
    out << bond.minus << "," << bond.plus << "," << bond.mu << "," << f.v[b].x() << ","
        << f.v[b].y() << "," << f.v[b].z() << "\n";
  }
}

void write_solve_history_csv(const SolveReport& r, const std::string& path) {
  std::ofstream out(path);
  out << "iteration,residual,quotient\n";
  out.precision(17);
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    out << i << "," << r.history[i].residual << ",";
    if (i >= 1 && i - 1 < r.contraction_factors.size()) out << r.contraction_factors[i - 1];
    out << "\n";
  }
}

void write_oracle_history_csv(const OracleReport& r, const std::string& path) {
  std::ofstream out(path);
  out << "step,f,grad_norm,step_size\n";
  out.precision(17);
  for (std::size_t i = 0; i < r.history.size(); ++i)
    out << i << "," << r.history[i].f << "," << r.history[i].grad_norm << ","
        << r.history[i].step_size << "\n";
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

}  // namespace pcm
