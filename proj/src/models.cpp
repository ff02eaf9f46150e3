#include "porodec/models.hpp"

#include <cmath>
#include <sstream>

#include "porodec/solvers.hpp"

namespace porodec {

void LoadVector::add_term(Vector spatial, TimeFunction factor) {
  if (spatial.size() != dim_) throw DimensionError("LoadVector: spatial part has wrong size");
  spatial_.push_back(std::move(spatial));
  factors_.push_back(std::move(factor));
  derivatives_.clear();
}

void LoadVector::set_derivatives(std::vector<TimeFunction> derivatives) {
  if (derivatives.size() != factors_.size()) throw DimensionError("LoadVector: one derivative per term expected");
  derivatives_ = std::move(derivatives);
}

bool LoadVector::is_zero() const {
  for (const auto& v : spatial_)
    for (double x : v)
      if (x != 0.0) return false;
  return true;
}

Vector LoadVector::at(double t) const {
  Vector out(dim_, 0.0);
  add_to(t, out);
  return out;
}

void LoadVector::add_to(double t, std::span<double> out, double scale) const {
  if (out.size() != dim_) throw DimensionError("LoadVector: output has wrong size");
  for (std::size_t k = 0; k < spatial_.size(); ++k) axpy(scale * factors_[k](t), spatial_[k], out);
}

Vector LoadVector::derivative(double t) const {
  Vector out(dim_, 0.0);
  for (std::size_t k = 0; k < spatial_.size(); ++k) {
    double d;
    if (!derivatives_.empty()) {
      d = derivatives_[k](t);
    } else {
      const double h = 1e-6 * std::max(1.0, std::abs(t));
      d = (factors_[k](t + h) - factors_[k](t - h)) / (2.0 * h);
    }
    axpy(d, spatial_[k], out);
  }
  return out;
}

LoadVector LoadVector::scaled(double s) const {
  LoadVector out = *this;
  for (auto& v : out.spatial_)
    for (double& x : v) x *= s;
  return out;
}

// -- two-field ------------------------------------------------------------

double TwoFieldSystem::consistency_residual() const {
  Vector r = f.at(0.0);
  const double nf = norm2(r);
  for (double& v : r) v = -v;
  K_a.multiply_add(u0, r);
  D.multiply_transpose_add(p0, r, -1.0);
  return norm2(r) / (1.0 + nf);
}

void TwoFieldSystem::check() const {
  const std::size_t nu = K_a.rows(), np = M_c.rows();
  std::vector<std::string> bad;
  if (!K_a.square()) bad.push_back("K_a not square");
  if (K_b.rows() != np || K_b.cols() != np) bad.push_back("K_b does not match M_c");
  if (!M_c.square()) bad.push_back("M_c not square");
  if (D.rows() != np || D.cols() != nu) bad.push_back("D is not dim_p x dim_u");
  if (u0.size() != nu || p0.size() != np) bad.push_back("initial data size");
  if (f.dim() != nu || g.dim() != np) bad.push_back("load size");
  if (!bad.empty()) {
    std::string s = "two-field system:";
    for (const auto& b : bad) s += " " + b + ";";
    throw ValidationError(s);
  }
  const double r = consistency_residual();
  if (!(r <= 1e-8)) {
    throw ValidationError("two-field system: initial data inconsistent, residual " + std::to_string(r));
  }
}

TwoFieldSystem TwoFieldSystem::from_matrices(SparseMatrix K_a, SparseMatrix K_b, SparseMatrix M_c, SparseMatrix D,
                                             LoadVector f, LoadVector g, Vector p0) {
  TwoFieldSystem s;
  s.K_a = std::move(K_a);
  s.K_b = std::move(K_b);
  s.M_c = std::move(M_c);
  s.D = std::move(D);
  s.f = std::move(f);
  s.g = std::move(g);
  s.p0 = std::move(p0);
  if (s.D.cols() != s.K_a.rows() || s.D.rows() != s.p0.size() || s.f.dim() != s.K_a.rows()) {
    throw ValidationError("two-field system: D, p0 and f do not conform with K_a");
  }
  Vector rhs = s.f.at(0.0);
  s.D.multiply_transpose_add(s.p0, rhs);
  s.u0 = solve_spd(s.K_a, rhs).solution;
  s.check();
  return s;
}

// -- network --------------------------------------------------------------

double NetworkSystem::consistency_residual() const {
  Vector r = f.at(0.0);
  const double nf = norm2(r);
  for (double& v : r) v = -v;
  K_a.multiply_add(u0, r);
  for (std::size_t i = 0; i < m; ++i) D[i].multiply_transpose_add(p0[i], r, -1.0);
  return norm2(r) / (1.0 + nf);
}

double NetworkSystem::flux_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    Vector b = D_hat[i].apply_transpose(p0[i]);
    Vector r = M_y.apply(y0[i]);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= b[k];
    worst = std::max(worst, norm2(r) / (1.0 + norm2(b)));
  }
  return worst;
}

void NetworkSystem::check() const {
  const std::size_t nu = K_a.rows(), ny = M_y.rows(), np = M_c.rows();
  std::vector<std::string> bad;
  if (m == 0) bad.push_back("m must be at least 1");
  if (D.size() != m || D_hat.size() != m || g.size() != m || p0.size() != m || y0.size() != m) {
    bad.push_back("per-network lists must have length m");
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      if (D[i].rows() != np || D[i].cols() != nu) bad.push_back("D_" + std::to_string(i + 1) + " shape");
      if (D_hat[i].rows() != np || D_hat[i].cols() != ny) bad.push_back("D_hat_" + std::to_string(i + 1) + " shape");
      if (g[i].dim() != np || p0[i].size() != np || y0[i].size() != ny) bad.push_back("network " + std::to_string(i + 1) + " data size");
    }
  }
  if (M_Q.rows() != np) bad.push_back("M_Q shape");
  if (f.dim() != nu || u0.size() != nu) bad.push_back("displacement data size");
  if (!beta.empty()) {
    bool ok = beta.size() == m;
    for (const auto& row : beta) ok = ok && row.size() == m;
    if (!ok) bad.push_back("beta must be m x m");
    for (const auto& row : beta)
      for (double b : row)
        if (!(b >= 0.0)) bad.push_back("beta entries must be >= 0");
  }
  if (!bad.empty()) {
    std::string s = "network system:";
    for (const auto& b : bad) s += " " + b + ";";
    throw ValidationError(s);
  }
  const double r = consistency_residual();
  if (!(r <= 1e-8)) throw ValidationError("network system: initial data inconsistent, residual " + std::to_string(r));
  const double ry = flux_residual();
  if (!(ry <= 1e-8)) throw ValidationError("network system: initial fluxes inconsistent, residual " + std::to_string(ry));
}

NetworkSystem NetworkSystem::from_matrices(SparseMatrix K_a, SparseMatrix M_y, SparseMatrix M_c, SparseMatrix M_Q,
                                           std::vector<SparseMatrix> D, std::vector<SparseMatrix> D_hat,
                                           std::vector<std::vector<double>> beta, LoadVector f,
                                           std::vector<LoadVector> g, std::vector<Vector> p0) {
  NetworkSystem s;
  s.m = p0.size();
  s.K_a = std::move(K_a);
  s.M_y = std::move(M_y);
  s.M_c = std::move(M_c);
  s.M_Q = std::move(M_Q);
  s.D = std::move(D);
  s.D_hat = std::move(D_hat);
  s.beta = std::move(beta);
  s.f = std::move(f);
  s.g = std::move(g);
  s.p0 = std::move(p0);
  if (s.m == 0 || s.D.size() != s.m || s.D_hat.size() != s.m) {
    throw ValidationError("network system: need m >= 1 pressures with one D and D_hat each");
  }
  Vector rhs = s.f.at(0.0);
  if (rhs.size() != s.K_a.rows()) throw ValidationError("network system: f does not conform with K_a");
  for (std::size_t i = 0; i < s.m; ++i) {
    if (s.D[i].cols() != rhs.size() || s.D[i].rows() != s.p0[i].size()) {
      throw ValidationError("network system: D_" + std::to_string(i + 1) + " does not conform");
    }
    s.D[i].multiply_transpose_add(s.p0[i], rhs);
  }
  s.u0 = solve_spd(s.K_a, rhs).solution;
  const SpdSolver my(s.M_y);
  s.y0.clear();
  for (std::size_t i = 0; i < s.m; ++i) s.y0.push_back(my.solve(s.D_hat[i].apply_transpose(s.p0[i])).solution);
  s.check();
  return s;
}

// -- builders -------------------------------------------------------------

ToyTwoField build_toy(double omega, double p0) {
  const auto a = SparseMatrix::from_dense({{2, -1, 0}, {-1, 2, -1}, {0, -1, 2}});
  const auto d = SparseMatrix::from_dense({{omega, 2 * omega, 3 * omega}});
  LoadVector f(3);
  f.add_term({1.0, 1.0, 1.0}, [](double) { return 1.0; });
  f.set_derivatives({[](double) { return 0.0; }});
  LoadVector g(1);
  g.add_term({1.0}, [](double t) { return std::sin(t); });
  g.set_derivatives({[](double t) { return std::cos(t); }});
  ToyTwoField toy;
  toy.omega = omega;
  toy.system = TwoFieldSystem::from_matrices(a, SparseMatrix::identity(1), SparseMatrix::identity(1), d, std::move(f),
                                             std::move(g), Vector{p0});
  toy.system.params.lambda = 0.0;
  toy.system.params.mu = 1.0;
  toy.system.params.kappa_over_nu = {1.0};
  toy.system.params.inv_M = 1.0;
  toy.system.params.alpha = {omega};
  toy.system.pressure_bc = "none";
  return toy;
}

TriMesh build_mesh(const Config& config) {
  const long n = config.integer_or("mesh.n", 16);
  if (n < 1) throw ConfigError("mesh.n must be at least 1");
  TriMesh mesh = unit_square_mesh(static_cast<std::size_t>(n));
  const std::string domain = config.get_or("mesh.domain", "square");
  if (domain == "punched") {
    mesh = punch_hole(mesh, {config.number_or("mesh.hole_x", 0.5), config.number_or("mesh.hole_y", 0.5)},
                      config.number_or("mesh.hole_r", 0.25));
  } else if (domain != "square") {
    throw ConfigError("mesh.domain must be square or punched (got '" + domain + "')");
  }
  return mesh;
}

namespace {

ScalarField space_field(const Expression& e, const std::string& key) {
  if (e.uses_time()) throw ConfigError("key '" + key + "' must not depend on t (loads are separable)");
  return [e](double x, double y) { return e(x, y, 0.0); };
}

TimeFunction time_factor(const Expression& e, const std::string& key) {
  if (e.uses_space()) throw ConfigError("key '" + key + "' must depend on t only");
  return [e](double t) { return e(0.0, 0.0, t); };
}

bool is_literal_zero(const Config& c, const std::string& key) {
  if (!c.has(key)) return true;
  const Expression e = c.expression(key);
  return !e.uses_space() && !e.uses_time() && e.eval() == 0.0;
}

LoadVector displacement_load(const Config& c, const TriMesh& mesh, const DofMap& u) {
  LoadVector f(u.num_free);
  if (is_literal_zero(c, "loads.f_x") && is_literal_zero(c, "loads.f_y")) return f;
  const ScalarField fx = space_field(c.expression_or("loads.f_x", "0"), "loads.f_x");
  const ScalarField fy = space_field(c.expression_or("loads.f_y", "0"), "loads.f_y");
  Vector spatial = assemble_vector_load(mesh, u, [&](double x, double y) { return Point{fx(x, y), fy(x, y)}; });
  f.add_term(std::move(spatial), time_factor(c.expression_or("loads.f_time", "1"), "loads.f_time"));
  return f;
}

LoadVector pressure_load(const Config& c, const TriMesh& mesh, const DofMap& q, const std::string& space_key,
                         const std::string& time_key) {
  LoadVector g(q.num_free);
  if (is_literal_zero(c, space_key)) return g;
  Vector spatial = assemble_load(mesh, q, space_field(c.expression(space_key), space_key));
  g.add_term(std::move(spatial), time_factor(c.expression_or(time_key, "1"), time_key));
  return g;
}

}  // namespace

TwoFieldSystem build_two_field(const Config& config) {
  PoroParams params;
  params.lambda = config.number("params.lambda");
  params.mu = config.number("params.mu");
  params.kappa_over_nu = {config.number("params.kappa_over_nu")};
  params.inv_M = config.number("params.inv_M");
  params.alpha = {config.number("params.alpha")};
  params.validate();

  auto mesh = std::make_shared<const TriMesh>(build_mesh(config));
  const std::string bc = config.get_or("params.pressure_bc", "dirichlet");
  if (bc != "dirichlet" && bc != "natural") throw ConfigError("params.pressure_bc must be dirichlet or natural");
  const DofMap u = make_dofmap(*mesh, SpaceKind::p1_vector, Elimination::all_boundary);
  const DofMap p = make_dofmap(*mesh, SpaceKind::p1_scalar, bc == "dirichlet" ? Elimination::all_boundary : Elimination::none);

  P1Forms forms = assemble_p1_forms(*mesh, u, p, params);
  LoadVector f = displacement_load(config, *mesh, u);
  LoadVector g = pressure_load(config, *mesh, p, "loads.g_space", "loads.g_time");
  Vector p0 = interpolate(*mesh, p, space_field(config.expression_or("initial.p", "0"), "initial.p"));

  TwoFieldSystem s = TwoFieldSystem::from_matrices(std::move(forms.K_a), std::move(forms.K_b), std::move(forms.M_c),
                                                   std::move(forms.D), std::move(f), std::move(g), std::move(p0));
  s.params = params;
  s.mesh = mesh;
  s.u_map = u;
  s.p_map = p;
  s.pressure_bc = bc;
  return s;
}

NetworkSystem build_network(const Config& config, std::vector<std::string>* warnings) {
  const long m = config.integer_or("params.m", 1);
  if (m < 1 || m > 9) throw ConfigError("params.m must lie in 1..9");
  PoroParams params;
  params.lambda = config.number("params.lambda");
  params.mu = config.number("params.mu");
  params.inv_M = config.number("params.inv_M");
  params.kappa_over_nu.clear();
  params.alpha.clear();
  for (long i = 1; i <= m; ++i) {
    const std::string idx = std::to_string(i);
    // A single network may also use the unindexed two-field keys.
    const std::string k = config.has("params.kappa_over_nu" + idx) || m > 1 ? "params.kappa_over_nu" + idx : "params.kappa_over_nu";
    const std::string a = config.has("params.alpha" + idx) || m > 1 ? "params.alpha" + idx : "params.alpha";
    params.kappa_over_nu.push_back(config.number(k));
    params.alpha.push_back(config.number(a));
  }
  bool any_beta = false;
  std::vector<std::vector<double>> beta(m, std::vector<double>(m, 0.0));
  for (long i = 1; i <= m; ++i) {
    for (long j = 1; j <= m; ++j) {
      const std::string key = "beta.b" + std::to_string(i) + std::to_string(j);
      if (config.has(key)) {
        beta[i - 1][j - 1] = config.number(key);
        any_beta = true;
      }
    }
  }
  for (const auto& [key, value] : config.entries()) {
    if (key.rfind("beta.b", 0) == 0 && (key[6] - '0' > m || key[7] - '0' > m)) {
      throw ConfigError("key '" + key + "' refers to a network beyond params.m = " + std::to_string(m));
    }
  }
  if (any_beta) params.beta = beta;
  params.validate();
  if (warnings && !params.beta_symmetric()) {
    warnings->push_back("beta table is not symmetric; exchange operator is used as given");
  }

  auto mesh = std::make_shared<const TriMesh>(build_mesh(config));
  const DofMap u = make_dofmap(*mesh, SpaceKind::p1_vector, Elimination::outer_boundary);
  const DofMap y = make_dofmap(*mesh, SpaceKind::rt0, Elimination::all_boundary);
  const DofMap q = make_dofmap(*mesh, SpaceKind::p0);
  const EdgeTopology topo = edge_topology(*mesh);

  std::vector<SparseMatrix> d, dh;
  std::vector<LoadVector> g;
  std::vector<Vector> p0;
  for (long i = 1; i <= m; ++i) {
    const std::string idx = std::to_string(i);
    d.push_back(assemble_divergence(*mesh, q, u, params.alpha[i - 1]));
    dh.push_back(assemble_rt0_divergence(*mesh, topo, y, q, std::sqrt(params.kappa_over_nu[i - 1])));
    g.push_back(pressure_load(config, *mesh, q, "loads.g" + idx + "_space", "loads.g" + idx + "_time"));
    const std::string pkey = config.has("initial.p" + idx) || m > 1 ? "initial.p" + idx : "initial.p";
    p0.push_back(interpolate(*mesh, q, space_field(config.expression_or(pkey, "0"), pkey)));
  }

  NetworkSystem s = NetworkSystem::from_matrices(
      assemble_elasticity(*mesh, u, params.lambda, params.mu), assemble_rt0_mass(*mesh, topo, y),
      assemble_p0_mass(*mesh, q, params.inv_M), assemble_p0_mass(*mesh, q, 1.0), std::move(d), std::move(dh),
      params.beta, displacement_load(config, *mesh, u), std::move(g), std::move(p0));
  s.params = params;
  s.mesh = mesh;
  s.u_map = u;
  s.y_map = y;
  s.q_map = q;
  return s;
}

CouplingConstants coupling_constants(const TwoFieldSystem& s) {
  CouplingConstants cc;
  const SpdSolver ka(s.K_a);
  const SpdSolver mc(s.M_c);
  const std::size_t nu = s.dim_u(), np = s.dim_p();

  LinearOperator delay_op = [&](std::span<const double> x, std::span<double> y) {
    Vector w = s.D.apply_transpose(x);
    ka.solve_in_place(w);
    s.D.multiply(w, y);
    mc.solve_in_place(y);
  };
  cc.rho = spectral_radius(delay_op, np, 1e-10, 100000);

  LinearOperator ddt = [&](std::span<const double> x, std::span<double> y) { s.D.multiply(s.D.apply_transpose(x), y); };
  cc.C_d = std::sqrt(spectral_radius(ddt, np, 1e-12, 100000));
  cc.stable = cc.rho < 1.0;

  if (!s.mesh) {
    LinearOperator ka_inv = [&](std::span<const double> x, std::span<double> y) {
      std::copy(x.begin(), x.end(), y.begin());
      ka.solve_in_place(y);
    };
    LinearOperator mc_inv = [&](std::span<const double> x, std::span<double> y) {
      std::copy(x.begin(), x.end(), y.begin());
      mc.solve_in_place(y);
    };
    cc.c_a = 1.0 / spectral_radius(ka_inv, nu, 1e-12, 100000);
    cc.c_c = 1.0 / spectral_radius(mc_inv, np, 1e-12, 100000);
    const double lhs = cc.C_d * cc.C_d;
    const double rhs = *cc.c_a * *cc.c_c;
    if (std::abs(lhs - rhs) <= 1e-3 * rhs) {
      cc.weak_coupling = "satisfied (tight)";
    } else {
      cc.weak_coupling = lhs < rhs ? "satisfied" : "violated";
    }
  } else {
    cc.weak_coupling = cc.stable ? "satisfied (rho < 1, c_a not computed)" : "violated (rho >= 1, c_a not computed)";
  }
  return cc;
}

bool exchange_condition(const PoroParams& params) {
  const double m = static_cast<double>(params.networks());
  return 6.0 * params.beta_max() * (m - 1.0) <= params.inv_M;
}

}  // namespace porodec
