#include "amdyn/saddle/theory_io.hpp"

#include "amdyn/core/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace amdyn {

namespace {

using nlohmann::json;

constexpr const char* kKind = "amdyn.theory";
constexpr int kVersion = 1;

json tri_to_json(const TriMatrix& m) { return m.row_major(); }

TriMatrix tri_from_json(const json& j, TriKind kind, int t_max) {
  std::vector<double> entries = j.get<std::vector<double>>();
  require(entries.size() == static_cast<std::size_t>(t_max) * (t_max + 1) / 2,
          "theory json: triangular array has the wrong length");
  return TriMatrix::from_row_major(kind, t_max, std::move(entries));
}

json hatted_to_json(const HattedParams& h) {
  return {{"m_hat_u", h.m_hat_u},         {"m_hat_v", h.m_hat_v},
          {"R_hat", h.R_hat},             {"q_hat_u", tri_to_json(h.q_hat_u)},
          {"q_hat_v", tri_to_json(h.q_hat_v)}, {"chi_hat_u", tri_to_json(h.chi_hat_u)},
          {"chi_hat_v", tri_to_json(h.chi_hat_v)}};
}

HattedParams hatted_from_json(const json& j) {
  HattedParams h;
  h.m_hat_u = j.at("m_hat_u").get<std::vector<double>>();
  h.m_hat_v = j.at("m_hat_v").get<std::vector<double>>();
  h.R_hat = j.at("R_hat").get<std::vector<double>>();
  const int tu = h.t_u();
  const int tv = h.t_v();
  h.q_hat_u = tri_from_json(j.at("q_hat_u"), TriKind::symmetric, tu);
  h.q_hat_v = tri_from_json(j.at("q_hat_v"), TriKind::symmetric, tv);
  h.chi_hat_u = tri_from_json(j.at("chi_hat_u"), TriKind::symmetric, tu);
  h.chi_hat_v = tri_from_json(j.at("chi_hat_v"), TriKind::symmetric, tv);
  return h;
}

}  // namespace

nlohmann::json theory_to_json(const SolveResult& r) {
  const OrderParams& p = r.params;
  const int T = p.t_u();
  json per_t = json::array();
  for (int t = 1; t <= T; ++t) {
    per_t.push_back({{"t", t},
                     {"m_u", p.m_u[t - 1]},
                     {"m_v", p.m_v[t - 1]},
                     {"R", p.R[t - 1]},
                     {"m_cos", r.m_cos[t - 1]},
                     {"q_uu", p.q_u(t, t)},
                     {"q_vv", p.q_v(t, t)}});
  }
  json blocks = json::array();
  for (const auto& b : r.blocks) {
    blocks.push_back({{"t", b.t},
                      {"phase", to_string(b.phase)},
                      {"iterations", b.iterations},
                      {"residual", b.residual},
                      {"jitter", b.jitter},
                      {"history", b.history}});
  }
  json traj = nullptr;
  if (r.trajectory_se) {
    const auto& e = *r.trajectory_se;
    traj = {{"sections", e.sections}, {"m_u", e.m_u},   {"m_v", e.m_v}, {"R", e.R},
            {"q_uu", e.q_uu},         {"q_vv", e.q_vv}, {"chi_uu", e.chi_uu},
            {"chi_vv", e.chi_vv},     {"m_cos", e.m_cos}};
  }
  return {
      {"kind", kKind},
      {"version", kVersion},
      {"config",
       {{"kappa", r.config.kappa}, {"lambda", r.config.lambda}, {"m0", r.config.m0},
        {"T", r.config.t_max}}},
      {"opts",
       {{"n_mc", r.opts.n_mc},
        {"damping", r.opts.damping},
        {"tol", r.opts.tol},
        {"max_inner_iters", r.opts.max_inner_iters},
        {"seed", r.opts.seed},
        {"buckets", r.opts.buckets},
        {"jitter", r.opts.jitter},
        {"rel_floor", r.opts.rel_floor}}},
      {"per_t", per_t},
      {"triangular",
       {{"q_u", tri_to_json(p.q_u)},
        {"q_v", tri_to_json(p.q_v)},
        {"chi_u", tri_to_json(p.chi_u)},
        {"chi_v", tri_to_json(p.chi_v)}}},
      {"hatted", hatted_to_json(r.hatted)},
      {"mc_standard_errors", hatted_to_json(r.hatted_se)},
      {"trajectory_standard_errors", traj},
      {"diagnostics", {{"wall_seconds", r.wall_seconds}, {"blocks", blocks}}},
  };
}

SolveResult theory_from_json(const nlohmann::json& doc) {
  try {
    require(doc.at("kind").get<std::string>() == kKind, "theory json: unexpected kind");
    SolveResult r;
    const json& c = doc.at("config");
    r.config.kappa = c.at("kappa").get<double>();
    r.config.lambda = c.at("lambda").get<double>();
    r.config.m0 = c.at("m0").get<double>();
    r.config.t_max = c.at("T").get<int>();
    const json& o = doc.at("opts");
    r.opts.n_mc = o.at("n_mc").get<std::size_t>();
    r.opts.damping = o.at("damping").get<double>();
    r.opts.tol = o.at("tol").get<double>();
    r.opts.max_inner_iters = o.at("max_inner_iters").get<int>();
    r.opts.seed = o.at("seed").get<std::uint64_t>();
    r.opts.buckets = o.at("buckets").get<std::size_t>();
    r.opts.jitter = o.at("jitter").get<double>();
    r.opts.rel_floor = o.value("rel_floor", r.opts.rel_floor);

    OrderParams& p = r.params;
    p.m0 = r.config.m0;
    for (const auto& row : doc.at("per_t")) {
      p.m_u.push_back(row.at("m_u").get<double>());
      p.m_v.push_back(row.at("m_v").get<double>());
      p.R.push_back(row.at("R").get<double>());
      r.m_cos.push_back(row.at("m_cos").get<double>());
    }
    const int T = p.t_u();
    const json& tri = doc.at("triangular");
    p.q_u = tri_from_json(tri.at("q_u"), TriKind::symmetric, T);
    p.q_v = tri_from_json(tri.at("q_v"), TriKind::symmetric, T);
    p.chi_u = tri_from_json(tri.at("chi_u"), TriKind::causal, T);
    p.chi_v = tri_from_json(tri.at("chi_v"), TriKind::causal, T);
    r.hatted = hatted_from_json(doc.at("hatted"));
    r.hatted_se = hatted_from_json(doc.at("mc_standard_errors"));

    const json& traj = doc.at("trajectory_standard_errors");
    if (!traj.is_null()) {
      TrajectoryErrors e;
      e.sections = traj.at("sections").get<int>();
      e.m_u = traj.at("m_u").get<std::vector<double>>();
      e.m_v = traj.at("m_v").get<std::vector<double>>();
      e.R = traj.at("R").get<std::vector<double>>();
      e.q_uu = traj.at("q_uu").get<std::vector<double>>();
      e.q_vv = traj.at("q_vv").get<std::vector<double>>();
      e.chi_uu = traj.at("chi_uu").get<std::vector<double>>();
      e.chi_vv = traj.at("chi_vv").get<std::vector<double>>();
      e.m_cos = traj.at("m_cos").get<std::vector<double>>();
      r.trajectory_se = std::move(e);
    }
    const json& diag = doc.at("diagnostics");
    r.wall_seconds = diag.at("wall_seconds").get<double>();
    for (const auto& b : diag.at("blocks")) {
      BlockDiagnostics d;
      d.t = b.at("t").get<int>();
      d.phase = b.at("phase").get<std::string>() == "u" ? Phase::u : Phase::v;
      d.iterations = b.at("iterations").get<int>();
      d.residual = b.at("residual").get<double>();
      d.jitter = b.at("jitter").get<double>();
      d.history = b.at("history").get<std::vector<double>>();
      r.blocks.push_back(std::move(d));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("theory json: ") + e.what());
  }
}

void write_file_atomic(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_theory(const SolveResult& result, const std::string& path) {
  write_file_atomic(path, theory_to_json(result).dump(2) + "\n");
}

SolveResult read_theory(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ContractViolation(path + ": " + e.what());
  }
  return theory_from_json(doc);
}

}  // namespace amdyn
