#include "amdyn/harness/records.hpp"

#include "amdyn/core/errors.hpp"
#include "amdyn/core/parallel.hpp"
#include "amdyn/saddle/theory_io.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

namespace amdyn {

void RunRecord::validate() const {
  const std::size_t T = stats.m_cos.size();
  require(stats.m_u.size() == T && stats.m_v.size() == T && stats.R.size() == T &&
              stats.q_uu.size() == T && stats.q_vv.size() == T,
          "RunRecord: per-t series have different lengths");
}

std::string records_csv_header() { return "seed,t,m_u,m_v,R,q_uu,q_vv,m_cos"; }

std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::string out = records_csv_header() + "\n";
  char buf[512];
  for (const RunRecord& r : records) {
    r.validate();
    const EmpiricalStats& s = r.stats;
    for (int t = 1; t <= r.t_max(); ++t) {
      const std::size_t j = static_cast<std::size_t>(t - 1);
      std::snprintf(buf, sizeof buf, "%llu,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    static_cast<unsigned long long>(r.seed), t, s.m_u[j], s.m_v[j], s.R[j],
                    s.q_uu[j], s.q_vv[j], s.m_cos[j]);
      out += buf;
    }
  }
  return out;
}

std::vector<RunRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(std::getline(in, line) && line == records_csv_header(),
          "records_from_csv: missing or unexpected header");
  std::vector<RunRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    unsigned long long seed = 0;
    int t = 0;
    double v[6];
    int used = 0;
    const int got = std::sscanf(line.c_str(), "%llu,%d,%lf,%lf,%lf,%lf,%lf,%lf%n", &seed, &t,
                                &v[0], &v[1], &v[2], &v[3], &v[4], &v[5], &used);
    if (got != 8 || static_cast<std::size_t>(used) != line.size()) {
      throw ContractViolation("records_from_csv: malformed row at line " +
                              std::to_string(line_no));
    }
    RunRecord* rec = nullptr;
    for (RunRecord& r : out) {
      if (r.seed == seed) rec = &r;
    }
    if (!rec) {
      out.emplace_back();
      rec = &out.back();
      rec->seed = seed;
    }
    if (t != rec->t_max() + 1) {
      throw ContractViolation("records_from_csv: seed " + std::to_string(seed) +
                              " has a gap or repeat at t=" + std::to_string(t));
    }
    EmpiricalStats& s = rec->stats;
    s.m_u.push_back(v[0]);
    s.m_v.push_back(v[1]);
    s.R.push_back(v[2]);
    s.q_uu.push_back(v[3]);
    s.q_vv.push_back(v[4]);
    s.m_cos.push_back(v[5]);
  }
  return out;
}

void write_records(const std::string& path, const std::vector<RunRecord>& records) {
  write_file_atomic(path, records_to_csv(records));
}

std::vector<RunRecord> read_records(const std::string& path) {
  return records_from_csv(read_file(path));
}

RunRecord simulate_seed(const ModelConfig& config, AmMode mode, std::uint64_t seed,
                        const AmOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  const Instance inst = gen_instance(config, RngStream(seed, 0));
  AmResult res = run_am(inst, config, mode, RngStream(seed, 1), opts);
  RunRecord rec;
  rec.m0 = config.m0;
  rec.kappa = config.kappa;
  rec.n = config.n;
  rec.seed = seed;
  rec.engine = to_string(mode);
  rec.stats = std::move(res.stats);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<RunRecord> simulate_seeds(const ModelConfig& config, AmMode mode,
                                      const std::vector<std::uint64_t>& seeds,
                                      std::size_t workers, const AmOptions& opts) {
  config.validate();
  if (workers == 0) workers = default_workers();
  std::vector<RunRecord> out(seeds.size());
  parallel_for(seeds.size(), std::min(workers, std::max<std::size_t>(seeds.size(), 1)),
               [&](std::size_t begin, std::size_t end, std::size_t) {
                 for (std::size_t i = begin; i < end; ++i) {
                   out[i] = simulate_seed(config, mode, seeds[i], opts);
                 }
               });
  return out;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = first + i;
  return out;
}

}  // namespace amdyn
