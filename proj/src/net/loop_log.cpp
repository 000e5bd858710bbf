#include "cdpr/net/loop_log.hpp"

#include <fstream>
#include <sstream>

#include "cdpr/csv.hpp"
#include "cdpr/error.hpp"

namespace cdpr::net {

namespace {

std::string header(std::size_t m) {
  std::string h = "t_us,target_x,target_y";
  for (std::size_t i = 1; i <= m; ++i) h += ",cmd_l" + std::to_string(i);
  h += ",meas_x,meas_y";
  for (std::size_t i = 1; i <= m; ++i) h += ",meas_l" + std::to_string(i);
  for (std::size_t i = 1; i <= m; ++i) h += ",t" + std::to_string(i);
  h += ",state_age_us";
  return h;
}

std::int64_t to_int(const std::string& field) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(field, &used);
    if (used != field.size()) throw ParseError("bad integer '" + field + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad integer '" + field + "'");
  }
}

}  // namespace

std::string loop_log_to_csv(const LoopLog& log) {
  std::ostringstream out;
  out << header(log.cable_count) << '\n';
  for (const auto& r : log.records) {
    out << r.t_us << ',' << csv::g6(r.target.x) << ',' << csv::g6(r.target.y);
    for (double v : r.cmd) out << ',' << csv::g6(v);
    out << ',' << csv::g6(r.measured.x) << ',' << csv::g6(r.measured.y);
    for (double v : r.measured_l) out << ',' << csv::g6(v);
    for (double v : r.tensions) out << ',' << csv::g6(v);
    out << ',' << r.state_age_us << '\n';
  }
  if (log.truncated) out << "# truncated\n";
  return out.str();
}

void write_loop_log(const LoopLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write loop log '" + path.string() + "'");
  out << loop_log_to_csv(log);
}

LoopLog loop_log_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty loop log");
  const auto cols = csv::split(line);
  if (cols.size() < 7 || (cols.size() - 6) % 3 != 0) throw ParseError("bad loop log header");
  LoopLog log;
  log.cable_count = (cols.size() - 6) / 3;
  if (csv::split(header(log.cable_count)) != cols) throw ParseError("bad loop log header");

  const std::size_t m = log.cable_count;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# truncated", 0) == 0) log.truncated = true;
      continue;
    }
    const auto f = csv::split(line);
    if (f.size() != cols.size()) throw ParseError("loop log row has wrong column count");
    LoopRecord r;
    std::size_t k = 0;
    r.t_us = to_int(f[k++]);
    r.target.x = csv::to_double(f[k++]);
    r.target.y = csv::to_double(f[k++]);
    for (std::size_t i = 0; i < m; ++i) r.cmd.push_back(csv::to_double(f[k++]));
    r.measured.x = csv::to_double(f[k++]);
    r.measured.y = csv::to_double(f[k++]);
    for (std::size_t i = 0; i < m; ++i) r.measured_l.push_back(csv::to_double(f[k++]));
    for (std::size_t i = 0; i < m; ++i) r.tensions.push_back(csv::to_double(f[k++]));
    r.state_age_us = to_int(f[k++]);
    if (!log.records.empty() && r.t_us < log.records.back().t_us)
      throw ParseError("loop log rows must be ordered by t_us");
    log.records.push_back(std::move(r));
  }
  return log;
}

LoopLog read_loop_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open loop log '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return loop_log_from_csv(ss.str());
}

}  // namespace cdpr::net
