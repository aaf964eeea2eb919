#include "nlhet/io.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "nlhet/errors.hpp"

namespace nlhet {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
    if (!o) throw IoError("cannot write '" + tmp + "': " + std::strerror(errno));
    o << content;
    o.flush();
    if (!o) throw IoError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto '" + path + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string profile_csv(const Profile& q, const Profile& qsharp) {
  std::string s = "x,Q,Qsharp,v\n";
  for (std::size_t i = 0; i < q.size(); ++i) {
    double x = q.grid.x(std::int64_t(i)), a = q.values[i], b = qsharp.values[i];
    s += fmt(x) + "," + fmt(a) + "," + fmt(b) + "," + fmt(a - b) + "\n";
  }
  return s;
}

std::string obstacle_csv(const ObstaclePair& p) {
  std::string s = "x,phi,psi,Phi,Psi\n";
  for (std::size_t i = 0; i < p.phi.size(); ++i)
    s += fmt(p.phi.grid.x(std::int64_t(i))) + "," + fmt(p.phi.values[i]) + "," + fmt(p.psi.values[i]) + "," +
         fmt(p.Phi.values[i]) + "," + fmt(p.Psi.values[i]) + "\n";
  return s;
}

std::string energy_trace_csv(const std::vector<StageRecord>& trace) {
  std::string s = "iter,viscous,penalty,potential,interaction,total,grad_norm\n";
  long iter = 0;
  for (const auto& st : trace)
    for (const auto& p : st.points) {
      const auto& e = p.energy;
      s += std::to_string(iter++) + "," + fmt(e.viscous) + "," + fmt(e.penalty) + "," + fmt(e.potential) + "," +
           fmt(e.interaction) + "," + fmt(e.total) + "," + fmt(p.grad_norm) + "\n";
    }
  return s;
}

std::string bench_csv(const ScalingTable& t) {
  std::string s = "k,l2,hs,ratio_l2,ratio_hs\n";
  for (const auto& r : t.rows)
    s += std::to_string(r.k) + "," + fmt(r.l2) + "," + fmt(r.hs) + "," + fmt(r.ratio_l2) + "," + fmt(r.ratio_hs) + "\n";
  return s;
}

std::string tail_fit_csv(const TailFit& f) {
  std::string s = "x,log_abs_dev\n";
  for (std::size_t i = 0; i < f.x.size(); ++i) s += fmt(f.x[i]) + "," + fmt(f.log_abs_dev[i]) + "\n";
  return s;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double cell(const std::string& c, const std::string& where) {
  char* end = nullptr;
  double v = c.empty() ? kNaN : std::strtod(c.c_str(), &end);
  if (c.empty() || end != c.c_str() + c.size() || !std::isfinite(v))
    throw SchemaError(where + ": '" + c + "' is not a finite number");
  return v;
}

}  // namespace

ProfileDump parse_profile_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> xs, qv, sv;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string where = source + ":" + std::to_string(lineno);
    if (!header) {
      if (line != "x,Q,Qsharp,v") throw SchemaError(where + ": header must be 'x,Q,Qsharp,v', got '" + line + "'");
      header = true;
      continue;
    }
    auto cells = split(line);
    if (cells.size() != 4) throw SchemaError(where + ": expected 4 columns, got " + std::to_string(cells.size()));
    double x = cell(cells[0], where), q = cell(cells[1], where), s = cell(cells[2], where), v = cell(cells[3], where);
    if (std::fabs(v - (q - s)) > 1e-9 * (1.0 + std::fabs(q) + std::fabs(s)))
      throw SchemaError(where + ": v differs from Q - Qsharp");
    xs.push_back(x);
    qv.push_back(q);
    sv.push_back(s);
  }
  if (!header) throw SchemaError(source + ": empty file");
  std::size_t n = xs.size();
  if (n < 3 || n % 2 == 0) throw SchemaError(source + ": need an odd number >= 3 of rows, got " + std::to_string(n));
  double R = -xs.front();
  if (!(R > 0.0) || std::fabs(xs.back() - R) > 1e-9 * R) throw SchemaError(source + ": nodes must span [-R, R]");
  Grid g = Grid::make(R, n);
  for (std::size_t i = 0; i < n; ++i)
    if (std::fabs(xs[i] - g.x(std::int64_t(i))) > 1e-9 * std::max(1.0, R))
      throw SchemaError(source + ": row " + std::to_string(i + 1) + " breaks the uniform spacing");
  ProfileDump d;
  d.q.grid = d.qsharp.grid = g;
  d.q.values = std::move(qv);
  d.qsharp.values = std::move(sv);
  d.q.left_const = d.q.values.front();
  d.q.right_const = d.q.values.back();
  d.qsharp.left_const = d.qsharp.values.front();
  d.qsharp.right_const = d.qsharp.values.back();
  return d;
}

ProfileDump read_profile_csv(const std::string& path) { return parse_profile_csv(read_file(path), path); }

DirLock::DirLock(const std::string& dir) : path_((fs::path(dir) / ".nlhet.lock").string()) {
  int fd = -1, err = 0;
  for (int attempt = 0; attempt < 2 && fd < 0; ++attempt) {
    fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    err = errno;
    if (fd >= 0 || err != EEXIST || attempt > 0) break;
    // a lock left by a dead process is taken over
    long pid = 0;
    std::ifstream in(path_);
    if (!(in >> pid) || pid <= 0 || (::kill(pid_t(pid), 0) == 0 || errno != ESRCH)) break;
    ::unlink(path_.c_str());
  }
  if (fd < 0) {
    std::string why = err == EEXIST ? "another run holds " : "cannot create ";
    path_.clear();
    throw IoError(why + "the lock in '" + dir + "'");
  }
  std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto w = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirLock::~DirLock() {
  if (!path_.empty()) ::unlink(path_.c_str());
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["config_digest"] = m.config_digest;
  j["command"] = m.command;
  j["outputs"] = m.outputs;
  j["verdicts"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.verdicts) j["verdicts"][k] = v;
  return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const RunManifest& m) {
  for (const auto& o : m.outputs) {
    std::error_code ec;
    auto sz = fs::file_size(o, ec);
    if (ec || sz == 0) throw IoError("manifest output '" + o + "' is missing or empty");
  }
  write_file_atomic(path, manifest_json(m));
}

}  // namespace nlhet
