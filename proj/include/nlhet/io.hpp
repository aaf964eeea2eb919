#pragma once

#include <map>
#include <string>
#include <vector>

#include "nlhet/appendix_bench.hpp"
#include "nlhet/diagnostics.hpp"
#include "nlhet/discretize.hpp"
#include "nlhet/obstacles.hpp"
#include "nlhet/solver.hpp"

namespace nlhet {

// 17 significant digits; round-trips every double.
std::string fmt(double v);

std::string sha256_hex(const std::string& data);

// Writes path.tmp then renames over path. IoError on failure.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// x,Q,Qsharp,v
std::string profile_csv(const Profile& q, const Profile& qsharp);
// x,phi,psi,Phi,Psi
std::string obstacle_csv(const ObstaclePair& pair);
// iter,viscous,penalty,potential,interaction,total,grad_norm; iter counts across stages
std::string energy_trace_csv(const std::vector<StageRecord>& trace);
// k,l2,hs,ratio_l2,ratio_hs
std::string bench_csv(const ScalingTable& t);
// x,log_abs_dev
std::string tail_fit_csv(const TailFit& f);

struct ProfileDump {
  Profile q;
  Profile qsharp;
};

// Parses a profile CSV. Header must be x,Q,Qsharp,v; nodes uniform with an odd count,
// symmetric about 0; v = Q - Qsharp. The end values become the far fields.
ProfileDump parse_profile_csv(const std::string& text, const std::string& source = "<profile>");
ProfileDump read_profile_csv(const std::string& path);

// Exclusive lock file inside an output directory; released on destruction.
class DirLock {
 public:
  explicit DirLock(const std::string& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::string path_;
};

struct RunManifest {
  std::string config_digest;
  std::string command;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> verdicts;  // pass / fail / measured value
};

std::string manifest_json(const RunManifest& m);
// Written last, atomically. Throws IoError if a listed output is missing or empty.
void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace nlhet
