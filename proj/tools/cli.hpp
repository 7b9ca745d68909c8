#pragma once

#include <string>
#include <vector>

namespace phoneval::cli {

/// Resolved run configuration. Values come from flags, which override the
/// optional JSON config file (same field names, snake_case).
struct RunConfig {
  std::string manifest_dir;
  std::string dict_path;
  std::string overlay_path;
  std::vector<std::string> hyp_paths;
  std::string markers_path;
  std::string out_dir = "out";
  std::string word_tier = "word|words|ortho";
  std::string phone_tier = "phone|phones|segment";
  std::string stress_mode = "strip";   // strip | keep
  std::string cost_preset = "sclite";  // sclite | unit
  int cost_sub = -1;                   // >= 0 overrides the preset
  int cost_del = -1;
  int cost_ins = -1;
  double alpha = 0.05;
  unsigned threads = 0;  // 0 = hardware concurrency
  std::string lmm_metric = "both";  // wer | per | both
  std::string ref_group;
  std::string ref_system;
  bool context_overlap = false;
};

struct Diagnostic {
  bool fatal = false;
  std::string message;
};

/// Static checks for one subcommand: missing files and incoherent options
/// are fatal; suspicious-but-workable inputs are warnings.
std::vector<Diagnostic> validate(const RunConfig& config,
                                 const std::string& subcommand);

/// Entry point behind main(). Exit codes: 0 success, 1 usage/validation
/// error, 2 data error (parse failures, dangling references).
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without program name

}  // namespace phoneval::cli
