#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "paritylab/attention.hpp"
#include "paritylab/probes.hpp"
#include "paritylab/risk.hpp"

namespace paritylab {

// All files start with a '#' comment carrying the resolved run config so the
// artifacts are self-describing. Floats print as %.17g (round-trip exact);
// checkpoints use C99 hex floats for bit-exact replay.

std::string format_double(double v);      // %.17g
std::string format_double_hex(double v);  // %a
double parse_double(const std::string& s);

void write_trajectory_csv(const std::string& path, const std::string& config_line,
                          const TrajectoryLog& log);
void write_attention_csv(const std::string& path, const std::string& config_line,
                         const AttentionMap& map);
// P2 image: rows = heads, columns = positions, gray = round(255 * gamma).
void write_attention_pgm(const std::string& path, const std::string& config_line,
                         const AttentionMap& map);
void write_probes_csv(const std::string& path, const std::string& config_line,
                      std::span<const ProbeReport> reports);

// key=value lines, doubles hex-encoded.
void write_checkpoint(const std::string& path, const std::string& config_line,
                      const std::vector<std::pair<std::string, std::string>>& entries);
std::map<std::string, std::string> read_checkpoint(const std::string& path);

std::vector<std::pair<std::string, std::string>> checkpoint_entries(const AttentionHeads& heads,
                                                                    const ParitySpec& spec,
                                                                    const TrainConfig& config,
                                                                    const TrajectoryLog& log);

}  // namespace paritylab
