#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "fes/nn/param_store.hpp"

namespace fes::nn {

inline constexpr std::string_view kCheckpointMagic = "FES-CKPT-1";

/// Parameters plus free-form metadata. Moment buffers are not persisted.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  ParamStore params;
};

// Text layout:
//   FES-CKPT-1
//   meta <key> <value...>
//   tensor <name> <rank> <rows> <cols>
//   <row-major values, shortest round-trip decimal>
//   end
void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

}  // namespace fes::nn
