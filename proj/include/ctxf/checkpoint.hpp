#pragma once

#include <string>

#include "ctxf/optim.hpp"

namespace ctxf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary checkpoint container: magic "CTXF", u32 version, then one record per
// parameter in list order (u32 name length + bytes, u32 ndim, u32 dims,
// little-endian float payload) until end of file. Writing the same parameters
// twice produces byte-identical files.
void save_checkpoint(const std::string& path, const ParamList& params);

// Loads every record in file order. Tensors are created without gradients.
ParamList load_checkpoint(const std::string& path);

// Copies checkpoint values into an existing parameter list. Every name must
// resolve and shapes must match exactly; extra or missing records are errors.
void load_checkpoint_into(const std::string& path, ParamList& params);

}  // namespace ctxf
