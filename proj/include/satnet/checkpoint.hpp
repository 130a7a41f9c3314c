#pragma once

#include <string>

#include "satnet/model.hpp"

namespace satnet {

/// Versioned binary dump of the run config plus every named parameter tensor
/// with its shape. Native endianness.
void save_checkpoint(const std::string& path, Model& model);

/// Rebuilds the model recorded in the checkpoint against `g` and restores
/// all parameter values. Throws VersionError on magic/version mismatch and
/// ValidationError when the checkpoint does not fit the graph.
Model load_checkpoint(const std::string& path, const Graph& g);

} // namespace satnet
