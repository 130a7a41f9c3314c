#pragma once

#include <string>

namespace satnet {

/// Attention strategy of a selective-attention layer. `none` reduces the
/// layer to plain feature-correlation attention.
enum class Strategy { none, contractive, subtractive };

/// Which dissimilarity terms participate in the attention adjustment.
enum class DissimMode { both, feature_only, structure_only };

std::string to_string(Strategy s);
std::string to_string(DissimMode m);
Strategy strategy_from_string(const std::string& s);
DissimMode dissim_from_string(const std::string& s);

} // namespace satnet
