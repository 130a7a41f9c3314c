#include "satnet/types.hpp"

#include "satnet/error.hpp"

namespace satnet {

std::string to_string(Strategy s) {
    switch (s) {
    case Strategy::none: return "none";
    case Strategy::contractive: return "contractive";
    case Strategy::subtractive: return "subtractive";
    }
    return "?";
}

std::string to_string(DissimMode m) {
    switch (m) {
    case DissimMode::both: return "both";
    case DissimMode::feature_only: return "feature";
    case DissimMode::structure_only: return "structure";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "none") return Strategy::none;
    if (s == "contractive") return Strategy::contractive;
    if (s == "subtractive") return Strategy::subtractive;
    throw ConfigError("unknown strategy \"" + s + "\" (expected none|contractive|subtractive)");
}

DissimMode dissim_from_string(const std::string& s) {
    if (s == "both") return DissimMode::both;
    if (s == "feature") return DissimMode::feature_only;
    if (s == "structure") return DissimMode::structure_only;
    throw ConfigError("unknown dissimilarity mode \"" + s + "\" (expected both|feature|structure)");
}

} // namespace satnet
