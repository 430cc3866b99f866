#pragma once

#include <map>
#include <string>
#include <string_view>

#include "styler/image.hpp"
#include "styler/training.hpp"

namespace styler {

/// Slow reference effects that BLADE models are trained to approximate.
enum class Effect { etf, tvflow, flowxdog, detail };

Effect parse_effect(std::string_view name);
std::string_view effect_name(Effect e);

/// Effect parameters by name (e.g. "rho", "length", "sigma", "p", "delta").
using EffectParams = std::map<std::string, double>;

/// Defaults for every parameter the effect understands.
EffectParams default_effect_params(Effect e);

/// Merges overrides into the defaults; unknown keys throw InvalidInput.
EffectParams resolve_effect_params(Effect e, const EffectParams& overrides);

/// Renders the reference effect on a 1-channel image (unclipped).
Image render_reference(Effect e, const Image& luma, const EffectParams& params);

/// Per-effect footprint and quantizer (ETF 24/1/3 at 5x5, TV flow 16/4/4 at
/// 7x7, Flow-XDoG 16/5/3 at 7x7, detail 16/5/3 at 9x9). Strength thresholds
/// are left empty for the trainer to fill from data.
TrainingConfig default_training_config(Effect e);

}  // namespace styler
