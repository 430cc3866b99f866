#include "styler/effects.hpp"

#include "styler/reference_filters.hpp"

namespace styler {

Effect parse_effect(std::string_view name) {
  if (name == "etf") return Effect::etf;
  if (name == "tvflow") return Effect::tvflow;
  if (name == "flowxdog") return Effect::flowxdog;
  if (name == "detail") return Effect::detail;
  throw InvalidInput("unknown effect '" + std::string(name) + "' (expected etf, tvflow, flowxdog or detail)");
}

std::string_view effect_name(Effect e) {
  switch (e) {
    case Effect::etf: return "etf";
    case Effect::tvflow: return "tvflow";
    case Effect::flowxdog: return "flowxdog";
    case Effect::detail: return "detail";
  }
  return "unknown";
}

EffectParams default_effect_params(Effect e) {
  switch (e) {
    case Effect::etf: {
      const EtfParams d;
      return {{"rho", d.rho}, {"length", d.length}, {"passes", d.passes}};
    }
    case Effect::tvflow: {
      const TvFlowParams d;
      return {{"steps", d.steps}, {"dt", d.dt}, {"epsilon", d.epsilon}};
    }
    case Effect::flowxdog: {
      const FlowXdogParams d;
      return {{"sigma", d.sigma}, {"p", d.p}, {"rho", d.rho}, {"lic_length", d.lic_length}};
    }
    case Effect::detail:
      return {{"delta", -20.0}, {"sigma", 3.0}};
  }
  return {};
}

EffectParams resolve_effect_params(Effect e, const EffectParams& overrides) {
  EffectParams p = default_effect_params(e);
  for (const auto& [k, v] : overrides) {
    if (!p.contains(k))
      throw InvalidInput("effect " + std::string(effect_name(e)) + " has no parameter '" + k + "'");
    p[k] = v;
  }
  return p;
}

Image render_reference(Effect e, const Image& luma, const EffectParams& params) {
  const EffectParams p = resolve_effect_params(e, params);
  switch (e) {
    case Effect::etf:
      return etf_smooth(luma, {p.at("rho"), p.at("length"), static_cast<int>(p.at("passes"))});
    case Effect::tvflow:
      return tv_flow(luma, {static_cast<int>(p.at("steps")), p.at("dt"), p.at("epsilon")});
    case Effect::flowxdog:
      return flow_xdog_response(luma, {p.at("sigma"), p.at("p"), p.at("rho"), p.at("lic_length")});
    case Effect::detail:
      return detail_control(luma, p.at("delta"), p.at("sigma"), false);
  }
  throw InvalidInput("unknown effect");
}

TrainingConfig default_training_config(Effect e) {
  TrainingConfig c;
  auto set = [&](int side, int o, int s, int coh) {
    c.side = side;
    c.quantizer.orientation_bins = o;
    c.quantizer.strength_bins = s;
    c.quantizer.coherence_bins = coh;
    c.quantizer.coherence_thresholds = QuantizerSpec::uniform_coherence_thresholds(coh);
    c.quantizer.rho = 2.0;
  };
  switch (e) {
    case Effect::etf: set(5, 24, 1, 3); break;
    case Effect::tvflow: set(7, 16, 4, 4); break;
    case Effect::flowxdog: set(7, 16, 5, 3); break;
    case Effect::detail: set(9, 16, 5, 3); break;
  }
  return c;
}

}  // namespace styler
