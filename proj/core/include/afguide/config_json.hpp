#pragma once

#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "afguide/afdt/pretrain.hpp"
#include "afguide/sac/agent.hpp"

namespace afguide {

using Json = nlohmann::ordered_json;

/// Throws std::invalid_argument naming the first key of `j` that is not in
/// `allowed`, or if `j` is not an object.
void require_known_keys(const Json& j, std::initializer_list<const char*> allowed,
                        const std::string& where);

Json to_json(const nn::TransformerSpec& spec);
nn::TransformerSpec transformer_spec_from_json(const Json& j, nn::TransformerSpec base = {});

Json to_json(const afdt::AfdtConfig& config);
/// Missing keys keep their defaults; unknown keys are an error.
afdt::AfdtConfig afdt_config_from_json(const Json& j, afdt::AfdtConfig base = {});

Json to_json(const sac::GuidedSacConfig& config);
sac::GuidedSacConfig sac_config_from_json(const Json& j, sac::GuidedSacConfig base = {});

Json to_json(const data::NormStats& norm);
data::NormStats norm_stats_from_json(const Json& j);

/// Shortest text that parses back to the same double ("nan", "inf" too).
std::string format_double(double v);

}  // namespace afguide
