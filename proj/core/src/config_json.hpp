#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "embkit/commands.hpp"

// JSON -> settings conversion shared by the config-file readers and the
// pipeline runner.
namespace embkit::cli::detail {

using nlohmann::json;

/// Throws InvalidArgument naming the first key of `obj` outside `allowed`.
void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view context);

json parse_json_text(std::string_view text, std::string_view context);

mining::MiningConfig mining_config_from(const json& obj);
EmbedderSettings embedder_settings_from(const json& obj);
RerankSettings rerank_settings_from(const json& obj);
rerank::StageConfig stage_config_from(const json& obj, rerank::StageConfig base);
distill::DatasetRegistry registry_from(const json& obj);

}  // namespace embkit::cli::detail
