#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace m3kg {

enum class AgentRole { Rewriter, Extractor, Normalizer, SearcherCallback, Selector, Refiner, Inspector, GraspFilter };

/// Wire name of a role, used in `/v1/agent/{role}`.
std::string_view role_name(AgentRole role);
std::optional<AgentRole> parse_role(std::string_view name);

/// The prompt templates used by the pipeline. Defaults are compiled in from
/// assets/prompts; a directory of same-named .txt files can override them.
class PromptLibrary {
public:
    static PromptLibrary defaults();
    static PromptLibrary with_overrides(const std::filesystem::path& dir);

    const std::string& agent(AgentRole role) const;
    const std::string& rag() const { return get("rag"); }
    const std::string& winrate() const { return get("winrate"); }
    const std::string& judge() const { return get("judge"); }

    const std::string& get(const std::string& name) const;

private:
    std::map<std::string, std::string> templates_;
};

}  // namespace m3kg
