#include "m3kg/prompts.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "m3kg/error.hpp"

namespace m3kg {

namespace assets {
const std::map<std::string, std::string>& embedded_prompts();
}

namespace {

struct RoleInfo {
    AgentRole role;
    std::string_view wire;
    std::string_view asset;
};

constexpr std::array<RoleInfo, 8> kRoles{{
    {AgentRole::Rewriter, "rewriter", "rewriter"},
    {AgentRole::Extractor, "extractor", "extractor"},
    {AgentRole::Normalizer, "normalizer", "normalizer"},
    {AgentRole::SearcherCallback, "searcher_callback", "searcher_callback"},
    {AgentRole::Selector, "selector", "selector"},
    {AgentRole::Refiner, "refiner", "refiner"},
    {AgentRole::Inspector, "inspector", "inspector"},
    {AgentRole::GraspFilter, "grasp_filter", "grasp_filter"},
}};

const RoleInfo& info(AgentRole role) {
    for (const auto& r : kRoles) {
        if (r.role == role) return r;
    }
    throw InvalidInput("unknown agent role");
}

}  // namespace

std::string_view role_name(AgentRole role) { return info(role).wire; }

std::optional<AgentRole> parse_role(std::string_view name) {
    for (const auto& r : kRoles) {
        if (r.wire == name) return r.role;
    }
    return std::nullopt;
}

PromptLibrary PromptLibrary::defaults() {
    PromptLibrary lib;
    lib.templates_ = assets::embedded_prompts();
    return lib;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
    PromptLibrary lib = defaults();
    for (auto& [name, body] : lib.templates_) {
        const auto file = dir / (name + ".txt");
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file, std::ios::binary);
        if (!in) throw IoError("cannot read prompt override " + file.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        body = ss.str();
        if (!body.empty() && body.back() == '\n') body.pop_back();
    }
    return lib;
}

const std::string& PromptLibrary::agent(AgentRole role) const { return get(std::string(info(role).asset)); }

const std::string& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("no prompt template named '" + name + "'");
    return it->second;
}

}  // namespace m3kg
