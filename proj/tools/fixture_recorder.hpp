#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "m3kg/stubs.hpp"

namespace m3kg::tools {

/// Request/response exchanges covering every protocol endpoint, answered by
/// the stub backends configured with `config`. Each entry carries the path,
/// the expected status, both bodies and the names of their schemas. Error
/// cases have a null response body; only its schema is fixed.
std::vector<nlohmann::json> record_exchanges(const stubs::StubConfig& config);

/// One exchange per line, keys sorted, trailing newline.
std::string to_jsonl(const std::vector<nlohmann::json>& exchanges);

}  // namespace m3kg::tools
